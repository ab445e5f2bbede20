//! Machine-readable outputs: the frozen sweep CSV schema and the JSON run
//! manifest that lets a run be reproduced byte-for-byte.

use crate::CliError;
use serde::{Deserialize, Serialize};
use srris_core::engine::{SweepResult, SweepSpec};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SWEEP_CSV_HEADER: &str = "scheme,ratio,snr_db,trials,ber_x,ber_s,ber_c,ci95_x,ci95_s,ci95_c,bit_errors_x,bit_errors_s,bit_errors_c";

/// Renders the sweep result in the frozen CSV schema (LF endings, UTF-8,
/// shortest round-trip float formatting).
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in &result.rows {
        let (x, s, c) = (row.est_x(), row.est_s(), row.est_c());
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            row.scheme_label(),
            row.ratio,
            row.snr_db,
            row.trials,
            x.p(),
            s.p(),
            c.p(),
            x.ci95(),
            s.ci95(),
            c.ci95(),
            row.counts.bit_errors_x,
            row.counts.bit_errors_s,
            row.counts.bit_errors_c,
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Per-point runtime entry of a manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointRuntime {
    pub scheme: String,
    pub snr_db: f64,
    pub seconds: f64,
}

/// Everything needed to reproduce a sweep byte-for-byte, plus timing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub spec: SweepSpec,
    pub wall_time_s: f64,
    pub points: Vec<PointRuntime>,
}

impl RunManifest {
    pub fn new(spec: SweepSpec, wall_time_s: f64, points: Vec<PointRuntime>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec,
            wall_time_s,
            points,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read manifest {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad manifest {}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

/// Sibling path for the manifest: `runs/x.csv` → `runs/x.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".into());
    csv_path.with_file_name(format!("{stem}.manifest.json"))
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}
