//! Flat key=value configuration files for sweeps, with CLI flag overrides.
//! The format is deliberately minimal: one `key = value` per line, `#`
//! comments, optional `[section]` headers ignored.

use crate::CliError;
use num_complex::Complex64;
use srris_core::channel::{CorrelationSpec, Topology};
use srris_core::engine::{CsiMode, RatioMode, SchemeSel, SweepSpec};
use std::collections::BTreeMap;
use std::path::Path;

pub fn parse_snr_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = |_| CliError::Usage(format!("cannot parse SNR grid '{text}'"));
    let points = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(CliError::Usage(format!(
                "SNR range must be start:step:stop, got '{text}'"
            )));
        }
        let start: f64 = parts[0].trim().parse().map_err(bad)?;
        let step: f64 = parts[1].trim().parse().map_err(bad)?;
        let stop: f64 = parts[2].trim().parse().map_err(bad)?;
        if !(step > 0.0) || stop < start {
            return Err(CliError::Usage(format!("bad SNR range '{text}'")));
        }
        let n = ((stop - start) / step).round() as usize + 1;
        (0..n)
            .map(|i| start + i as f64 * step)
            .filter(|&v| v <= stop + 1e-9)
            .collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(bad)?
    };
    if points.is_empty() {
        return Err(CliError::Usage("SNR grid is empty".into()));
    }
    Ok(points)
}

fn parse_pair(text: &str, key: &str) -> Result<[f64; 2], CliError> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!("{key} must be 'x,y', got '{text}'")));
    }
    let x = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad {key} value '{text}'")))?;
    let y = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("bad {key} value '{text}'")))?;
    Ok([x, y])
}

/// Raw key-value map read from a config file.
#[derive(Debug, Default, Clone)]
pub struct ConfigMap {
    values: BTreeMap<String, String>,
}

impl ConfigMap {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with('[') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config line {} is not 'key = value': '{raw}'",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.values.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError> {
        match self.values.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::Usage(format!("bad value for '{key}': '{v}'"))),
        }
    }

    /// Assembles the sweep description, applying defaults for anything the
    /// config and flags left unset.
    pub fn to_sweep_spec(&self) -> Result<SweepSpec, CliError> {
        let default_topo = Topology::default_layout();
        let ptx = match self.get("ptx") {
            Some(v) => parse_pair(v, "ptx")?,
            None => default_topo.ptx,
        };
        let ris = match self.get("ris") {
            Some(v) => parse_pair(v, "ris")?,
            None => default_topo.ris,
        };
        let crx = match self.get("crx") {
            Some(v) => parse_pair(v, "crx")?,
            None => default_topo.crx,
        };
        let topology = Topology::new(
            ptx,
            ris,
            crx,
            self.parse("exp_direct", default_topo.exp_direct)?,
            self.parse("exp_ptx_ris", default_topo.exp_ptx_ris)?,
            self.parse("exp_ris_crx", default_topo.exp_ris_crx)?,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?;

        let k: usize = self.parse("k", 16)?;
        let trials: u64 = self.parse("trials", 10_000)?;
        if trials == 0 {
            return Err(CliError::Usage("trials must be ≥ 1".into()));
        }
        let seed: u64 = self.parse("seed", 1)?;
        let snr_points_db = match self.get("snr_db") {
            Some(v) => parse_snr_grid(v)?,
            None => return Err(CliError::Usage("missing 'snr_db' grid".into())),
        };

        let channel = self.get("channel").unwrap_or("fading");
        let ratio_text = self.get("ratio").unwrap_or("natural");
        let ratio_mode = match (channel, ratio_text) {
            ("fading", "natural") => RatioMode::NaturalK,
            ("fading", r) => {
                let ratio: f64 = r
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad ratio '{r}'")))?;
                if !(ratio >= 0.0) {
                    return Err(CliError::Usage("ratio must be ≥ 0".into()));
                }
                RatioMode::FixedRatio(ratio)
            }
            ("fixed", "natural") => {
                return Err(CliError::Usage(
                    "fixed-channel sweeps need an explicit ratio".into(),
                ))
            }
            ("fixed", r) => {
                let ratio: f64 = r
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad ratio '{r}'")))?;
                if !(ratio >= 0.0) {
                    return Err(CliError::Usage("ratio must be ≥ 0".into()));
                }
                RatioMode::FixedChannel(ratio)
            }
            (c, _) => {
                return Err(CliError::Usage(format!(
                    "channel must be 'fading' or 'fixed', got '{c}'"
                )))
            }
        };

        let scheme = match self.get("scheme").unwrap_or("both") {
            "proposed" => SchemeSel::Proposed,
            "conventional" => SchemeSel::Conventional,
            "both" => SchemeSel::Both,
            s => {
                return Err(CliError::Usage(format!(
                    "scheme must be proposed|conventional|both, got '{s}'"
                )))
            }
        };

        let csi = match self.get("csi").unwrap_or("perfect") {
            "perfect" => CsiMode::Perfect,
            "estimated" => {
                let effective_k = if matches!(ratio_mode, RatioMode::FixedChannel(_)) {
                    1
                } else {
                    k
                };
                let train_slots: usize = self.parse("train_slots", effective_k + 1)?;
                CsiMode::Estimated { train_slots }
            }
            s => {
                return Err(CliError::Usage(format!(
                    "csi must be perfect|estimated, got '{s}'"
                )))
            }
        };

        let correlation = match self.get("spacing") {
            None => None,
            Some(v) => {
                let spacing: f64 = v
                    .parse()
                    .map_err(|_| CliError::Usage(format!("bad spacing '{v}'")))?;
                let k_h: usize = self.parse("kh", k)?;
                let k_v: usize = self.parse("kv", if k_h == 0 { 1 } else { k / k_h.max(1) })?;
                Some(
                    CorrelationSpec::new(k_h, k_v, spacing)
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                )
            }
        };

        let structural = Complex64::new(
            self.parse("structural_re", 0.0)?,
            self.parse("structural_im", 0.0)?,
        );

        let spec = SweepSpec {
            topology,
            k,
            trials_per_point: trials,
            seed,
            snr_points_db,
            ratio_mode,
            scheme,
            csi,
            correlation,
            structural,
            noise_dbm: self.parse("noise_dbm", -100.0)?,
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(spec)
    }
}
