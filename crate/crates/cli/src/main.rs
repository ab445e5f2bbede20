//! `srris`: link-level design and simulation for RIS-assisted symbiotic
//! radio. Subcommands: `optimize` (closed-form reflection split), `sweep`
//! (seeded Monte Carlo BER curves as CSV + manifest), `theory` (analytic
//! BER curves), and `validate` (self-check suite).

mod config;
mod output;
mod validate;

use clap::{Args, Parser, Subcommand};
use config::{parse_snr_grid, ConfigMap};
use num_complex::Complex64;
use output::{manifest_path, sweep_csv, write_file, PointRuntime, RunManifest};
use srris_core::channel::ChannelRealization;
use srris_core::engine::{SchemeSel, SweepResult, SweepSpec};
use srris_core::modulation::{build_composite, ModulationDesign, Scheme};
use srris_core::optimizer::solve;
use srris_core::theory::{ber_8psk_exact, ber_asymptotic, ber_nn_approx, SnrPair};
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or configuration (exit 2).
    Usage(String),
    /// Output path not writable (exit 3).
    Output(String),
    /// Simulation engine failure (exit 4).
    Engine(String),
    /// Validation check failed (exit 1).
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::CheckFailed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Output(_) => 3,
            CliError::Engine(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Output(m)
            | CliError::Engine(m)
            | CliError::CheckFailed(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "srris",
    version,
    about = "Modulation design and BER simulation for RIS-assisted symbiotic radio"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the optimal symbol-invariant/symbol-varying split for a
    /// channel strength ratio.
    Optimize(OptimizeArgs),
    /// Run a Monte Carlo BER sweep and write CSV + manifest.
    Sweep(SweepArgs),
    /// Evaluate analytic BER curves on an SNR grid.
    Theory(TheoryArgs),
    /// Run the validation suite (oracle and property checks).
    Validate(ValidateArgs),
}

#[derive(Args)]
struct OptimizeArgs {
    /// Channel strength ratio |h|/g (≥ 0).
    #[arg(long, allow_hyphen_values = true)]
    ratio: f64,
    /// Emit machine-readable JSON instead of the text report.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Key=value config file (flags override its entries).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Re-run the exact spec stored in a previous run's manifest.
    #[arg(long, conflicts_with = "config")]
    from_manifest: Option<PathBuf>,
    /// Reflecting-link SNR grid in dB: comma list or start:step:stop.
    #[arg(long)]
    snr_db: Option<String>,
    /// Channel strength ratio |h|/g, or "natural".
    #[arg(long, allow_hyphen_values = true)]
    ratio: Option<String>,
    /// Trials per (scheme, SNR) point.
    #[arg(long)]
    trials: Option<u64>,
    /// Base seed for the per-trial random streams.
    #[arg(long)]
    seed: Option<u64>,
    /// proposed | conventional | both.
    #[arg(long)]
    scheme: Option<String>,
    /// perfect | estimated.
    #[arg(long)]
    csi: Option<String>,
    /// Training slots for estimated CSI (multiple of K+1).
    #[arg(long)]
    train_slots: Option<usize>,
    /// Element spacing in wavelengths; enables spatial correlation.
    #[arg(long)]
    spacing: Option<f64>,
    /// Reflecting element count.
    #[arg(long)]
    k: Option<usize>,
    /// fading | fixed (deterministic unit channel).
    #[arg(long)]
    channel: Option<String>,
    /// Structural-mode reflection, real part.
    #[arg(long, allow_hyphen_values = true)]
    structural_re: Option<f64>,
    /// Structural-mode reflection, imaginary part.
    #[arg(long, allow_hyphen_values = true)]
    structural_im: Option<f64>,
    /// Noise power in dBm.
    #[arg(long, allow_hyphen_values = true)]
    noise_dbm: Option<f64>,
    /// Output CSV path (the manifest lands next to it).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TheoryArgs {
    /// Comma list of exact8psk | asymptotic | nn_approx (default: all
    /// applicable).
    #[arg(long)]
    models: Option<String>,
    /// Channel strength ratio |h|/g.
    #[arg(long, allow_hyphen_values = true)]
    ratio: f64,
    /// Reflecting-link SNR grid in dB: comma list or start:step:stop.
    #[arg(long)]
    snr_db: String,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Force the named check to fail (self-test of the harness).
    #[arg(long, value_name = "CHECK")]
    inject_fault: Option<String>,
}

fn main() {
    init_thread_pool();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Theory(args) => cmd_theory(args),
        Command::Validate(args) => cmd_validate(args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

/// Honor the SRRIS_THREADS worker cap before any parallel work starts.
fn init_thread_pool() {
    if let Ok(v) = std::env::var("SRRIS_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), CliError> {
    if !(args.ratio >= 0.0) || !args.ratio.is_finite() {
        return Err(CliError::Usage(format!(
            "ratio must be finite and ≥ 0, got {}",
            args.ratio
        )));
    }
    let s = solve(args.ratio).map_err(|e| CliError::Engine(e.to_string()))?;
    if args.json {
        let range = s
            .beta_phase_range
            .map(|(lo, hi)| serde_json::json!([lo, hi]))
            .unwrap_or(serde_json::Value::Null);
        let doc = serde_json::json!({
            "ratio": args.ratio,
            "case": s.case_id,
            "alpha": s.alpha,
            "beta_re": s.beta.re,
            "beta_im": s.beta.im,
            "beta_abs": s.beta.norm(),
            "beta_phase": s.beta.arg(),
            "dmin": s.dmin,
            "beta_phase_range": range,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("ratio |h|/g : {}", args.ratio);
        println!("case        : {}", s.case_id);
        println!("alpha       : {:.6}", s.alpha);
        println!(
            "beta        : {:.6}{:+.6}j  (|β|={:.6}, ∠β={:.6} rad)",
            s.beta.re,
            s.beta.im,
            s.beta.norm(),
            s.beta.arg()
        );
        println!("dmin        : {:.6}", s.dmin);
        match s.beta_phase_range {
            Some((lo, hi)) => println!("phase range : ({:.6}, {:.6}) rad", lo, hi),
            None => println!("phase range : unique phase"),
        }
    }
    Ok(())
}

fn apply_overrides(cfg: &mut ConfigMap, args: &SweepArgs) {
    if let Some(v) = &args.snr_db {
        cfg.set("snr_db", v.clone());
    }
    if let Some(v) = &args.ratio {
        cfg.set("ratio", v.clone());
    }
    if let Some(v) = args.trials {
        cfg.set("trials", v.to_string());
    }
    if let Some(v) = args.seed {
        cfg.set("seed", v.to_string());
    }
    if let Some(v) = &args.scheme {
        cfg.set("scheme", v.clone());
    }
    if let Some(v) = &args.csi {
        cfg.set("csi", v.clone());
    }
    if let Some(v) = args.train_slots {
        cfg.set("train_slots", v.to_string());
    }
    if let Some(v) = args.spacing {
        cfg.set("spacing", v.to_string());
    }
    if let Some(v) = args.k {
        cfg.set("k", v.to_string());
    }
    if let Some(v) = &args.channel {
        cfg.set("channel", v.clone());
    }
    if let Some(v) = args.structural_re {
        cfg.set("structural_re", v.to_string());
    }
    if let Some(v) = args.structural_im {
        cfg.set("structural_im", v.to_string());
    }
    if let Some(v) = args.noise_dbm {
        cfg.set("noise_dbm", v.to_string());
    }
}

/// Runs the sweep one (scheme, SNR) cell at a time so the manifest can
/// report per-point runtimes; row content is identical to a single
/// `run_sweep` because trial streams depend only on (seed, SNR index,
/// trial).
fn timed_sweep(spec: &SweepSpec) -> Result<(SweepResult, Vec<PointRuntime>), CliError> {
    let mut rows = Vec::new();
    let mut points = Vec::new();
    for scheme in spec.scheme.schemes() {
        let sel = match scheme {
            Scheme::Proposed => SchemeSel::Proposed,
            Scheme::Conventional => SchemeSel::Conventional,
        };
        for (idx, &snr_db) in spec.snr_points_db.iter().enumerate() {
            let mut sub = spec.clone();
            sub.scheme = sel;
            sub.snr_points_db = spec.snr_points_db.clone();
            // Evaluate only this point, preserving the stream index.
            let start = Instant::now();
            let result = run_sweep_single_point(&sub, idx)
                .map_err(|e| CliError::Engine(e.to_string()))?;
            points.push(PointRuntime {
                scheme: result.scheme_label().to_string(),
                snr_db,
                seconds: start.elapsed().as_secs_f64(),
            });
            rows.push(result);
        }
    }
    rows.sort_by(|a, b| {
        a.scheme_label()
            .cmp(b.scheme_label())
            .then(a.ratio.partial_cmp(&b.ratio).unwrap())
            .then(a.snr_db.partial_cmp(&b.snr_db).unwrap())
    });
    Ok((SweepResult { rows }, points))
}

fn run_sweep_single_point(
    spec: &SweepSpec,
    snr_index: usize,
) -> srris_core::Result<srris_core::engine::SweepRow> {
    use srris_core::engine::{run_point, PointAccum, RatioMode, SweepRow};
    spec.validate()?;
    let scheme = spec.scheme.schemes()[0];
    let n = spec.trials_per_point;
    const BLOCK: u64 = 4096;
    use rayon::prelude::*;
    let blocks: Vec<srris_core::Result<PointAccum>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(n);
            run_point(spec, scheme, snr_index, lo..hi)
        })
        .collect();
    let mut acc = PointAccum::default();
    for block in blocks {
        acc = acc.merge(&block?);
    }
    let ratio = match spec.ratio_mode {
        RatioMode::FixedRatio(r) | RatioMode::FixedChannel(r) => r,
        RatioMode::NaturalK => acc.ratio_sum / n as f64,
    };
    Ok(SweepRow {
        scheme,
        ratio,
        snr_db: spec.snr_points_db[snr_index],
        trials: n,
        seed: spec.seed,
        counts: acc.counts,
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<(), CliError> {
    let spec = if let Some(path) = &args.from_manifest {
        RunManifest::load(path)?.spec
    } else {
        let mut cfg = match &args.config {
            Some(path) => ConfigMap::from_file(path)?,
            None => ConfigMap::default(),
        };
        apply_overrides(&mut cfg, &args);
        cfg.to_sweep_spec()?
    };

    let started = Instant::now();
    let (result, points) = timed_sweep(&spec)?;
    let wall = started.elapsed().as_secs_f64();

    let csv = sweep_csv(&result);
    write_file(&args.out, &csv)?;
    let manifest = RunManifest::new(spec, wall, points);
    write_file(&manifest_path(&args.out), &manifest.to_json())?;
    eprintln!(
        "wrote {} rows to {} in {wall:.2}s",
        result.rows.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_theory(args: TheoryArgs) -> Result<(), CliError> {
    if !(args.ratio >= 0.0) || !args.ratio.is_finite() {
        return Err(CliError::Usage("ratio must be finite and ≥ 0".into()));
    }
    let grid = parse_snr_grid(&args.snr_db)?;
    let requested: Vec<String> = match &args.models {
        Some(list) => list.split(',').map(|m| m.trim().to_string()).collect(),
        None => {
            let mut all = vec!["asymptotic".to_string(), "nn_approx".to_string()];
            if args.ratio == 0.0 {
                all.insert(0, "exact8psk".to_string());
            }
            all
        }
    };

    // The exact evaluator's decision sectors only exist for the zero-ratio
    // (8PSK) geometry.
    if requested.iter().any(|m| m == "exact8psk") && args.ratio != 0.0 {
        return Err(CliError::Usage(
            "exact8psk is defined only for ratio 0".into(),
        ));
    }

    // Unit-gain pinned channel carrying the requested ratio, for the
    // nearest-neighbor model.
    let pinned = ChannelRealization::from_parts(
        Complex64::new(args.ratio, 0.0),
        vec![Complex64::new(1.0, 0.0)],
        vec![Complex64::new(1.0, 0.0)],
        Complex64::new(0.0, 0.0),
    );
    let design = solve(args.ratio)
        .and_then(|s| ModulationDesign::new(Scheme::Proposed, s.alpha, s.beta))
        .map_err(|e| CliError::Engine(e.to_string()))?;

    let mut out = String::from("model,snr_db,ber_x,ber_s,ber_c\n");
    for model in &requested {
        for &snr_db in &grid {
            let gamma_b = 10f64.powf(snr_db / 10.0);
            let triple = match model.as_str() {
                "exact8psk" => ber_8psk_exact(gamma_b).map_err(|e| CliError::Engine(e.to_string()))?,
                "asymptotic" => ber_asymptotic(SnrPair {
                    gamma_d: args.ratio * args.ratio * gamma_b,
                    gamma_b,
                }),
                "nn_approx" => {
                    let constellation = build_composite(&pinned, &design, 1.0)
                        .map_err(|e| CliError::Engine(e.to_string()))?;
                    let sigma = (1.0 / gamma_b).sqrt();
                    ber_nn_approx(&constellation, sigma)
                        .map_err(|e| CliError::Engine(e.to_string()))?
                }
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown model '{other}' (exact8psk|asymptotic|nn_approx)"
                    )))
                }
            };
            use std::fmt::Write as _;
            writeln!(
                out,
                "{model},{snr_db},{},{},{}",
                triple.p_x, triple.p_s, triple.p_c
            )
            .expect("writing to a String cannot fail");
        }
    }
    match &args.out {
        Some(path) => write_file(path, &out)?,
        None => print!("{out}"),
    }
    Ok(())
}

fn cmd_validate(args: ValidateArgs) -> Result<(), CliError> {
    if let Some(name) = &args.inject_fault {
        if !validate::known_check(name) {
            return Err(CliError::Usage(format!(
                "unknown check '{name}'; known: {}",
                validate::CHECKS
                    .iter()
                    .map(|c| c.name)
                    .collect::<Vec<_>>()
                    .join(", ")
            )));
        }
    }
    let started = Instant::now();
    let ok = validate::run_all(args.inject_fault.as_deref());
    println!("total: {:.2}s", started.elapsed().as_secs_f64());
    if ok {
        Ok(())
    } else {
        Err(CliError::CheckFailed("validation suite failed".into()))
    }
}
