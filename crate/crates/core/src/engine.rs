//! Seeded, trial-parallel Monte Carlo simulation of the full link: channel
//! draws, design solving, symbol transmission, detection, and aggregation
//! into BER curves.
//!
//! Every trial derives its own random stream from (seed, SNR index, trial
//! index), so results are bit-identical no matter how trials are
//! partitioned across workers, and the per-point reduction merges integer
//! counts in block order.

use crate::channel::{
    draw_realization, rescale_to_ratio, ChannelRealization, CorrelationRoot, CorrelationSpec,
    Topology,
};
use crate::detector::{accumulate, detect_composite, detect_conventional, ErrorCounts};
use crate::estimation::{degrade_realization, ls_estimate, simulate_training, TrainingPlan};
use crate::modulation::{
    build_composite, build_phase_matrix, primary_symbol, secondary_symbol, ModulationDesign,
    Scheme,
};
use crate::optimizer::solve;
use crate::{Error, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// How the channel strength ratio |h|/g is controlled across trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RatioMode {
    /// Fading redrawn per trial, direct link rescaled to a fixed |h|/g.
    FixedRatio(f64),
    /// Fading redrawn per trial, ratio left wherever the element count puts
    /// it; rows report the observed mean ratio.
    NaturalK,
    /// Deterministic unit-gain channel with the given |h|/g, pinned across
    /// trials; the SNR axis is then the instantaneous reflecting-link SNR.
    FixedChannel(f64),
}

/// Which schemes a sweep evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemeSel {
    Proposed,
    Conventional,
    Both,
}

impl SchemeSel {
    pub fn schemes(&self) -> &'static [Scheme] {
        match self {
            SchemeSel::Proposed => &[Scheme::Proposed],
            SchemeSel::Conventional => &[Scheme::Conventional],
            SchemeSel::Both => &[Scheme::Proposed, Scheme::Conventional],
        }
    }
}

/// Receiver-side channel knowledge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CsiMode {
    Perfect,
    /// Least-squares estimation over the given number of training slots
    /// (a multiple of K+1); designs and decision constellations are built
    /// from the estimates while propagation uses the true channel.
    Estimated { train_slots: usize },
}

/// Declarative description of one experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub topology: Topology,
    pub k: usize,
    pub trials_per_point: u64,
    pub seed: u64,
    /// Reflecting-link SNR grid in dB (instantaneous SNR for fixed-channel
    /// sweeps).
    pub snr_points_db: Vec<f64>,
    pub ratio_mode: RatioMode,
    pub scheme: SchemeSel,
    pub csi: CsiMode,
    pub correlation: Option<CorrelationSpec>,
    /// Structural-mode reflection coefficient a_s (applied as a_s·I).
    pub structural: Complex64,
    pub noise_dbm: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials_per_point == 0 {
            return Err(Error::InvalidConfig("trials must be ≥ 1".into()));
        }
        if self.snr_points_db.is_empty() {
            return Err(Error::InvalidConfig("SNR grid must be nonempty".into()));
        }
        if self.k == 0 {
            return Err(Error::InvalidConfig("element count must be ≥ 1".into()));
        }
        if let Some(c) = &self.correlation {
            if c.elements() != self.k {
                return Err(Error::InvalidConfig(format!(
                    "correlation grid covers {} elements, sweep uses {}",
                    c.elements(),
                    self.k
                )));
            }
        }
        match self.ratio_mode {
            RatioMode::FixedRatio(r) | RatioMode::FixedChannel(r) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(Error::InvalidConfig("ratio must be ≥ 0".into()));
                }
            }
            RatioMode::NaturalK => {}
        }
        if let CsiMode::Estimated { train_slots } = self.csi {
            let k = self.pinned_elements();
            if train_slots == 0 || train_slots % (k + 1) != 0 {
                return Err(Error::InvalidConfig(format!(
                    "training slots {train_slots} must be a positive multiple of {}",
                    k + 1
                )));
            }
        }
        if !self.noise_dbm.is_finite() {
            return Err(Error::InvalidConfig("noise level must be finite".into()));
        }
        Ok(())
    }

    fn pinned_elements(&self) -> usize {
        match self.ratio_mode {
            RatioMode::FixedChannel(_) => 1,
            _ => self.k,
        }
    }

    /// Noise power in linear milliwatt units (ignored by fixed-channel
    /// sweeps, which normalize σ² = 1).
    pub fn sigma2(&self) -> f64 {
        10f64.powf(self.noise_dbm / 10.0)
    }
}

/// Transmit power that realizes a target reflecting-link SNR
/// γ_b = p·σ_f²·σ_hr²/σ², with the per-element variances given by the
/// topology's path losses.
pub fn snr_to_power(gamma_b_db: f64, topology: &Topology, sigma2: f64) -> f64 {
    let gamma = 10f64.powf(gamma_b_db / 10.0);
    gamma * sigma2 / (topology.loss_ptx_ris() * topology.loss_ris_crx())
}

/// Inverse of [`snr_to_power`], for round-trip checks.
pub fn power_to_snr_db(power: f64, topology: &Topology, sigma2: f64) -> f64 {
    (power * topology.loss_ptx_ris() * topology.loss_ris_crx() / sigma2).log10() * 10.0
}

/// Error/ratio accumulator for one (scheme, SNR point).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PointAccum {
    pub counts: ErrorCounts,
    /// Sum of the per-trial true channel strength ratios.
    pub ratio_sum: f64,
}

impl PointAccum {
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            counts: self.counts.merge(&other.counts),
            ratio_sum: self.ratio_sum + other.ratio_sum,
        }
    }
}

/// Bit/error counts with a Wald confidence half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerEstimate {
    pub bits: u64,
    pub errors: u64,
}

impl BerEstimate {
    pub fn p(&self) -> f64 {
        self.errors as f64 / self.bits as f64
    }

    /// 95% Wald half-width 1.96·√(p̂(1−p̂)/n).
    pub fn ci95(&self) -> f64 {
        let p = self.p();
        1.96 * (p * (1.0 - p) / self.bits as f64).sqrt()
    }
}

/// One row of a sweep: a (scheme, ratio, SNR) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub scheme: Scheme,
    pub ratio: f64,
    pub snr_db: f64,
    pub trials: u64,
    pub seed: u64,
    pub counts: ErrorCounts,
}

impl SweepRow {
    pub fn est_x(&self) -> BerEstimate {
        BerEstimate {
            bits: 3 * self.trials,
            errors: self.counts.bit_errors_x,
        }
    }

    pub fn est_s(&self) -> BerEstimate {
        BerEstimate {
            bits: 2 * self.trials,
            errors: self.counts.bit_errors_s,
        }
    }

    pub fn est_c(&self) -> BerEstimate {
        BerEstimate {
            bits: self.trials,
            errors: self.counts.bit_errors_c,
        }
    }

    pub fn scheme_label(&self) -> &'static str {
        match self.scheme {
            Scheme::Proposed => "proposed",
            Scheme::Conventional => "conventional",
        }
    }
}

/// All rows of a sweep, sorted by (scheme, ratio, snr).
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-derived per-trial stream: partitioning trials across workers can
/// never change the draws a trial sees.
pub fn trial_rng(seed: u64, snr_index: u64, trial: u64) -> ChaCha8Rng {
    let mut state = seed;
    let _ = splitmix64(&mut state);
    state ^= snr_index.wrapping_mul(0xA076_1D64_78BD_642F);
    let _ = splitmix64(&mut state);
    state ^= trial.wrapping_mul(0xE703_7ED1_A0B4_28DB);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

fn complex_noise<R: Rng + ?Sized>(rng: &mut R, sigma2: f64) -> Complex64 {
    let s = (sigma2 / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

/// Per-point quantities that do not vary across trials.
struct PointContext {
    power: f64,
    sigma2: f64,
    corr: Option<CorrelationRoot>,
    plan: Option<TrainingPlan>,
    /// Design cache for configurations whose ratio is pinned and known
    /// exactly at the receiver.
    cached_design: Option<ModulationDesign>,
    /// Pinned channel for fixed-channel sweeps.
    pinned: Option<ChannelRealization>,
}

impl PointContext {
    fn new(spec: &SweepSpec, scheme: Scheme, snr_db: f64) -> Result<Self> {
        let (power, sigma2, pinned) = match spec.ratio_mode {
            RatioMode::FixedChannel(r) => {
                let real = ChannelRealization::from_parts(
                    Complex64::new(r, 0.0),
                    vec![Complex64::new(1.0, 0.0)],
                    vec![Complex64::new(1.0, 0.0)],
                    Complex64::new(0.0, 0.0),
                );
                (10f64.powf(snr_db / 10.0), 1.0, Some(real))
            }
            _ => {
                let sigma2 = spec.sigma2();
                (snr_to_power(snr_db, &spec.topology, sigma2), sigma2, None)
            }
        };
        let corr = match (&spec.correlation, &spec.ratio_mode) {
            (Some(c), RatioMode::FixedChannel(_)) => {
                let _ = c;
                None
            }
            (Some(c), _) => Some(CorrelationRoot::new(*c)?),
            (None, _) => None,
        };
        let plan = match spec.csi {
            CsiMode::Estimated { train_slots } => {
                Some(TrainingPlan::new(spec.pinned_elements(), train_slots)?)
            }
            CsiMode::Perfect => None,
        };
        let cached_design = match (scheme, spec.csi, spec.ratio_mode) {
            (Scheme::Conventional, _, _) => Some(ModulationDesign::conventional()),
            (
                Scheme::Proposed,
                CsiMode::Perfect,
                RatioMode::FixedRatio(r) | RatioMode::FixedChannel(r),
            ) => {
                let s = solve(r)?;
                Some(ModulationDesign::new(Scheme::Proposed, s.alpha, s.beta)?)
            }
            _ => None,
        };
        Ok(Self {
            power,
            sigma2,
            corr,
            plan,
            cached_design,
            pinned,
        })
    }
}

fn run_trial(
    spec: &SweepSpec,
    scheme: Scheme,
    ctx: &PointContext,
    snr_index: usize,
    trial: u64,
    counts: &mut ErrorCounts,
) -> Result<f64> {
    let mut rng = trial_rng(spec.seed, snr_index as u64, trial);

    // 1. Channel for this coherence block.
    let real = match (&ctx.pinned, spec.ratio_mode) {
        (Some(p), _) => p.clone(),
        (None, RatioMode::FixedRatio(r)) => {
            let drawn = draw_realization(
                &spec.topology,
                spec.k,
                ctx.corr.as_ref(),
                spec.structural,
                &mut rng,
            );
            rescale_to_ratio(&drawn, r)
        }
        (None, _) => draw_realization(
            &spec.topology,
            spec.k,
            ctx.corr.as_ref(),
            spec.structural,
            &mut rng,
        ),
    };

    // 2. Receiver-side CSI.
    let receiver_view = match &ctx.plan {
        Some(plan) => {
            let observations = simulate_training(plan, &real, ctx.power, ctx.sigma2, &mut rng);
            let est = ls_estimate(&observations, plan, ctx.power, ctx.sigma2)?;
            degrade_realization(&real, &est)
        }
        None => real.clone(),
    };

    // 3. Reflection design from the receiver's knowledge.
    let design = match (&ctx.cached_design, scheme) {
        (Some(d), _) => *d,
        (None, Scheme::Conventional) => ModulationDesign::conventional(),
        (None, Scheme::Proposed) => {
            let s = solve(receiver_view.ratio())?;
            ModulationDesign::new(Scheme::Proposed, s.alpha, s.beta)?
        }
    };
    let phases = build_phase_matrix(&receiver_view);

    // 4. Uniform symbols.
    let s_idx = rng.gen_range(0..4usize);
    let c_idx = rng.gen_range(0..2usize);
    let s = primary_symbol(s_idx);
    let c = secondary_symbol(c_idx);

    // 5. Received sample from the true channel through the configured
    //    reflection pattern.
    let reflected: Complex64 = real
        .cascade()
        .zip(&phases)
        .map(|(v, phi)| v * phi)
        .sum();
    let y = ctx.power.sqrt() * (real.h * s + design.weight(c) * reflected * s)
        + complex_noise(&mut rng, ctx.sigma2);

    // 6. Detection against the receiver's constellation.
    let decision = match scheme {
        Scheme::Proposed => {
            let constellation = build_composite(&receiver_view, &design, ctx.power)?;
            detect_composite(y, &constellation)
        }
        Scheme::Conventional => detect_conventional(y, &receiver_view, &phases, ctx.power),
    };
    accumulate(counts, s_idx, c_idx, &decision);
    Ok(real.ratio())
}

/// Runs a contiguous trial range of one (scheme, SNR point) and returns the
/// mergeable accumulator. Failures carry the offending trial index.
pub fn run_point(
    spec: &SweepSpec,
    scheme: Scheme,
    snr_index: usize,
    trials: std::ops::Range<u64>,
) -> Result<PointAccum> {
    let ctx = PointContext::new(spec, scheme, spec.snr_points_db[snr_index])?;
    run_point_with_ctx(spec, scheme, &ctx, snr_index, trials)
}

fn run_point_with_ctx(
    spec: &SweepSpec,
    scheme: Scheme,
    ctx: &PointContext,
    snr_index: usize,
    trials: std::ops::Range<u64>,
) -> Result<PointAccum> {
    let mut acc = PointAccum::default();
    for trial in trials {
        let ratio = run_trial(spec, scheme, ctx, snr_index, trial, &mut acc.counts)
            .map_err(|e| Error::Trial {
                trial,
                source: Box::new(e),
            })?;
        acc.ratio_sum += ratio;
    }
    Ok(acc)
}

const TRIAL_BLOCK: u64 = 4096;

/// Evaluates every (scheme, SNR) cell of the spec. Trials are partitioned
/// into fixed blocks evaluated in parallel and merged in block order, so
/// the result is bit-identical for any worker count.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let mut rows = Vec::new();
    for scheme in spec.scheme.schemes() {
        for (snr_index, &snr_db) in spec.snr_points_db.iter().enumerate() {
            let ctx = PointContext::new(spec, *scheme, snr_db)?;
            let n = spec.trials_per_point;
            let blocks: Vec<Result<PointAccum>> = (0..n.div_ceil(TRIAL_BLOCK))
                .into_par_iter()
                .map(|b| {
                    let lo = b * TRIAL_BLOCK;
                    let hi = ((b + 1) * TRIAL_BLOCK).min(n);
                    run_point_with_ctx(spec, *scheme, &ctx, snr_index, lo..hi)
                })
                .collect();
            let mut acc = PointAccum::default();
            for block in blocks {
                acc = acc.merge(&block?);
            }
            debug_assert_eq!(
                acc.counts.bit_errors_x,
                acc.counts.bit_errors_s + acc.counts.bit_errors_c
            );
            let ratio = match spec.ratio_mode {
                RatioMode::FixedRatio(r) | RatioMode::FixedChannel(r) => r,
                RatioMode::NaturalK => acc.ratio_sum / n as f64,
            };
            rows.push(SweepRow {
                scheme: *scheme,
                ratio,
                snr_db,
                trials: n,
                seed: spec.seed,
                counts: acc.counts,
            });
        }
    }
    rows.sort_by(|a, b| {
        a.scheme_label()
            .cmp(b.scheme_label())
            .then(a.ratio.partial_cmp(&b.ratio).unwrap())
            .then(a.snr_db.partial_cmp(&b.snr_db).unwrap())
    });
    Ok(SweepResult { rows })
}

/// [`run_sweep`] inside a dedicated thread pool (None uses the global one).
pub fn run_sweep_with_threads(spec: &SweepSpec, threads: Option<usize>) -> Result<SweepResult> {
    match threads {
        None => run_sweep(spec),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
            pool.install(|| run_sweep(spec))
        }
    }
}
