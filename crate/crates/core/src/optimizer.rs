//! Closed-form solver for the reflection-pattern split (α, β) that maximizes
//! the minimum Euclidean distance of the 8-point composite constellation,
//! subject to the bit-mapping angle constraints and the per-element modulus
//! constraints. The optimum is a function of the channel strength ratio
//! r = |h|/g alone and falls into five regimes; an exhaustive grid oracle is
//! provided as an independent check of the case logic.

use crate::numerics::{bisect_root, Interval};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

/// Upper edge of the regime where a pure-rotation optimum exists (case 2).
pub const RATIO_CASE2_UPPER: f64 = 1.0;
/// Upper edge of the mixed regime (case 3): 2/(√6 − √2) ≈ 1.9319.
pub const RATIO_CASE3_UPPER: f64 = 1.9318516525781366;
/// Upper edge of the constrained-phase regime (case 4): √2 + 1.
pub const RATIO_CASE4_UPPER: f64 = 2.414213562373095;

/// Channel strength ratio classified into the five solver regimes.
///
/// Boundary ratios belong to the higher case (closed on the left).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioRegime {
    pub ratio: f64,
    pub case_id: u8,
}

impl RatioRegime {
    pub fn classify(ratio: f64) -> Result<Self> {
        if !(ratio >= 0.0) || !ratio.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "ratio must be finite and nonnegative, got {ratio}"
            )));
        }
        let case_id = if ratio == 0.0 {
            1
        } else if ratio < RATIO_CASE2_UPPER {
            2
        } else if ratio < RATIO_CASE3_UPPER {
            3
        } else if ratio < RATIO_CASE4_UPPER {
            4
        } else {
            5
        };
        Ok(Self { ratio, case_id })
    }
}

/// Radial tie curves of the minimum-distance regions, all scaled by
/// ξ = r + α̃. Each curve is the |β| locus where two distance terms of the
/// composite constellation coincide; together with the indicator windows
/// they delimit where each distance term is the minimum.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryFunctions {
    /// ξ = ratio + α̃ (nonnegative).
    pub xi: f64,
}

impl BoundaryFunctions {
    pub fn new(xi: f64) -> Self {
        Self { xi }
    }

    /// Tie of 2|β| with √2|ξ−β|.
    pub fn beta1(&self, theta: f64) -> f64 {
        self.xi * (-theta.cos() + (1.0 + theta.cos().powi(2)).sqrt())
    }

    /// Tie of √2|ξ−β| with 2|ξ|.
    pub fn beta2(&self, theta: f64) -> f64 {
        self.xi * (theta.cos() + (1.0 + theta.cos().powi(2)).sqrt())
    }

    /// Tie of 2|β| with √2|ξ−jβ|.
    pub fn beta3(&self, theta: f64) -> f64 {
        self.xi * (theta.sin() + (1.0 + theta.sin().powi(2)).sqrt())
    }

    /// Tie of √2|ξ−jβ| with 2|ξ|.
    pub fn beta4(&self, theta: f64) -> f64 {
        self.xi * (-theta.sin() + (1.0 + theta.sin().powi(2)).sqrt())
    }

    /// Inner envelope: below it, 2|β| is the minimum distance.
    pub fn beta5(&self, theta: f64) -> f64 {
        if theta > -FRAC_PI_4 {
            self.beta1(theta)
        } else if theta > -3.0 * FRAC_PI_4 {
            self.beta3(theta)
        } else {
            self.beta2(theta)
        }
    }

    /// Outer envelope: beyond it, 2|ξ| is the minimum distance.
    pub fn beta6(&self, theta: f64) -> f64 {
        if theta > -FRAC_PI_4 {
            self.beta2(theta)
        } else if theta > -3.0 * FRAC_PI_4 {
            self.beta4(theta)
        } else {
            self.beta1(theta)
        }
    }
}

/// |β| cap implied by the two phase-rotation (bit-mapping) constraints,
/// recast over the phase of β: ξ / (cosθ·(−1)^{𝕀₁(θ)} − sinθ) with
/// 𝕀₁ = 1 on [−π, −π/2].
pub fn c2bar_limit(theta: f64, xi: f64) -> f64 {
    debug_assert!((-PI..=0.0).contains(&theta));
    let flip = if theta <= -FRAC_PI_2 { -1.0 } else { 1.0 };
    xi / (theta.cos() * flip - theta.sin())
}

/// |β| cap implied by the two modulus constraints |α̃ ± β| ≤ 1, recast over
/// the phase of β: √(1 − α̃²sin²θ) − α̃cosθ·(−1)^{𝕀₂(θ)}.
pub fn c4bar_limit(theta: f64, alpha: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    let flip = if theta > -FRAC_PI_2 { 1.0 } else { -1.0 };
    (1.0 - alpha * alpha * theta.sin().powi(2)).sqrt() - alpha * theta.cos() * flip
}

const DISTANCE_SET_LEN: usize = 8;

fn distance_set(alpha: f64, beta: Complex64, ratio: f64) -> [f64; DISTANCE_SET_LEN] {
    let xi = Complex64::new(ratio + alpha, 0.0);
    let jb = Complex64::new(0.0, 1.0) * beta;
    let sq2 = std::f64::consts::SQRT_2;
    [
        2.0 * beta.norm(),
        sq2 * (xi - beta).norm(),
        sq2 * (xi - jb).norm(),
        sq2 * (xi + beta).norm(),
        sq2 * (xi + jb).norm(),
        2.0 * xi.norm(),
        2.0 * (xi - beta).norm(),
        2.0 * (xi + beta).norm(),
    ]
}

/// Minimum Euclidean distance of the composite constellation for a given
/// split, evaluated on the full pairwise distance set.
pub fn dmin_given(alpha: f64, beta: Complex64, ratio: f64) -> f64 {
    distance_set(alpha, beta, ratio)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// Solver output: the optimal split, its minimum distance, the regime, and
/// (cases 4–5) the admissible phase window for β.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub alpha: f64,
    pub beta: Complex64,
    pub dmin: f64,
    pub case_id: u8,
    /// Present when the optimum leaves the phase of β free: (lo, hi) radians.
    pub beta_phase_range: Option<(f64, f64)>,
}

const ROOT_TOL: f64 = 1e-13;

/// The two α̃ transition points, solved from the exact tie equations by
/// bisection on [0, 1]:
/// the first equates the region boundary with the modulus cap at θ = −π/4,
/// the second does the same at θ = −π/2.
pub fn transition_points(ratio: f64) -> Result<(f64, f64)> {
    if !(ratio >= 0.0) {
        return Err(Error::InvalidConfig("ratio must be nonnegative".into()));
    }
    let g1 = |alpha: f64| {
        BoundaryFunctions::new(ratio + alpha).beta1(-FRAC_PI_4) - c4bar_limit(-FRAC_PI_4, alpha)
    };
    let g2 = |alpha: f64| {
        BoundaryFunctions::new(ratio + alpha).beta3(-FRAC_PI_2) - c4bar_limit(-FRAC_PI_2, alpha)
    };
    let unit = Interval::new(0.0, 1.0).unwrap();
    let alpha1 = bisect_root(g1, unit, ROOT_TOL).map_err(|_| {
        Error::NoSolution(format!(
            "first transition point does not exist for ratio {ratio}; the energy split is moot"
        ))
    })?;
    let alpha2 = bisect_root(g2, unit, ROOT_TOL).map_err(|_| {
        Error::NoSolution(format!(
            "second transition point does not exist for ratio {ratio}; the energy split is moot"
        ))
    })?;
    Ok((alpha1, alpha2))
}

/// The literature's fitted approximations of the transition points, kept as
/// a cross-check of the exact roots (they agree to about 1e−2 for r ≤ 2).
pub fn transition_points_fitted(ratio: f64) -> (f64, f64) {
    let a1 = 0.25 * ((8.0 - 0.54 * ratio * ratio).sqrt() - 1.27 * ratio);
    let a2 = 0.43 * (-0.34 * ratio + (-0.68 * ratio * ratio + 4.7).sqrt());
    (a1, a2)
}

/// Best β (and the achieved minimum distance) for a fixed symbol-invariant
/// weight α, following the three-branch structure over [0, α̃₁],
/// [α̃₁, α̃₂], and [α̃₂, 1].
///
/// On the middle branch the optimum sits where the modulus cap meets the
/// inner region envelope; the phase θ₁ solves
/// `c4bar_limit(θ, α) = beta3(θ)` on [−π/2, −π/4] and the magnitude is the
/// common value of the two curves at θ₁ (they coincide with beta1 at
/// θ = −π/4, which is where the closed-form regime lands).
pub fn beta_star_given_alpha(alpha: f64, ratio: f64) -> Result<(Complex64, f64)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig("alpha must lie in [0, 1]".into()));
    }
    let (a1, a2) = transition_points(ratio)?;
    let xi = ratio + alpha;
    let bounds = BoundaryFunctions::new(xi);
    if alpha <= a1 {
        let mag = 0.5 * (6.0f64.sqrt() - 2.0f64.sqrt()) * xi;
        let beta = Complex64::from_polar(mag, -FRAC_PI_4);
        Ok((beta, 2.0 * mag))
    } else if alpha <= a2 {
        let tie = |theta: f64| c4bar_limit(theta, alpha) - bounds.beta3(theta);
        // Guard the bracket edges against round-off on the transition points.
        let theta1 = if tie(-FRAC_PI_4) >= 0.0 {
            -FRAC_PI_4
        } else if tie(-FRAC_PI_2) <= 0.0 {
            -FRAC_PI_2
        } else {
            bisect_root(tie, Interval::new(-FRAC_PI_2, -FRAC_PI_4).unwrap(), ROOT_TOL)?
        };
        let mag = bounds.beta3(theta1);
        Ok((Complex64::from_polar(mag, theta1), 2.0 * mag))
    } else {
        let mag = (1.0 - alpha * alpha).sqrt();
        Ok((Complex64::from_polar(mag, -FRAC_PI_2), 2.0 * mag))
    }
}

/// Closed-form optimal split for a channel strength ratio.
///
/// - case 1 (r = 0): the composite constellation is standard 8PSK.
/// - case 2 (0 < r < 1): α at the second transition point, β purely
///   imaginary.
/// - case 3 (1 ≤ r < 1.9319): α at the first transition point, β on the
///   −π/4 tie node.
/// - case 4 (1.9319 ≤ r < 1 + √2): α = 0, |β| = 1, phase free inside a
///   window; the reported β sits at the window midpoint.
/// - case 5 (r ≥ 1 + √2): α = 0, |β| = 1, phase free in (−π, 0); the
///   reported β sits at −π/2.
pub fn solve(ratio: f64) -> Result<SolverResult> {
    let regime = RatioRegime::classify(ratio)?;
    let result = match regime.case_id {
        1 | 2 => {
            let (_, a2) = transition_points(ratio)?;
            let beta = Complex64::from_polar((1.0 - a2 * a2).sqrt(), -FRAC_PI_2);
            SolverResult {
                alpha: a2,
                beta,
                dmin: dmin_given(a2, beta, ratio),
                case_id: regime.case_id,
                beta_phase_range: None,
            }
        }
        3 => {
            let (a1, _) = transition_points(ratio)?;
            let (beta, _) = beta_star_given_alpha(a1, ratio)?;
            SolverResult {
                alpha: a1,
                beta,
                dmin: dmin_given(a1, beta, ratio),
                case_id: 3,
                beta_phase_range: None,
            }
        }
        4 => {
            let bounds = BoundaryFunctions::new(ratio);
            let upper = bisect_root(
                |theta| bounds.beta1(theta) - 1.0,
                Interval::new(-FRAC_PI_4, 0.0).unwrap(),
                ROOT_TOL,
            )?;
            let lower = bisect_root(
                |theta| bounds.beta3(theta) - 1.0,
                Interval::new(-FRAC_PI_2, -FRAC_PI_4).unwrap(),
                ROOT_TOL,
            )?;
            let beta = Complex64::from_polar(1.0, 0.5 * (lower + upper));
            SolverResult {
                alpha: 0.0,
                beta,
                dmin: dmin_given(0.0, beta, ratio),
                case_id: 4,
                beta_phase_range: Some((lower, upper)),
            }
        }
        _ => {
            let beta = Complex64::from_polar(1.0, -FRAC_PI_2);
            SolverResult {
                alpha: 0.0,
                beta,
                dmin: dmin_given(0.0, beta, ratio),
                case_id: 5,
                beta_phase_range: Some((-PI, 0.0)),
            }
        }
    };
    Ok(result)
}

/// Angle-constraint check evaluated directly on the composite sum/difference
/// points (independent of the recast |β| caps used by the closed form).
fn constraints_hold(alpha: f64, beta: Complex64, ratio: f64, tol: f64) -> bool {
    let xi = Complex64::new(ratio + alpha, 0.0);
    let plus = xi + beta;
    let minus = xi - beta;
    let a_plus = plus.arg();
    let a_minus = minus.arg();
    a_plus >= -FRAC_PI_4 - tol
        && a_plus <= tol
        && a_minus >= -tol
        && a_minus <= FRAC_PI_4 + tol
        && (Complex64::new(alpha, 0.0) + beta).norm() <= 1.0 + tol
        && (Complex64::new(alpha, 0.0) - beta).norm() <= 1.0 + tol
}

/// Exhaustive grid search over α, |β|, and the phase of β, keeping only
/// grid points that satisfy the constraints (checked on the constellation
/// itself) and maximizing the minimum distance. Ties resolve to the
/// lexicographically smallest (α, |β|, θ), so the reduction is
/// deterministic under any parallel partitioning.
pub fn grid_oracle(
    ratio: f64,
    alpha_step: f64,
    mag_step: f64,
    phase_step: f64,
) -> Result<SolverResult> {
    if !(alpha_step > 0.0 && mag_step > 0.0 && phase_step > 0.0) {
        return Err(Error::InvalidConfig("grid steps must be positive".into()));
    }
    let regime = RatioRegime::classify(ratio)?;
    let n_alpha = (1.0 / alpha_step).round() as usize + 1;
    let n_mag = (1.0 / mag_step).round() as usize + 1;
    let n_phase = (PI / phase_step).ceil() as usize + 1;

    #[derive(Clone, Copy)]
    struct Candidate {
        dmin: f64,
        alpha: f64,
        mag: f64,
        theta: f64,
    }

    fn better(a: &Candidate, b: &Candidate) -> bool {
        // Larger dmin wins; exact ties prefer smaller (alpha, mag, theta).
        if a.dmin != b.dmin {
            return a.dmin > b.dmin;
        }
        if a.alpha != b.alpha {
            return a.alpha < b.alpha;
        }
        if a.mag != b.mag {
            return a.mag < b.mag;
        }
        a.theta < b.theta
    }

    let per_alpha: Vec<Option<Candidate>> = (0..n_alpha)
        .into_par_iter()
        .map(|ia| {
            let alpha = (ia as f64 * alpha_step).min(1.0);
            let mut best: Option<Candidate> = None;
            for im in 0..n_mag {
                let mag = (im as f64 * mag_step).min(1.0);
                for ip in 0..n_phase {
                    let theta = (-PI + ip as f64 * phase_step).min(0.0);
                    let beta = Complex64::from_polar(mag, theta);
                    if !constraints_hold(alpha, beta, ratio, 1e-12) {
                        continue;
                    }
                    let cand = Candidate {
                        dmin: dmin_given(alpha, beta, ratio),
                        alpha,
                        mag,
                        theta,
                    };
                    if best.as_ref().is_none_or(|b| better(&cand, b)) {
                        best = Some(cand);
                    }
                }
            }
            best
        })
        .collect();

    let best = per_alpha
        .into_iter()
        .flatten()
        .fold(None::<Candidate>, |acc, cand| match acc {
            Some(b) if better(&b, &cand) => Some(b),
            _ => Some(cand),
        })
        .ok_or_else(|| Error::InvalidConfig("empty feasible grid".into()))?;

    Ok(SolverResult {
        alpha: best.alpha,
        beta: Complex64::from_polar(best.mag, best.theta),
        dmin: best.dmin,
        case_id: regime.case_id,
        beta_phase_range: None,
    })
}
