//! Analytic BER evaluators for the composite link: the exact semi-closed
//! form for the zero-direct-link (8PSK) design via received-phase density
//! integrals, the strong-direct-link asymptotics, and the general
//! nearest-neighbor pairwise approximation.

use crate::modulation::CompositeConstellation;
use crate::numerics::{erf, integrate, q_function, Interval};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Instantaneous SNRs of the direct and reflecting links (linear).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    /// |h|²/σ².
    pub gamma_d: f64,
    /// |g|²/σ² (alignment-maximized reflecting link).
    pub gamma_b: f64,
}

/// Bit error probabilities of the composite, primary, and secondary signals.
///
/// Every evaluator in this module preserves the exact mixture
/// `p_x = (2/3)·p_s + (1/3)·p_c`, reflecting the 2+1 bit split of the
/// composite word.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerTriple {
    pub p_x: f64,
    pub p_s: f64,
    pub p_c: f64,
}

impl BerTriple {
    fn from_parts(p_s: f64, p_c: f64) -> Self {
        Self {
            p_x: 2.0 / 3.0 * p_s + p_c / 3.0,
            p_s,
            p_c,
        }
    }
}

/// Density of the received phase (relative to the transmitted point) for a
/// unit-amplitude symbol in complex Gaussian noise at SNR `gamma_b`:
/// `(1/2π)e^{−γ} + (1/2)√(γ/π)·e^{−γ sin²φ}·cosφ·(1 + erf(√γ cosφ))`.
pub fn phase_pdf(phi: f64, gamma_b: f64) -> f64 {
    debug_assert!(gamma_b >= 0.0);
    let uniform = (0.5 / PI) * (-gamma_b).exp();
    let kernel = (-gamma_b * phi.sin().powi(2)).exp()
        * phi.cos()
        * (1.0 + erf(gamma_b.sqrt() * phi.cos()));
    uniform + 0.5 * (gamma_b / PI).sqrt() * kernel
}

const SECTOR_TOL: f64 = 1e-10;

/// Probability that the received phase lands in the π/4-wide decision
/// sector [a, b] (a sector of the standard 8PSK decision grid).
fn sector_probability(gamma_b: f64, a: f64, b: f64, fold: f64) -> Result<f64> {
    let uniform = (b - a) * fold / (2.0 * PI) * (-gamma_b).exp();
    let kernel = |phi: f64| {
        (-gamma_b * phi.sin().powi(2)).exp() * phi.cos() * (1.0 + erf(gamma_b.sqrt() * phi.cos()))
    };
    let integral = integrate(kernel, Interval::new(a, b)?, SECTOR_TOL)?;
    Ok(uniform + 0.5 * fold * (gamma_b / PI).sqrt() * integral)
}

/// Exact BER of the zero-direct-link design, whose composite constellation
/// is standard 8PSK. Valid only for that geometry; the sector decision
/// regions do not transfer to other designs.
///
/// The four distinct transition probabilities are integrals of the phase
/// density over sectors at ±π/4, ±π/2, ±3π/4, and π from the transmitted
/// point; the opposite sector is folded onto [7π/8, π] with a doubled
/// kernel term.
pub fn ber_8psk_exact(gamma_b: f64) -> Result<BerTriple> {
    if !(gamma_b >= 0.0) {
        return Err(Error::InvalidConfig("SNR must be nonnegative".into()));
    }
    // Neighbor sector (±π/4 rotations).
    let p15 = sector_probability(gamma_b, PI / 8.0, 3.0 * PI / 8.0, 1.0)?;
    // Quarter-turn sector (±π/2).
    let p12 = sector_probability(gamma_b, 3.0 * PI / 8.0, 5.0 * PI / 8.0, 1.0)?;
    // Three-quarter sector (±3π/4).
    let p16 = sector_probability(gamma_b, 5.0 * PI / 8.0, 7.0 * PI / 8.0, 1.0)?;
    // Opposite sector, folded across π.
    let p13 = sector_probability(gamma_b, 7.0 * PI / 8.0, PI, 2.0)?;
    let (p14, p18, p17) = (p12, p15, p16);

    let p_s = 0.5 * (p12 + p14 + p16 + p18) + p13 + p17;
    let p_c = p15 + p16 + p17 + p18;
    Ok(BerTriple::from_parts(p_s, p_c))
}

/// Strong-direct-link limits: the primary stream sees a clean QPSK channel
/// and the secondary stream a clean BPSK channel of twice the reflecting
/// SNR.
pub fn ber_asymptotic(snr: SnrPair) -> BerTriple {
    BerTriple::from_parts(
        q_function(snr.gamma_d.sqrt()),
        q_function((2.0 * snr.gamma_b).sqrt()),
    )
}

/// Nearest-neighbor pairwise approximation for an arbitrary composite
/// constellation at noise level `sigma` (standard deviation per complex
/// dimension): each point's neighbor set contains the points within a
/// factor 1 + 1e−6 of its closest nonzero distance, and each pair
/// contributes Q(μ·d) weighted by the per-signal Hamming distance.
pub fn ber_nn_approx(constellation: &CompositeConstellation, sigma: f64) -> Result<BerTriple> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig("noise level must be positive".into()));
    }
    if !constellation.coincidences.is_empty() {
        return Err(Error::DegenerateConstellation);
    }
    let mu = constellation.gain / (std::f64::consts::SQRT_2 * sigma);
    let points = &constellation.points;
    let mut sum_s = 0.0;
    let mut sum_c = 0.0;
    for i in 0..8 {
        let mut nearest = f64::INFINITY;
        for j in 0..8 {
            if j != i {
                nearest = nearest.min((points[i] - points[j]).norm());
            }
        }
        let cutoff = nearest * (1.0 + 1e-6);
        for j in 0..8 {
            if j == i {
                continue;
            }
            let d = (points[i] - points[j]).norm();
            if d <= cutoff {
                let pep = q_function(mu * d);
                sum_s += pep * constellation.hamming_s(i, j) as f64;
                sum_c += pep * constellation.hamming_c(i, j) as f64;
            }
        }
    }
    Ok(BerTriple::from_parts(sum_s / (8.0 * 2.0), sum_c / 8.0))
}
