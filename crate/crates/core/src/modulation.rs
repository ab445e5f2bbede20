//! Constellations and mapping rules: Gray-labeled QPSK for the primary
//! signal, antipodal BPSK for the secondary signal, the common alignment
//! phase vector, per-element reflection coefficients, and the 8-point
//! composite constellation with its 3-bit labels.

use crate::channel::ChannelRealization;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Gray-labeled unit-energy QPSK, quadrant order.
pub const PRIMARY_LABELS: [u8; 4] = [0b00, 0b01, 0b11, 0b10];

/// Primary symbol for index 0..3: (1/√2)·{1+j, −1+j, −1−j, 1−j}.
pub fn primary_symbol(index: usize) -> Complex64 {
    const S: f64 = std::f64::consts::FRAC_1_SQRT_2;
    match index {
        0 => Complex64::new(S, S),
        1 => Complex64::new(-S, S),
        2 => Complex64::new(-S, -S),
        3 => Complex64::new(S, -S),
        _ => panic!("primary symbol index out of range"),
    }
}

/// Secondary symbol for index 0..1: {+1, −1}, mapped to bits {1, 0}.
pub fn secondary_symbol(index: usize) -> f64 {
    match index {
        0 => 1.0,
        1 => -1.0,
        _ => panic!("secondary symbol index out of range"),
    }
}

/// Bit carried by a secondary symbol: +1 → 1, −1 → 0.
pub fn secondary_bit(index: usize) -> u8 {
    match index {
        0 => 1,
        1 => 0,
        _ => panic!("secondary symbol index out of range"),
    }
}

/// Which reflection-pattern family a design belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Symbol-invariant + symbol-varying split (α, β).
    Proposed,
    /// Pure multiplicative modulation: α = 0, β = 1.
    Conventional,
}

/// Common-phase reflection split: coefficient (α + β·c) on every element.
///
/// The modulus constraints |α ± β| ≤ 1 (up to 1e−9 slack) are enforced at
/// construction, so rounded literature values that overshoot the unit disk
/// are rejected rather than silently clamped; designs should always come
/// from the solver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationDesign {
    pub scheme: Scheme,
    pub alpha: f64,
    pub beta: Complex64,
}

impl ModulationDesign {
    pub fn new(scheme: Scheme, alpha: f64, beta: Complex64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(Error::InvalidConfig(
                "symbol-invariant weight must be nonnegative".into(),
            ));
        }
        let plus = (alpha + beta).norm();
        let minus = (alpha - beta).norm();
        let worst = plus.max(minus);
        if worst > 1.0 + 1e-9 {
            return Err(Error::ModulusViolation { modulus: worst });
        }
        Ok(Self {
            scheme,
            alpha,
            beta,
        })
    }

    /// Conventional benchmark: full reflection flipped by the secondary bit.
    pub fn conventional() -> Self {
        Self {
            scheme: Scheme::Conventional,
            alpha: 0.0,
            beta: Complex64::new(1.0, 0.0),
        }
    }

    /// Reflection coefficient α + β·c for a secondary symbol.
    pub fn weight(&self, c: f64) -> Complex64 {
        self.alpha + self.beta * c
    }
}

/// Common alignment phase vector: entry k is e^{j(∠h − ∠(f_k·conj(h_r_k)))},
/// with the e^{j∠h} factor taken as 1 when h = 0. Every entry has unit
/// modulus; applying it turns the cascaded link into e^{j∠h}·g.
pub fn build_phase_matrix(real: &ChannelRealization) -> Vec<Complex64> {
    let h_phase = if real.h.norm() == 0.0 {
        0.0
    } else {
        real.h.arg()
    };
    real.align_phases
        .iter()
        .map(|&p| Complex64::from_polar(1.0, h_phase + p))
        .collect()
}

/// Per-element reflection coefficients (α + β·c)·Φ_k for one secondary
/// symbol. Fails with [`Error::ModulusViolation`] if any coefficient leaves
/// the unit disk by more than 1e−9.
pub fn reflection_coeffs(
    design: &ModulationDesign,
    phases: &[Complex64],
    c: f64,
) -> Result<Vec<Complex64>> {
    let w = design.weight(c);
    let modulus = w.norm();
    if modulus > 1.0 + 1e-9 {
        return Err(Error::ModulusViolation { modulus });
    }
    Ok(phases.iter().map(|phi| w * phi).collect())
}

/// The 8-point composite constellation with provenance and 3-bit labels.
///
/// Point order is (primary index, secondary index) row-major:
/// `i = 2·s_idx + c_idx`. The label word is `[s bit1, s bit0, c bit]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeConstellation {
    pub points: [Complex64; 8],
    pub labels: [u8; 8],
    /// Generating (primary index, secondary index) per point.
    pub provenance: [(usize, usize); 8],
    /// Receiver-side scale √p·g.
    pub gain: f64,
    /// Pairs of coincident points (reported, never merged).
    pub coincidences: Vec<(usize, usize)>,
}

impl CompositeConstellation {
    /// 3-bit label for a (primary, secondary) index pair.
    pub fn label_for(s_idx: usize, c_idx: usize) -> u8 {
        (PRIMARY_LABELS[s_idx] << 1) | secondary_bit(c_idx)
    }

    /// Hamming distance between the full 3-bit labels of two points.
    pub fn hamming_x(&self, i: usize, j: usize) -> u32 {
        (self.labels[i] ^ self.labels[j]).count_ones()
    }

    /// Hamming distance between the primary bits of two points.
    pub fn hamming_s(&self, i: usize, j: usize) -> u32 {
        ((self.labels[i] >> 1) ^ (self.labels[j] >> 1)).count_ones()
    }

    /// Hamming distance between the secondary bits of two points.
    pub fn hamming_c(&self, i: usize, j: usize) -> u32 {
        ((self.labels[i] ^ self.labels[j]) & 1).count_ones()
    }
}

/// Builds the composite constellation for a channel and design under
/// transmit power `power`. Point i is
/// `(h/g + (α + β·c_i)·e^{j∠h})·s_i`, the received signal being
/// `√p·g·x + noise`; with an aligned channel whose h is real this reduces to
/// `(|h|/g + α + β·c_i)·s_i`.
pub fn build_composite(
    real: &ChannelRealization,
    design: &ModulationDesign,
    power: f64,
) -> Result<CompositeConstellation> {
    if !(real.g > 0.0) {
        return Err(Error::DegenerateChannel);
    }
    let rot = if real.h.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, real.h.arg())
    };
    let h_over_g = real.h / real.g;

    let mut points = [Complex64::new(0.0, 0.0); 8];
    let mut labels = [0u8; 8];
    let mut provenance = [(0usize, 0usize); 8];
    for s_idx in 0..4 {
        for c_idx in 0..2 {
            let i = 2 * s_idx + c_idx;
            let c = secondary_symbol(c_idx);
            points[i] = (h_over_g + design.weight(c) * rot) * primary_symbol(s_idx);
            labels[i] = CompositeConstellation::label_for(s_idx, c_idx);
            provenance[i] = (s_idx, c_idx);
        }
    }

    let scale = points.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(1e-300);
    let mut coincidences = Vec::new();
    for i in 0..8 {
        for j in (i + 1)..8 {
            if (points[i] - points[j]).norm() <= tol {
                coincidences.push((i, j));
            }
        }
    }

    Ok(CompositeConstellation {
        points,
        labels,
        provenance,
        gain: power.sqrt() * real.g,
        coincidences,
    })
}
