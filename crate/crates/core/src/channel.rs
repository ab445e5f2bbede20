//! Channel generation for one coherence block: Rayleigh fading draws with
//! large-scale path loss, optional spatial correlation across the reflecting
//! elements, structural-mode reflection folded into the effective direct
//! link, and the aligned reflecting gain.

use crate::numerics::{psd_sqrt, PsdMatrix};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Node placement and per-link path-loss exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    /// Primary transmitter position in meters.
    pub ptx: [f64; 2],
    /// Reflecting surface position in meters.
    pub ris: [f64; 2],
    /// Cooperative receiver position in meters.
    pub crx: [f64; 2],
    pub exp_direct: f64,
    pub exp_ptx_ris: f64,
    pub exp_ris_crx: f64,
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl Topology {
    pub fn new(
        ptx: [f64; 2],
        ris: [f64; 2],
        crx: [f64; 2],
        exp_direct: f64,
        exp_ptx_ris: f64,
        exp_ris_crx: f64,
    ) -> Result<Self> {
        let t = Self {
            ptx,
            ris,
            crx,
            exp_direct,
            exp_ptx_ris,
            exp_ris_crx,
        };
        if t.d_direct() <= 0.0 || t.d_ptx_ris() <= 0.0 || t.d_ris_crx() <= 0.0 {
            return Err(Error::DegenerateGeometry(
                "all pairwise distances must be positive".into(),
            ));
        }
        if exp_direct <= 0.0 || exp_ptx_ris <= 0.0 || exp_ris_crx <= 0.0 {
            return Err(Error::DegenerateGeometry(
                "path-loss exponents must be positive".into(),
            ));
        }
        Ok(t)
    }

    /// Benchmark layout: transmitter at the origin, surface at (75 m, 10 m),
    /// receiver at (80 m, 0), exponents 3 / 2.1 / 2.3.
    pub fn default_layout() -> Self {
        Self::new([0.0, 0.0], [75.0, 10.0], [80.0, 0.0], 3.0, 2.1, 2.3)
            .expect("default layout is valid")
    }

    pub fn d_direct(&self) -> f64 {
        dist(self.ptx, self.crx)
    }

    pub fn d_ptx_ris(&self) -> f64 {
        dist(self.ptx, self.ris)
    }

    pub fn d_ris_crx(&self) -> f64 {
        dist(self.ris, self.crx)
    }

    /// Per-element variance of the transmitter→surface fading.
    pub fn loss_ptx_ris(&self) -> f64 {
        path_loss(self.d_ptx_ris(), self.exp_ptx_ris).expect("validated geometry")
    }

    /// Per-element variance of the surface→receiver fading.
    pub fn loss_ris_crx(&self) -> f64 {
        path_loss(self.d_ris_crx(), self.exp_ris_crx).expect("validated geometry")
    }

    /// Variance of the unobstructed direct-link fading.
    pub fn loss_direct(&self) -> f64 {
        path_loss(self.d_direct(), self.exp_direct).expect("validated geometry")
    }
}

/// Uniform planar array geometry for the spatial correlation model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    pub k_h: usize,
    pub k_v: usize,
    /// Element spacing in wavelengths (d/λ).
    pub spacing_over_lambda: f64,
}

impl CorrelationSpec {
    pub fn new(k_h: usize, k_v: usize, spacing_over_lambda: f64) -> Result<Self> {
        if k_h == 0 || k_v == 0 {
            return Err(Error::InvalidConfig("array dimensions must be ≥ 1".into()));
        }
        if !(spacing_over_lambda > 0.0) {
            return Err(Error::InvalidConfig("spacing must be positive".into()));
        }
        Ok(Self {
            k_h,
            k_v,
            spacing_over_lambda,
        })
    }

    pub fn elements(&self) -> usize {
        self.k_h * self.k_v
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Spatial correlation matrix: entry (i, j) = sinc(2‖u_i − u_j‖/λ) for the
/// planar grid u_i = (H(i)·d, V(i)·d) with row-major element indexing.
pub fn correlation_matrix(spec: &CorrelationSpec) -> PsdMatrix {
    let k = spec.elements();
    let pos = |i: usize| -> (f64, f64) {
        let h = (i % spec.k_h) as f64;
        let v = (i / spec.k_h) as f64;
        (h * spec.spacing_over_lambda, v * spec.spacing_over_lambda)
    };
    let entries = DMatrix::from_fn(k, k, |i, j| {
        let (hi, vi) = pos(i);
        let (hj, vj) = pos(j);
        let norm = ((hi - hj).powi(2) + (vi - vj).powi(2)).sqrt();
        sinc(2.0 * norm)
    });
    PsdMatrix::new(entries).expect("sinc matrix is symmetric by construction")
}

/// Precomputed square root of a correlation matrix, reused across draws.
#[derive(Debug, Clone)]
pub struct CorrelationRoot {
    spec: CorrelationSpec,
    sqrt: DMatrix<f64>,
}

impl CorrelationRoot {
    pub fn new(spec: CorrelationSpec) -> Result<Self> {
        let sqrt = psd_sqrt(&correlation_matrix(&spec))?;
        Ok(Self { spec, sqrt })
    }

    pub fn spec(&self) -> &CorrelationSpec {
        &self.spec
    }
}

/// Large-scale path loss 10⁻³·d⁻ξ as a linear power gain.
pub fn path_loss(d: f64, xi: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "distance must be positive, got {d}"
        )));
    }
    Ok(1e-3 * d.powf(-xi))
}

/// All channel quantities for one coherence block.
///
/// The derived fields satisfy, by construction:
/// `h = h_d + a_s·Σ f_k·conj(h_r_k)`, `g = Σ |f_k||h_r_k|`, and
/// `align_phases[k] = −∠(f_k·conj(h_r_k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Unobstructed direct-link gain.
    pub h_d: Complex64,
    /// Transmitter→surface fading, one entry per element.
    pub f: Vec<Complex64>,
    /// Surface→receiver fading, one entry per element.
    pub h_r: Vec<Complex64>,
    /// Structural-mode reflection coefficient (applied as a scalar).
    pub a_s: Complex64,
    /// Effective direct link including structural reflection.
    pub h: Complex64,
    /// Aligned reflecting gain.
    pub g: f64,
    /// Per-element phases that align the cascade, excluding the common
    /// rotation e^{j∠h} (applied by the modulation layer).
    pub align_phases: Vec<f64>,
}

impl ChannelRealization {
    /// Assembles a realization from raw fading values, populating the
    /// derived fields. This is also the hook used by tests to pin fading.
    pub fn from_parts(
        h_d: Complex64,
        f: Vec<Complex64>,
        h_r: Vec<Complex64>,
        a_s: Complex64,
    ) -> Self {
        assert_eq!(f.len(), h_r.len(), "fading vectors must have equal length");
        let mut g = 0.0;
        let mut cascade_sum = Complex64::new(0.0, 0.0);
        let mut align_phases = Vec::with_capacity(f.len());
        for (fk, hk) in f.iter().zip(&h_r) {
            let v = fk * hk.conj();
            g += v.norm();
            cascade_sum += v;
            align_phases.push(-v.arg());
        }
        let h = h_d + a_s * cascade_sum;
        Self {
            h_d,
            f,
            h_r,
            a_s,
            h,
            g,
            align_phases,
        }
    }

    pub fn elements(&self) -> usize {
        self.f.len()
    }

    /// Channel strength ratio |h|/g.
    pub fn ratio(&self) -> f64 {
        if self.g > 0.0 {
            self.h.norm() / self.g
        } else {
            f64::INFINITY
        }
    }

    /// Per-element cascaded products f_k·conj(h_r_k).
    pub fn cascade(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.f.iter().zip(&self.h_r).map(|(fk, hk)| fk * hk.conj())
    }
}

fn unit_cn<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn apply_root(root: &DMatrix<f64>, v: &[Complex64]) -> Vec<Complex64> {
    let re = DVector::from_iterator(v.len(), v.iter().map(|z| z.re));
    let im = DVector::from_iterator(v.len(), v.iter().map(|z| z.im));
    let re = root * re;
    let im = root * im;
    re.iter()
        .zip(im.iter())
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect()
}

/// Draws one coherence block: Rayleigh fading on every link, scaled by the
/// topology's path losses, with optional spatial correlation on the
/// element vectors. Consumes a fixed number of values from `rng`, so equal
/// seeds give identical realizations.
pub fn draw_realization<R: Rng + ?Sized>(
    topology: &Topology,
    k: usize,
    corr: Option<&CorrelationRoot>,
    a_s: Complex64,
    rng: &mut R,
) -> ChannelRealization {
    assert!(k >= 1, "element count must be ≥ 1");
    if let Some(c) = corr {
        assert_eq!(
            c.spec.elements(),
            k,
            "correlation spec must match element count"
        );
    }
    let h_d = unit_cn(rng) * topology.loss_direct().sqrt();
    let mut f: Vec<Complex64> = (0..k).map(|_| unit_cn(rng)).collect();
    let mut h_r: Vec<Complex64> = (0..k).map(|_| unit_cn(rng)).collect();
    if let Some(c) = corr {
        f = apply_root(&c.sqrt, &f);
        h_r = apply_root(&c.sqrt, &h_r);
    }
    let lf = topology.loss_ptx_ris().sqrt();
    let lh = topology.loss_ris_crx().sqrt();
    for z in &mut f {
        *z *= lf;
    }
    for z in &mut h_r {
        *z *= lh;
    }
    ChannelRealization::from_parts(h_d, f, h_r, a_s)
}

/// Rescales the direct link so that |h|/g equals `target_ratio`, preserving
/// the phase of h (a zero target forces h = 0). Only h_d changes; the
/// element fading, and therefore g, is untouched.
pub fn rescale_to_ratio(real: &ChannelRealization, target_ratio: f64) -> ChannelRealization {
    assert!(real.g > 0.0, "aligned gain must be positive to set a ratio");
    assert!(target_ratio >= 0.0, "ratio must be nonnegative");
    let rot = if real.h.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::from_polar(1.0, real.h.arg())
    };
    let h_new = rot * (target_ratio * real.g);
    let cascade_sum: Complex64 = real.cascade().sum();
    let h_d_new = h_new - real.a_s * cascade_sum;
    let mut out = real.clone();
    out.h_d = h_d_new;
    out.h = h_new;
    out
}
