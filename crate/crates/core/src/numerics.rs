//! Scalar and matrix numerical primitives shared by the other modules:
//! Gaussian tail/erf, adaptive Simpson quadrature, bisection root finding,
//! and the symmetric square root of a positive semidefinite matrix.
//!
//! Everything here is pure and reentrant.

use crate::{Error, Result};
use nalgebra::DMatrix;

/// A finite interval `[lo, hi]` in radians (or any real unit).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Builds an interval, requiring `lo < hi` and both endpoints finite.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidConfig(format!(
                "interval [{lo}, {hi}] must be finite with lo < hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Real symmetric matrix assumed positive semidefinite up to round-off.
///
/// Symmetry is enforced at construction; the eigenvalue check happens in
/// [`psd_sqrt`], where small negative eigenvalues (≥ −1e−10) are clamped.
#[derive(Debug, Clone)]
pub struct PsdMatrix {
    entries: DMatrix<f64>,
}

impl PsdMatrix {
    /// Wraps a square symmetric matrix (entries must match to 1e−12).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::InvalidConfig("matrix must be square".into()));
        }
        let n = entries.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidConfig(format!(
                        "matrix not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Gaussian tail probability Q(t) = P[N(0,1) > t].
///
/// Monotone decreasing, saturating at 0/1 for large |t|.
pub fn q_function(t: f64) -> f64 {
    0.5 * libm::erfc(t / std::f64::consts::SQRT_2)
}

/// Gaussian error function, odd, with range [−1, 1].
pub fn erf(u: f64) -> f64 {
    libm::erf(u)
}

/// Complementary error function, `1 − erf(u)` without cancellation.
pub fn erfc(u: f64) -> f64 {
    libm::erfc(u)
}

/// Adaptive Simpson quadrature of `f` over `iv` with absolute error ≤ `tol`.
///
/// Recursion depth is capped; exceeding it returns [`Error::NonConvergent`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, iv: Interval, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig("tolerance must be positive".into()));
    }
    let (a, b) = (iv.lo, iv.hi);
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    adaptive(&f, a, b, fa, fm, fb, whole, tol, 60, 3)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    force: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // Acceptance is deliberately stricter than the textbook 15·tol rule:
    // the refinement delta of a single level can cancel accidentally while
    // both panels are wrong, so a panel is trusted only when its children
    // confirm at the next level too, and the deeper composite (with
    // per-child Richardson correction) is returned.
    if force == 0 && delta.abs() <= 6.0 * tol {
        let fllm = f(0.5 * (a + lm));
        let flrm = f(0.5 * (lm + m));
        let frlm = f(0.5 * (m + rm));
        let frrm = f(0.5 * (rm + b));
        let left2 = simpson(a, lm, fa, fllm, flm) + simpson(lm, m, flm, flrm, fm);
        let right2 = simpson(m, rm, fm, frlm, frm) + simpson(rm, b, frm, frrm, fb);
        let dl = left2 - left;
        let dr = right2 - right;
        if dl.abs() <= 3.0 * tol && dr.abs() <= 3.0 * tol {
            return Ok(left2 + dl / 15.0 + right2 + dr / 15.0);
        }
    }
    if depth == 0 {
        return Err(Error::NonConvergent(format!(
            "refinement budget exhausted on [{a}, {b}]"
        )));
    }
    let next_force = force.saturating_sub(1);
    let lhs = adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, next_force)?;
    let rhs = adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, next_force)?;
    Ok(lhs + rhs)
}

/// Bisection root of a continuous `f` with a sign change over `iv`.
///
/// Returns the bracket midpoint once the bracket width is ≤ `tol`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, iv: Interval, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (iv.lo, iv.hi);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval below f64 resolution
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Symmetric square root `S` of a PSD matrix, with `S·S ≈ R` to 1e−8.
///
/// Eigenvalues in [−1e−10, 0) are treated as round-off and clamped to zero;
/// anything more negative is rejected as [`Error::NotPsd`].
pub fn psd_sqrt(matrix: &PsdMatrix) -> Result<DMatrix<f64>> {
    let eig = matrix.entries.clone().symmetric_eigen();
    let mut min_eig = f64::INFINITY;
    for &v in eig.eigenvalues.iter() {
        min_eig = min_eig.min(v);
    }
    if min_eig < -1e-10 {
        return Err(Error::NotPsd { min_eig });
    }
    let n = matrix.dim();
    let mut scaled = eig.eigenvectors.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        let lambda = eig.eigenvalues[k].max(0.0);
        col *= lambda.sqrt();
    }
    let mut root = DMatrix::zeros(n, n);
    scaled.mul_to(&eig.eigenvectors.transpose(), &mut root);
    // Symmetrize away round-off from the two multiplications.
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (root[(i, j)] + root[(j, i)]);
            root[(i, j)] = avg;
            root[(j, i)] = avg;
        }
    }
    Ok(root)
}
