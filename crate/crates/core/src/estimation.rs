//! Least-squares estimation of the effective direct link and the cascaded
//! per-element channel from pilot observations taken under DFT training
//! patterns, together with the analytic error variance and the plumbing to
//! run the design pipeline on estimated CSI.

use crate::channel::ChannelRealization;
use crate::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Training schedule: unit-modulus pilots and one reflecting pattern per
/// slot. Row t of `patterns` is `[1, φ_t]`, the leading 1 picking up the
/// direct link; the pattern rows are stacked (K+1)-point DFT rows, so the
/// columns stay mutually orthogonal with squared norm T for any
/// T = m·(K+1).
#[derive(Debug, Clone)]
pub struct TrainingPlan {
    k: usize,
    t: usize,
    patterns: DMatrix<Complex64>,
    pilots: Vec<Complex64>,
}

impl TrainingPlan {
    /// Builds the plan for `k` reflecting elements over `t` slots;
    /// `t` must be a positive multiple of `k + 1`.
    pub fn new(k: usize, t: usize) -> Result<Self> {
        let cols = k + 1;
        if t == 0 || t % cols != 0 {
            return Err(Error::InvalidConfig(format!(
                "training length {t} must be a positive multiple of {cols}"
            )));
        }
        let w = -2.0 * std::f64::consts::PI / cols as f64;
        let patterns = DMatrix::from_fn(t, cols, |row, col| {
            Complex64::from_polar(1.0, w * ((row % cols) * col) as f64)
        });
        Ok(Self {
            k,
            t,
            patterns,
            pilots: vec![Complex64::new(1.0, 0.0); t],
        })
    }

    pub fn elements(&self) -> usize {
        self.k
    }

    pub fn slots(&self) -> usize {
        self.t
    }

    pub fn patterns(&self) -> &DMatrix<Complex64> {
        &self.patterns
    }

    pub fn pilots(&self) -> &[Complex64] {
        &self.pilots
    }

    /// Pilot-weighted design matrix S·Φ₀ (without the √p scale).
    fn design_matrix(&self) -> DMatrix<Complex64> {
        let mut a = self.patterns.clone();
        for (row, pilot) in self.pilots.iter().enumerate() {
            for col in 0..a.ncols() {
                a[(row, col)] *= pilot;
            }
        }
        a
    }
}

/// Estimated CSI: effective direct link, cascaded per-element channel
/// (f_k·conj(h_r_k) convention), and the analytic error variance of the
/// estimator that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiEstimate {
    pub h_hat: Complex64,
    pub v_hat: Vec<Complex64>,
    pub mse_pred: f64,
}

fn gram_inverse(plan: &TrainingPlan) -> Result<DMatrix<Complex64>> {
    let a = plan.design_matrix();
    let gram = a.adjoint() * &a;
    gram.try_inverse().ok_or(Error::SingularGram)
}

/// Analytic estimation error variance tr((σ²/p)·(Φ₀ᴴSᴴSΦ₀)⁻¹); with
/// unit-modulus pilots and DFT patterns this is (σ²/p)·(K+1)/T.
pub fn predict_mse(plan: &TrainingPlan, power: f64, sigma2: f64) -> Result<f64> {
    if !(power > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidConfig(
            "power and noise level must be positive".into(),
        ));
    }
    let inv = gram_inverse(plan)?;
    let trace: Complex64 = (0..inv.nrows()).map(|i| inv[(i, i)]).sum();
    Ok(sigma2 / power * trace.re)
}

/// Least-squares solve of the training observations: recovers
/// [h; v] = (√p·S·Φ₀)⁺·y. Noiseless observations reproduce the channel to
/// numerical precision.
pub fn ls_estimate(
    observations: &[Complex64],
    plan: &TrainingPlan,
    power: f64,
    sigma2: f64,
) -> Result<CsiEstimate> {
    if observations.len() != plan.slots() {
        return Err(Error::InvalidConfig(format!(
            "expected {} observations, got {}",
            plan.slots(),
            observations.len()
        )));
    }
    let a = plan.design_matrix();
    let y = nalgebra::DVector::from_column_slice(observations);
    let rhs = a.adjoint() * y / Complex64::from(power.sqrt());
    let solution = gram_inverse(plan)? * rhs;
    let h_hat = solution[0];
    let v_hat = solution.iter().skip(1).copied().collect();
    Ok(CsiEstimate {
        h_hat,
        v_hat,
        mse_pred: predict_mse(plan, power, sigma2)?,
    })
}

/// Synthesizes the training observations for a channel realization:
/// y_t = √p·s_t·(h + φ_t·v) + CN(0, σ²) with v the cascaded channel.
pub fn simulate_training<R: Rng + ?Sized>(
    plan: &TrainingPlan,
    real: &ChannelRealization,
    power: f64,
    sigma2: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    assert_eq!(plan.elements(), real.elements());
    let v: Vec<Complex64> = real.cascade().collect();
    let sqrt_p = power.sqrt();
    let noise_scale = (sigma2 / 2.0).sqrt();
    (0..plan.slots())
        .map(|t| {
            let mut value = real.h;
            for (m, vm) in v.iter().enumerate() {
                value += plan.patterns[(t, m + 1)] * vm;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            sqrt_p * plan.pilots[t] * value + Complex64::new(re, im) * noise_scale
        })
        .collect()
}

/// Builds the realization the design pipeline should see under estimated
/// CSI: the effective direct link and the cascaded products are replaced by
/// their estimates (structural reflection is already inside the estimated
/// h). Received samples must still be generated from the true channel.
pub fn degrade_realization(real: &ChannelRealization, est: &CsiEstimate) -> ChannelRealization {
    assert_eq!(real.elements(), est.v_hat.len());
    ChannelRealization::from_parts(
        est.h_hat,
        est.v_hat.clone(),
        vec![Complex64::new(1.0, 0.0); est.v_hat.len()],
        Complex64::new(0.0, 0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, Topology};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_short_or_misaligned_training() {
        assert!(TrainingPlan::new(4, 0).is_err());
        assert!(TrainingPlan::new(4, 7).is_err());
        assert!(TrainingPlan::new(8, 16).is_err());
        assert!(TrainingPlan::new(8, 18).is_ok());
    }

    #[test]
    fn dft_gram_is_scaled_identity() {
        for (k, t) in [(4, 5), (4, 15), (8, 9), (8, 36)] {
            let plan = TrainingPlan::new(k, t).unwrap();
            let a = plan.design_matrix();
            let gram = a.adjoint() * &a;
            for i in 0..=k {
                for j in 0..=k {
                    let expect = if i == j { t as f64 } else { 0.0 };
                    assert!(
                        (gram[(i, j)] - Complex64::new(expect, 0.0)).norm() <= 1e-10 * t as f64,
                        "k={k} t={t} entry ({i},{j})"
                    );
                }
            }
        }
    }

    #[test]
    fn unit_modulus_patterns_and_pilots() {
        let plan = TrainingPlan::new(5, 12).unwrap();
        for z in plan.patterns().iter() {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        for p in plan.pilots() {
            assert!((p.norm() - 1.0).abs() < 1e-12);
        }
        // Leading column is the all-ones direct-link column.
        for t in 0..plan.slots() {
            assert!((plan.patterns()[(t, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn predicted_mse_reference_values() {
        let k = 8;
        let sigma2 = 0.3;
        let power = 2.5;
        let base = predict_mse(&TrainingPlan::new(k, 9).unwrap(), power, sigma2).unwrap();
        assert!((base - sigma2 / power).abs() < 1e-12);
        let doubled = predict_mse(&TrainingPlan::new(k, 18).unwrap(), power, sigma2).unwrap();
        assert!((doubled - 0.5 * base).abs() < 1e-12);
        let more_power =
            predict_mse(&TrainingPlan::new(k, 9).unwrap(), 2.0 * power, sigma2).unwrap();
        assert!((more_power - 0.5 * base).abs() < 1e-12);
    }

    #[test]
    fn noiseless_observations_recover_truth() {
        let topo = Topology::default_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let real = draw_realization(&topo, 6, None, Complex64::new(0.3, 0.2), &mut rng);
        let plan = TrainingPlan::new(6, 14).unwrap();
        let power = 4.0;
        let y = simulate_training(&plan, &real, power, 0.0, &mut rng)
            .into_iter()
            .collect::<Vec<_>>();
        let est = ls_estimate(&y, &plan, power, 1e-12).unwrap();
        let scale = real.h.norm().max(1e-12);
        assert!((est.h_hat - real.h).norm() <= 1e-10 * scale);
        for (v_hat, v) in est.v_hat.iter().zip(real.cascade()) {
            assert!((v_hat - v).norm() <= 1e-10 * scale.max(v.norm()));
        }
    }

    #[test]
    fn estimate_is_invariant_to_joint_scaling() {
        let topo = Topology::default_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let real = draw_realization(&topo, 4, None, Complex64::new(0.0, 0.0), &mut rng);
        let plan = TrainingPlan::new(4, 10).unwrap();
        let y = simulate_training(&plan, &real, 1.0, 0.0, &mut rng);
        let est1 = ls_estimate(&y, &plan, 1.0, 1.0).unwrap();
        let y4: Vec<Complex64> = y.iter().map(|z| z * 2.0).collect();
        let est2 = ls_estimate(&y4, &plan, 4.0, 1.0).unwrap();
        assert!((est1.h_hat - est2.h_hat).norm() <= 1e-12 * est1.h_hat.norm().max(1e-12));
    }

    #[test]
    fn empirical_mse_matches_prediction() {
        // 10⁴ noisy estimates at unit-scale channels. The per-run squared
        // error is χ²-like with 2(K+1) degrees of freedom, so the sample
        // mean is far inside the 5% band.
        let k = 8;
        let plan = TrainingPlan::new(k, 18).unwrap();
        let power = 3.0;
        let sigma2 = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let real = ChannelRealization::from_parts(
            Complex64::new(0.8, -0.4),
            (0..k)
                .map(|i| Complex64::from_polar(1.0, 0.37 * i as f64))
                .collect(),
            vec![Complex64::new(1.0, 0.0); k],
            Complex64::new(0.0, 0.0),
        );
        let truth: Vec<Complex64> = std::iter::once(real.h).chain(real.cascade()).collect();
        let runs = 10_000;
        let mut acc = 0.0;
        let mut mean_err = vec![Complex64::new(0.0, 0.0); k + 1];
        for _ in 0..runs {
            let y = simulate_training(&plan, &real, power, sigma2, &mut rng);
            let est = ls_estimate(&y, &plan, power, sigma2).unwrap();
            let got: Vec<Complex64> = std::iter::once(est.h_hat)
                .chain(est.v_hat.iter().copied())
                .collect();
            for (i, (g, t)) in got.iter().zip(&truth).enumerate() {
                acc += (g - t).norm_sqr();
                mean_err[i] += g - t;
            }
        }
        let empirical = acc / runs as f64;
        let predicted = predict_mse(&plan, power, sigma2).unwrap();
        assert!(
            (empirical - predicted).abs() <= 0.05 * predicted,
            "empirical {empirical:e} vs predicted {predicted:e}"
        );
        // Unbiasedness: component means within 3 standard errors.
        let per_component_var = predicted / (k + 1) as f64;
        let se = (per_component_var / runs as f64).sqrt();
        for (i, e) in mean_err.iter().enumerate() {
            let m = *e / runs as f64;
            assert!(
                m.re.abs() <= 3.0 * se && m.im.abs() <= 3.0 * se,
                "component {i} biased: {m}"
            );
        }
    }

    #[test]
    fn perfect_estimate_reproduces_design_pipeline() {
        use crate::modulation::{build_composite, ModulationDesign, Scheme};
        use crate::optimizer::solve;

        let topo = Topology::default_layout();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let real = draw_realization(&topo, 5, None, Complex64::new(0.1, 0.1), &mut rng);
        let est = CsiEstimate {
            h_hat: real.h,
            v_hat: real.cascade().collect(),
            mse_pred: 1e-30,
        };
        let degraded = degrade_realization(&real, &est);
        assert!((degraded.h - real.h).norm() < 1e-15);
        assert!((degraded.g - real.g).abs() < 1e-12 * real.g);

        let s_true = solve(real.ratio()).unwrap();
        let s_est = solve(degraded.ratio()).unwrap();
        assert!((s_true.alpha - s_est.alpha).abs() < 1e-12);
        let d_true = ModulationDesign::new(Scheme::Proposed, s_true.alpha, s_true.beta).unwrap();
        let c_true = build_composite(&real, &d_true, 1.0).unwrap();
        let c_est = build_composite(&degraded, &d_true, 1.0).unwrap();
        for (a, b) in c_true.points.iter().zip(&c_est.points) {
            assert!((a - b).norm() <= 1e-12);
        }
    }
}
