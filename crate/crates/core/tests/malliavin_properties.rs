use jdsmooth::engine::{simulate_path, SimConfig};
use jdsmooth::malliavin::{covariance_samples, reduced_covariance};
use jdsmooth::models;
use proptest::prelude::*;

fn cfg(seed: u64) -> SimConfig {
    SimConfig { dt: 1e-2, seed, cut: 0.02, ..SimConfig::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn covariance_is_symmetric_psd_and_dominated(seed in 0u64..10_000, u in proptest::collection::vec(-1.0f64..1.0, 2)) {
        prop_assume!(u.iter().any(|c| c.abs() > 1e-3));
        let m = models::paper_example(1.5, &models::DEFAULT_JUMP_PROFILE).unwrap();
        let path = simulate_path(&m, &[0.3, -0.1], &cfg(seed), 0).unwrap();
        let c = reduced_covariance(&path, &m.diffusion).unwrap();
        prop_assert_eq!(c.c[(0, 1)], c.c[(1, 0)]);
        prop_assert!(c.raw_lambda_min >= -1e-12);
        let n = (u[0] * u[0] + u[1] * u[1]).sqrt();
        let unit = [u[0] / n, u[1] / n];
        prop_assert!(c.quadratic_form(&unit) >= c.lambda_min - 1e-12);
    }

    #[test]
    fn scaling_the_noise_scales_the_covariance(seed in 0u64..10_000, s in 0.2f64..3.0) {
        // Jacobians here do not depend on the path, so C is quadratic in the noise scale
        let h = models::heisenberg().unwrap();
        let hs = h.with_scaled_diffusion(s);
        let a = covariance_samples(&h, &[0.0; 2], &cfg(seed), 2, None).unwrap();
        let b = covariance_samples(&hs, &[0.0; 2], &cfg(seed), 2, None).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((q / (s * s * p) - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn linear_additive_covariance_is_path_independent() {
    let m = models::linear_additive(1.0, 1.0).unwrap();
    let c = SimConfig { dt: 1e-3, seed: 3, ..SimConfig::default() };
    let s = covariance_samples(&m, &[0.5], &c, 50, None).unwrap();
    let mean = s.iter().sum::<f64>() / s.len() as f64;
    let sd = (s.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / s.len() as f64).sqrt();
    assert!(sd / mean <= 1e-6);
    assert!((mean / 0.432332 - 1.0).abs() < 1e-2);
}
