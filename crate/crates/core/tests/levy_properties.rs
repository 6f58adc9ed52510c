use jdsmooth::levy::{sample_jumps, JumpSampler, LevyMeasure, Region};
use jdsmooth::rng::{purpose, stream};
use jdsmooth::stats::{mean, variance};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tail_mass_is_non_increasing_in_the_cut(
        kappa in 0.2f64..2.8,
        a in 1e-4f64..0.99,
        frac in 0.0f64..1.0,
    ) {
        let g = LevyMeasure::power_law(kappa).unwrap();
        let b = a + (1.0 - a) * frac;
        let (ma, mb) = (g.tail_mass(a).unwrap(), g.tail_mass(b).unwrap());
        prop_assert!(mb <= ma * (1.0 + 1e-12));
        let closed = g.tail_mass_closed_form(a).unwrap();
        prop_assert!((ma - closed).abs() <= 1e-8 * closed.max(1e-300));
    }

    #[test]
    fn band_masses_add_up(kappa in 0.5f64..2.5, lo in 1e-3f64..0.3, mid in 0.31f64..0.7) {
        let g = LevyMeasure::power_law(kappa).unwrap();
        let whole = g.mass(Region::Band { lo, hi: 1.0 }).unwrap();
        let parts = g.mass(Region::Band { lo, hi: mid }).unwrap() + g.mass(Region::Band { lo: mid, hi: 1.0 }).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-8 * whole);
    }
}

#[test]
fn tail_mass_vanishes_at_the_support_edge() {
    let g = LevyMeasure::power_law(1.5).unwrap();
    assert_eq!(g.tail_mass(1.0).unwrap(), 0.0);
    assert!(g.tail_mass(1.0 - 1e-9).unwrap() < 1e-8);
}

#[test]
fn event_counts_are_poisson() {
    let g = LevyMeasure::power_law(1.5).unwrap();
    let (cut, horizon) = (0.05, 1.0);
    let lambda = g.tail_mass(cut).unwrap() * horizon;
    let n = 10_000;
    let counts: Vec<f64> = (0..n)
        .map(|i| sample_jumps(&g, cut, horizon, &mut stream(3, purpose::JUMPS, i)).unwrap().len() as f64)
        .collect();
    let (m, v) = (mean(&counts), variance(&counts));
    let nf = n as f64;
    assert!((m - lambda).abs() <= 4.0 * (lambda / nf).sqrt(), "mean {m} vs {lambda}");
    // Var of the sample variance of a Poisson law: (μ4 − σ⁴ (n−3)/(n−1)) / n with μ4 = λ(1 + 3λ)
    let se_var = ((lambda * (1.0 + 3.0 * lambda) - lambda * lambda * (nf - 3.0) / (nf - 1.0)) / nf).sqrt();
    assert!((v - lambda).abs() <= 4.0 * se_var, "variance {v} vs {lambda}");
}

#[test]
fn sampled_times_are_sorted_and_inside_the_horizon() {
    let g = LevyMeasure::finite_activity_uniform(40.0, 1.0).unwrap();
    let s = JumpSampler::new(&g, Region::Above(0.0)).unwrap();
    assert!((s.rate() - 40.0).abs() < 1e-12);
    for i in 0..50 {
        let jumps = s.sample(2.0, &mut stream(1, purpose::JUMPS, i)).unwrap();
        assert!(jumps.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(jumps.iter().all(|j| (0.0..2.0).contains(&j.time) && j.mark.abs() <= 1.0));
    }
}
