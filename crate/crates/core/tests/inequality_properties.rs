use jdsmooth::inequalities::{emi_bound, longest_interval_cdf};
use proptest::prelude::*;

proptest! {
    #[test]
    fn bound_monotonicity(a in 0.01f64..2.0, d in 0.01f64..5.0, r in 0.01f64..5.0, k in 1.01f64..3.0) {
        prop_assert!(emi_bound(a * k, d, r) > emi_bound(a, d, r));
        prop_assert!(emi_bound(a, d, r * k) > emi_bound(a, d, r));
        prop_assert!(emi_bound(a, d * k, r) < emi_bound(a, d, r));
    }

    #[test]
    fn standard_formula_is_a_cdf(m in 1usize..12, t0 in 0.1f64..10.0) {
        let grid: Vec<f64> = (0..100).map(|i| (t0 * i as f64 / 99.0).min(t0)).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| longest_interval_cdf(m, t0, x).unwrap().standard).collect();
        prop_assert_eq!(vals[0], 0.0);
        prop_assert!((vals[99] - 1.0).abs() < 1e-12);
        for w in vals.windows(2) {
            prop_assert!(w[1] >= w[0], "{:?}", w);
        }
    }
}

#[test]
fn printed_formula_differs_from_the_standard_one() {
    let c = longest_interval_cdf(5, 1.0, 1.0).unwrap();
    assert_eq!(c.standard, 1.0);
    assert!((c.printed - 1.0).abs() > 0.1);
}
