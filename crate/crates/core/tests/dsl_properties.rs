mod common;

use jdsmooth::dsl::{parse_expr, parse_field, Expr, VectorField};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn directional_derivative_matches_central_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = 3;
        let expr = common::random_smooth(&mut rng, e, 4);
        let x = common::random_point(&mut rng, e);
        let dir = common::random_point(&mut rng, e);
        let (value, deriv) = expr.eval_directional(&x, &[], 0.0, &dir).unwrap();
        let h = 1e-6;
        let shifted = |s: f64| {
            let p: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + s * d).collect();
            expr.eval(&p, &[], 0.0).unwrap()
        };
        let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
        prop_assert_eq!(value, expr.eval(&x, &[], 0.0).unwrap());
        prop_assert!((deriv - fd).abs() <= 1e-6 * deriv.abs().max(1.0), "{} vs {} for {}", deriv, fd, expr);
    }

    #[test]
    fn print_then_reparse_evaluates_identically(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let expr = common::random_smooth(&mut rng, 2, 5);
        let text = expr.to_string();
        let back = parse_expr(&text, 2, 0).unwrap();
        for _ in 0..10 {
            let x = common::random_point(&mut rng, 2);
            let (a, b) = (expr.eval(&x, &[], 0.0).unwrap(), back.eval(&x, &[], 0.0).unwrap());
            prop_assert_eq!(a.to_bits(), b.to_bits(), "{}", text);
        }
    }

    #[test]
    fn linear_field_jacobian_is_its_matrix(
        m in proptest::collection::vec(-5i32..=5, 9),
        x in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let comps: Vec<String> = (0..3)
            .map(|i| format!("{}*x1 + {}*x2 + {}*x3", m[3 * i], m[3 * i + 1], m[3 * i + 2]))
            .collect();
        let field = parse_field(&comps, 3, 0).unwrap();
        let j = field.jacobian(&x, &[], 0.0).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                prop_assert_eq!(j[(i, k)], m[3 * i + k] as f64);
            }
        }
    }

    #[test]
    fn symbolic_derivative_agrees_with_dual_numbers(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let expr = common::random_smooth(&mut rng, 2, 4);
        let x = common::random_point(&mut rng, 2);
        for j in 0..2 {
            let mut dir = vec![0.0; 2];
            dir[j] = 1.0;
            let (_, dual) = expr.eval_directional(&x, &[], 0.0, &dir).unwrap();
            let symbolic = expr.diff(jdsmooth::dsl::Var::X(j)).eval(&x, &[], 0.0).unwrap();
            prop_assert!((dual - symbolic).abs() <= 1e-12 * dual.abs().max(1.0));
        }
    }
}

#[test]
fn tape_and_tree_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let expr = common::random_smooth(&mut rng, 3, 5);
        let tape = jdsmooth::dsl::Tape::compile(&expr);
        let x = common::random_point(&mut rng, 3);
        assert_eq!(tape.eval(&x, &[], 0.0).unwrap().to_bits(), expr.eval(&x, &[], 0.0).unwrap().to_bits());
    }
}

#[test]
fn constant_field_has_zero_jacobian() {
    let f = VectorField::constant(&[1.0, -2.0]);
    assert_eq!(f.jacobian(&[0.3, 0.4], &[], 0.0).unwrap().max_abs(), 0.0);
    assert!(Expr::zero().is_zero());
}
