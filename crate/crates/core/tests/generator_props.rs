mod common;

use common::*;
use proptest::prelude::*;
use qam_core::numeric::linspace;
use qam_core::{quasi_mean, Direction, GeneratorExpr, WeightedSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid(g: &qam_core::Generator, n: usize) -> Vec<f64> {
    let d = g.domain();
    linspace(d.sample_lo(), d.sample_hi(), n)
}

/// Five-point central difference.
fn central_difference(g: &qam_core::Generator, x: f64, h: f64) -> f64 {
    let e = |t: f64| g.eval(t).unwrap();
    (e(x - 2.0 * h) - 8.0 * e(x - h) + 8.0 * e(x + h) - e(x + 2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn display_parse_round_trip(e in any_expr()) {
        let back: GeneratorExpr = e.to_string().parse().unwrap();
        prop_assert_eq!(back, e);
    }

    #[test]
    fn invert_undoes_eval(g in generator()) {
        let tol = g.tolerances().invert;
        for x in grid(&g, 65) {
            let y = g.eval(x).unwrap();
            let back = g.invert(y).unwrap();
            prop_assert!((back - x).abs() <= 10.0 * tol * x.abs().max(1.0), "{} at {}: {}", g, x, back);
        }
    }

    #[test]
    fn derivative_matches_difference_quotient(g in smooth_generator()) {
        prop_assume!(g.d1_available());
        let tol = g.tolerances().deriv;
        for x in linspace(0.6, 1.9, 27) {
            let d = g.derivative(x, 1).unwrap();
            let fd = central_difference(&g, x, 1e-3);
            prop_assert!((d - fd).abs() <= tol * d.abs().max(1.0), "{} at {}: {} vs {}", g, x, d, fd);
        }
    }

    #[test]
    fn direction_matches_values(g in generator()) {
        let xs = grid(&g, 129);
        let s = g.direction().sign();
        for w in xs.windows(2) {
            let dy = g.eval(w[1]).unwrap() - g.eval(w[0]).unwrap();
            prop_assert!(s * dy > 0.0, "{} between {} and {}", g, w[0], w[1]);
        }
    }

    #[test]
    fn canonical_form_is_increasing_and_keeps_means(g in generator(), seed in any::<u64>()) {
        let c = g.canonicalize();
        prop_assert_eq!(c.direction(), Direction::Increasing);
        let tol = g.tolerances().mean;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for k in 0..100 {
            let s = WeightedSample::random(&mut rng, g.domain(), 1 + k % 6);
            let (a, b) = (quasi_mean(&g, &s).unwrap(), quasi_mean(&c, &s).unwrap());
            prop_assert!((a - b).abs() <= tol, "{} on {}: {} vs {}", g, s, a, b);
        }
    }
}

#[test]
fn piecewise_example_derivatives_away_from_the_cut() {
    let h = gen(PIECEWISE_H, "(0,2)");
    for x in linspace(0.1, 1.9, 19).into_iter().filter(|x| (x - 1.0).abs() > 0.05) {
        let d = h.derivative(x, 1).unwrap();
        let want = if x < 1.0 { 1.0 } else { x };
        assert!((d - want).abs() < 1e-12);
        assert!((central_difference(&h, x, 1e-3) - want).abs() < 1e-6);
    }
}
