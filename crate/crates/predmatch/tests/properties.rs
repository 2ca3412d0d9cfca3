//! Property suites for the numeric kernels and field diagnostics.

use proptest::prelude::*;

use predmatch::numerics::{
    find_root, integrate_1d, AlphaGrid, AlphaGridSpec, GaussLegendre, NumericsConfig,
};
use predmatch::quantile_match::{gradient_field_check, reconstruct_log_prior_with_gap};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // a rule with n nodes integrates polynomials up to degree 2n - 1 exactly
    #[test]
    fn quadrature_is_exact_on_polynomials(
        coeffs in proptest::collection::vec(-3.0_f64..3.0, 1..12),
        a in -2.0_f64..0.0,
        width in 0.5_f64..3.0,
    ) {
        let b = a + width;
        let n = 8;
        prop_assume!(coeffs.len() <= 2 * n - 1);
        let rule = GaussLegendre::cached(n);
        let poly = |x: f64| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c * x.powi(k as i32))
                .sum::<f64>()
        };
        let num = rule.integrate(a, b, poly).unwrap();
        let exact: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0))
            .sum();
        prop_assert!((num - exact).abs() <= 1e-13 * (1.0 + exact.abs()));
    }

    // bracketed roots of strictly increasing cubics are found to tolerance
    #[test]
    fn root_finder_on_monotone_cubics(
        root in -2.0_f64..2.0,
        scale in 0.1_f64..4.0,
        cubic in 0.0_f64..2.0,
    ) {
        let f = |x: f64| scale * (x - root) + cubic * (x - root).powi(3);
        let found = find_root(f, -7.0, 7.0, 1e-13, 200).unwrap();
        prop_assert!(f(found).abs() <= 1e-12);
        prop_assert!((found - root).abs() <= 1e-9);
    }

    // the adaptive quadrature error estimate is honest for smooth integrands
    #[test]
    fn quadrature_error_estimate_bounds_true_error(freq in 0.5_f64..4.0) {
        let r = integrate_1d(|x| (freq * x).sin(), 0.0, 2.0, 1e-11, 12).unwrap();
        let exact = (1.0 - (2.0 * freq).cos()) / freq;
        prop_assert!((r.value - exact).abs() <= r.err_est.max(1e-12));
    }

    // level grids always form a probability partition strictly inside (0,1)
    #[test]
    fn alpha_grids_are_proper(levels in 4_usize..16, nodes in 2_usize..10) {
        let grid = AlphaGrid::graded(&AlphaGridSpec { levels, nodes_per_panel: nodes }).unwrap();
        let total: f64 = grid.weights.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(grid.nodes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(grid.nodes[0] > 0.0 && *grid.nodes.last().unwrap() < 1.0);
    }

    // gradients of random quadratic forms pass the curl test and reconstruct
    // path independently
    #[test]
    fn quadratic_gradient_fields_are_conservative(
        axx in 0.2_f64..2.0,
        ayy in 0.2_f64..2.0,
        axy in -0.9_f64..0.9,
        bx in -1.0_f64..1.0,
        by in -1.0_f64..1.0,
    ) {
        let cfg = NumericsConfig::default();
        let field = |t: &[f64]| -> predmatch::Result<Vec<f64>> {
            Ok(vec![
                2.0 * axx * t[0] + axy * t[1] + bx,
                axy * t[0] + 2.0 * ayy * t[1] + by,
            ])
        };
        let grid = vec![vec![0.0, 0.0], vec![0.7, -0.4]];
        let check = gradient_field_check(field, &grid, &cfg).unwrap();
        prop_assert!(check.is_gradient, "curl {}", check.max_curl);

        let from = vec![0.0, 0.0];
        let to = vec![0.8, -0.6];
        let (value, gap) = reconstruct_log_prior_with_gap(field, &from, &to, &cfg).unwrap();
        let scalar = |t: &[f64]| {
            axx * t[0] * t[0] + ayy * t[1] * t[1] + axy * t[0] * t[1] + bx * t[0] + by * t[1]
        };
        prop_assert!(gap <= 1e-9);
        prop_assert!((value - (scalar(&to) - scalar(&from))).abs() <= 1e-8);
    }

    // rotation-like fields are rejected by reconstruction whenever the
    // rotation strength is visible
    #[test]
    fn rotation_fields_are_rejected(strength in 0.1_f64..2.0) {
        let cfg = NumericsConfig::default();
        let field = |t: &[f64]| -> predmatch::Result<Vec<f64>> {
            Ok(vec![-strength * t[1], strength * t[0]])
        };
        let r = reconstruct_log_prior_with_gap(field, &[0.0, 0.0], &[1.0, 1.0], &cfg);
        prop_assert!(r.is_err());
    }
}
