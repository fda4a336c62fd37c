use ac_strang::log_flow::find_ustar;
use ac_strang::poly_flow::{modified_potential_poly_deriv, poly_nonlinear_flow};
use ac_strang::spectral::apply_heat_propagator;
use ac_strang::verify::error_norms;
use ac_strang::{make_grid, Field, LogParams, LogScheme};
use proptest::prelude::*;

fn log_scheme(tau_frac: f64) -> LogScheme {
    let p = LogParams::new(0.1, 1.0, 0.25, 1.0);
    let tau = tau_frac * p.tau_bound();
    LogScheme::new(LogParams::new(0.1, tau, 0.25, 1.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn poly_flow_is_odd_and_stays_in_the_unit_ball(a in -1.0f64..=1.0, tau in 1e-6f64..50.0) {
        let u = poly_nonlinear_flow(a, tau);
        prop_assert_eq!(poly_nonlinear_flow(-a, tau), -u);
        prop_assert!(u.abs() <= 1.0);
        prop_assert!(u.abs() >= a.abs());
    }

    #[test]
    fn poly_modified_gradient_inverts_the_flow(z in -1.0f64..=1.0, tau in 1e-3f64..5.0) {
        // F' (z) = (z - S(z)) / tau
        let s = poly_nonlinear_flow(z, tau);
        prop_assert!((modified_potential_poly_deriv(z, tau) * tau - (z - s)).abs() < 1e-12);
    }

    #[test]
    fn log_flow_is_odd_monotone_and_bounded(x in -1.0f64..=1.0, dx in 1e-6f64..0.1, frac in 0.01f64..1.0) {
        let s = log_scheme(frac);
        let us = s.u_star();
        let v = x * us;
        let w = (v + dx).min(us);
        let fv = s.prrk_flow(v).unwrap();
        prop_assert_eq!(s.prrk_flow(-v).unwrap(), -fv);
        prop_assert!(fv.abs() <= us + 1e-12);
        prop_assert!(s.prrk_flow(w).unwrap() >= fv);
    }

    #[test]
    fn ustar_is_the_positive_root(theta in 0.1f64..0.95) {
        let u = find_ustar(theta, 1.0).unwrap();
        let g = |u: f64| u - theta * u.atanh();
        prop_assert!(g(u * (1.0 - 1e-9)) > 0.0);
        prop_assert!(g(u * (1.0 + 1e-9)) < 0.0);
    }

    #[test]
    fn heat_propagator_conserves_mean_and_contracts(
        values in prop::collection::vec(-1.0f64..1.0, 32),
        coeff in 0.0f64..2.0,
    ) {
        let g = make_grid(32, 3.0, 1).unwrap();
        let u = Field::new(g, values).unwrap();
        let out = apply_heat_propagator(&u, coeff).unwrap();
        prop_assert!((out.mean() - u.mean()).abs() <= 1e-14);
        prop_assert!(out.max_abs() <= u.max_abs() * (1.0 + 1e-10));
    }

    #[test]
    fn error_norms_are_symmetric(
        a in prop::collection::vec(-1.0f64..1.0, 16),
        b in prop::collection::vec(-1.0f64..1.0, 16),
    ) {
        let g = make_grid(16, 1.0, 1).unwrap();
        let fa = Field::new(g.clone(), a).unwrap();
        let fb = Field::new(g, b).unwrap();
        prop_assert_eq!(error_norms(&fa, &fb).unwrap(), error_norms(&fb, &fa).unwrap());
    }
}
