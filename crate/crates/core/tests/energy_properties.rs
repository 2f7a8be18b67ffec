use std::sync::OnceLock;

use arcfem::diagnostics::{energy_quadratic_form, fit_log_slope};
use arcfem::*;
use proptest::prelude::*;

fn systems() -> &'static Vec<BlockSystem> {
    static CELL: OnceLock<Vec<BlockSystem>> = OnceLock::new();
    CELL.get_or_init(|| {
        [
            ("ex1", Method::Standard),
            ("ex1", Method::Enriched),
            ("ex2", Method::Standard),
            ("ex2", Method::Enriched),
        ]
        .iter()
        .map(|&(ex, m)| assemble_system(&ProblemSpec::example(ex, m, 16).unwrap()).unwrap())
        .collect()
    })
}

/// Integrals of the density basis functions, read off the coupling block:
/// the `U` hats sum to one.
fn density_moments(sys: &BlockSystem) -> Vec<f64> {
    let hats = sys.u_space.num_hats();
    (0..sys.dim_psi())
        .map(|j| (0..hats).map(|i| sys.c[(i, j)]).sum())
        .collect()
}

fn mean_zero(sys: &BlockSystem, raw: &[f64]) -> Vec<f64> {
    let m = density_moments(sys);
    let mm: f64 = m.iter().map(|v| v * v).sum();
    let proj: f64 = m.iter().zip(raw).map(|(a, b)| a * b).sum::<f64>() / mm;
    raw.iter().zip(&m).map(|(r, mi)| r - proj * mi).collect()
}

fn coefficients() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_nonnegative_for_mean_zero_density(which in 0usize..4, raw_u in coefficients(), raw_p in coefficients()) {
        let sys = &systems()[which];
        let e_u = &raw_u[..sys.dim_u()];
        let e_p = mean_zero(sys, &raw_p[..sys.dim_psi()]);
        let q = energy_quadratic_form(sys, e_u, &e_p).unwrap();
        prop_assert!(q >= -1e-10);
        prop_assert!(sys.v.bilinear(&e_p, &e_p) > 0.0);
    }

    #[test]
    fn energy_difference_is_symmetric(which in 0usize..4, a in coefficients(), b in coefficients()) {
        let sys = &systems()[which];
        let make = |c: &[f64]| {
            let (du, dp) = (sys.dim_u(), sys.dim_psi());
            let psi = mean_zero(sys, &c[..dp]);
            Solution::from_coefficients(
                "p", sys.arc.clone(), sys.u_space.clone(), sys.psi_space.clone(),
                c[c.len() - du..].to_vec(), psi,
            ).unwrap()
        };
        let (x, y) = (make(&a), make(&b));
        let xy = energy_norm_diff(sys, &x, &y).unwrap();
        let yx = energy_norm_diff(sys, &y, &x).unwrap();
        prop_assert!((xy - yx).abs() <= 1e-12 * (1.0 + xy));
        prop_assert!(energy_norm_diff(sys, &x, &x).unwrap() <= 1e-13);
    }

    #[test]
    fn orders_of_geometric_sequences(e0 in 1e-3f64..1.0, rate in 0.1f64..3.0, levels in 3usize..8) {
        let errors: Vec<(usize, f64)> = (0..levels)
            .map(|k| (32 << k, e0 * 2f64.powf(-rate * k as f64)))
            .collect();
        let table = convergence_table(&errors);
        prop_assert!(table[0].order.is_none());
        for rec in &table[1..] {
            prop_assert!((rec.order.unwrap() - rate).abs() <= 1e-12);
        }
    }

    #[test]
    fn fit_recovers_power_laws(p in -0.9f64..2.5, c in 0.1f64..10.0, lo in 1e-4f64..1e-2) {
        let slope = fit_log_slope(|d| Ok(-c * d.powf(p)), (lo, 1.0 / 16.0), 32).unwrap();
        prop_assert!((slope - p).abs() <= 1e-9);
    }
}

#[test]
fn energy_difference_vanishes_between_identical_levels() {
    let spec = ProblemSpec::example2(Method::Enriched, 32).unwrap();
    let sys = assemble_system(&spec).unwrap();
    let sol = solve(&sys).unwrap();
    assert!(energy_norm_diff(&sys, &sol, &sol).unwrap() <= 1e-13);
}

#[test]
fn prolonged_coarse_solution_is_reproduced_on_the_fine_mesh() {
    let coarse =
        solve(&assemble_system(&ProblemSpec::example1(Method::Enriched, 32).unwrap()).unwrap())
            .unwrap();
    let fine_sys = assemble_system(&ProblemSpec::example1(Method::Enriched, 64).unwrap()).unwrap();
    let u = prolong(&coarse.u_space, &coarse.u_coeffs, &fine_sys.u_space).unwrap();
    let p = prolong(&coarse.psi_space, &coarse.psi_coeffs, &fine_sys.psi_space).unwrap();
    let lifted = Solution::from_coefficients(
        "lifted",
        coarse.arc.clone(),
        fine_sys.u_space.clone(),
        fine_sys.psi_space.clone(),
        u,
        p,
    )
    .unwrap();
    for k in 1..1000 {
        let s = -1.0 + 2.0 * k as f64 / 1000.0;
        assert!((lifted.u(s).unwrap() - coarse.u(s).unwrap()).abs() <= 1e-12);
        assert!((lifted.psi(s).unwrap() - coarse.psi(s).unwrap()).abs() <= 1e-12);
    }
    assert!(energy_norm_diff(&fine_sys, &lifted, &coarse).unwrap() <= 1e-12);
}

#[test]
fn mismatched_methods_rejected() {
    let a = solve(&assemble_system(&ProblemSpec::example1(Method::Enriched, 16).unwrap()).unwrap())
        .unwrap();
    let sys = assemble_system(&ProblemSpec::example1(Method::Standard, 32).unwrap()).unwrap();
    let b = solve(&sys).unwrap();
    assert!(energy_norm_diff(&sys, &b, &a).is_err());
}
