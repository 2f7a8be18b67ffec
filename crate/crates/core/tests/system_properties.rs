use arcfem::*;
use proptest::prelude::*;

fn relative_block_change(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.max_abs_diff(b) / a.max_abs().max(f64::MIN_POSITIVE)
}

#[test]
fn doubling_quadrature_orders_leaves_blocks_unchanged() {
    for (example, method, n) in [
        ("ex1", Method::Enriched, 16),
        ("ex1", Method::Enriched, 64),
        ("ex2", Method::Standard, 16),
        ("ex2", Method::Enriched, 16),
        ("ex2", Method::Enriched, 64),
    ] {
        let spec = ProblemSpec::example(example, method, n).unwrap();
        let base = assemble_system(&spec).unwrap();
        let fine = assemble_system(&spec.clone().with_orders(spec.orders().doubled())).unwrap();
        for (name, x, y) in [
            ("A", &base.a, &fine.a),
            ("C", &base.c, &fine.c),
            ("V", &base.v, &fine.v),
        ] {
            let change = relative_block_change(x, y);
            assert!(change <= 1e-9, "{example} {method:?} {name}: {change:e}");
        }
        let load = base
            .f
            .iter()
            .zip(&fine.f)
            .map(|(p, q)| (p - q).abs())
            .fold(0.0, f64::max);
        assert!(load <= 1e-9, "{example} {method:?} F: {load:e}");
    }
}

#[test]
fn block_structure() {
    for example in ["ex1", "ex2"] {
        for method in [Method::Standard, Method::Enriched] {
            let sys = assemble_system(&ProblemSpec::example(example, method, 32).unwrap()).unwrap();
            assert_eq!(sys.cp, sys.c.transpose());
            assert!(sys.a.asymmetry() <= 1e-14);
            let hats = sys.psi_space.num_hats();
            for i in 0..hats {
                assert!(sys.v[(i, i)] > 0.0);
            }
            let mut constant = vec![0.0; sys.dim_u()];
            constant[..sys.u_space.num_hats()].fill(1.0);
            let image = sys.a.mul_vec(&constant);
            assert!(
                image.iter().all(|v| v.abs() < 1e-12),
                "{example} {method:?}"
            );
            let ramp: Vec<f64> = (0..sys.dim_u())
                .map(|i| ((i * 7) % 5) as f64 - 2.0)
                .collect();
            assert!(sys.a.bilinear(&ramp, &ramp) > 0.0);
        }
    }
}

#[test]
fn example1_load_sums_to_compatibility_defect() {
    for method in [Method::Standard, Method::Enriched] {
        let spec = ProblemSpec::example1(method, 64).unwrap();
        let sys = assemble_system(&spec).unwrap();
        let hats = sys.u_space.num_hats();
        let total: f64 = sys.f[..hats].iter().sum();
        assert!(total.abs() < 1e-10, "{total:e}");
    }
}

#[test]
fn solve_is_deterministic() {
    let sys = assemble_system(&ProblemSpec::example2(Method::Enriched, 64).unwrap()).unwrap();
    let a = solve(&sys).unwrap();
    let b = solve(&sys).unwrap();
    assert_eq!(a.u_coeffs, b.u_coeffs);
    assert_eq!(a.psi_coeffs, b.psi_coeffs);
    assert!(a.residual < 1e-12);
}

#[test]
fn example1_solution_matches_mirrored_problem() {
    let arc = ArcParameterization::new(
        "mirrored segment",
        (-1.0, 1.0),
        |s| [-s, 0.0],
        |_| [-1.0, 0.0],
    )
    .unwrap();
    for method in [Method::Standard, Method::Enriched] {
        let spec = ProblemSpec::example1(method, 64).unwrap();
        let mirrored = ProblemSpec::new(
            "mirrored",
            arc.clone(),
            std::sync::Arc::new(|_| 1.0),
            -1.0,
            -1.0,
            method,
            64,
        )
        .unwrap();
        let a = solve(&assemble_system(&spec).unwrap()).unwrap();
        let b = solve(&assemble_system(&mirrored).unwrap()).unwrap();
        for s in [-0.9, -0.37, 0.0, 0.51, 0.99] {
            assert!((a.u(s).unwrap() - b.u(-s).unwrap()).abs() < 1e-8);
            assert!((a.psi(s).unwrap() - b.psi(-s).unwrap()).abs() < 1e-8);
            assert!((a.u(s).unwrap() - a.u(-s).unwrap()).abs() < 1e-8);
        }
    }
}

#[test]
fn density_endpoint_hats_variant_is_available() {
    let spec = ProblemSpec::example1(Method::Standard, 32)
        .unwrap()
        .with_density_boundary_hats(true);
    let sys = assemble_system(&spec).unwrap();
    assert_eq!(sys.dim_psi(), 33);
    let sol = solve(&sys).unwrap();
    assert!(compatibility_residual(&sol, &spec).abs() < 1e-8);
}

#[test]
fn nonzero_h_enters_the_second_equation() {
    let spec = ProblemSpec::example1(Method::Enriched, 32)
        .unwrap()
        .with_h(std::sync::Arc::new(|s: f64| s * s));
    let sys = assemble_system(&spec).unwrap();
    assert!(sys.h.iter().any(|v| v.abs() > 1e-3));
    let sol = solve(&sys).unwrap();
    assert!(sol.residual < 1e-12);
    assert!(compatibility_residual(&sol, &spec).abs() < 1e-8);
}

fn arbitrary_pair(dim_u: usize, dim_psi: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (
        prop::collection::vec(-1.0f64..1.0, dim_u),
        prop::collection::vec(-1.0f64..1.0, dim_psi),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn galerkin_orthogonality((vu, vp) in arbitrary_pair(35, 33)) {
        let sys = assemble_system(&ProblemSpec::example2(Method::Enriched, 32).unwrap()).unwrap();
        prop_assume!(sys.dim_u() == 35 && sys.dim_psi() == 33);
        let sol = solve(&sys).unwrap();
        let lhs = bilinear_apply(&sys, (&sol.u_coeffs, &sol.psi_coeffs), (&vu, &vp)).unwrap();
        let rhs: f64 = sys.f.iter().zip(&vu).map(|(a, b)| a * b).sum::<f64>()
            + sys.h.iter().zip(&vp).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
    }
}
