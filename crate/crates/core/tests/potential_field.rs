use std::f64::consts::PI;

use arcfem::potential::{eval_potential, field_grid, GridSpec};
use arcfem::quadrature::adaptive_with_breakpoints;
use arcfem::*;

fn solved(example: &str, method: Method, n: usize) -> Solution {
    solve(&assemble_system(&ProblemSpec::example(example, method, n).unwrap()).unwrap()).unwrap()
}

/// Adaptive oracle in the variable `s = a + L sin^2(pi tau / 2)`, whose
/// Jacobian absorbs the inverse square root at both ends.
fn oracle(sol: &Solution, point: [f64; 2]) -> f64 {
    let (a, b) = sol.domain();
    let len = b - a;
    let nodes = sol.psi_space.partition().nodes();
    let breaks: Vec<f64> = nodes
        .iter()
        .map(|&s| 2.0 / PI * ((s - a) / len).sqrt().asin())
        .collect();
    let mut integrand = |tau: f64| {
        let (sn, cs) = (0.5 * PI * tau).sin_cos();
        let p = ParamPoint {
            s: a + len * sn * sn,
            dl: len * sn * sn,
            dr: len * cs * cs,
        };
        let [x, y] = sol.arc.position(p.s);
        let jac = 0.5 * PI * len * (PI * tau).sin();
        sol.psi_at(&p).unwrap() * (x - point[0]).hypot(y - point[1]).ln() * jac
    };
    -adaptive_with_breakpoints(&mut integrand, (0.0, 1.0), &breaks, 1e-13).unwrap() / (2.0 * PI)
}

#[test]
fn potential_matches_adaptive_oracle() {
    for (example, method) in [
        ("ex1", Method::Standard),
        ("ex1", Method::Enriched),
        ("ex2", Method::Enriched),
    ] {
        let sol = solved(example, method, 32);
        for point in [
            [0.0, 0.0],
            [0.3, 1.2],
            [1.05, 0.02],
            [-2.0, -1.0],
            [0.2, 0.05],
        ] {
            if sol.arc.distance_to(point, 512) < 0.01 {
                continue;
            }
            let u = eval_potential(&sol, point).unwrap();
            let reference = oracle(&sol, point);
            assert!(
                (u - reference).abs() <= 1e-8 * reference.abs().max(1e-3),
                "{example} {method:?} {point:?}: {u} vs {reference}"
            );
        }
    }
}

#[test]
fn example2_field_peaks_next_to_the_arc() {
    let sol = solved("ex2", Method::Enriched, 64);
    let grid = field_grid(&sol, GridSpec::square(2.0, 101)).unwrap();
    assert_eq!(grid.samples.len(), 101 * 101);
    assert!(grid.evaluated().all(|s| s.u.unwrap().is_finite()));
    assert!(grid.samples.iter().any(|s| s.masked));
    let peak = grid
        .evaluated()
        .max_by(|p, q| p.u.unwrap().abs().total_cmp(&q.u.unwrap().abs()))
        .unwrap();
    let spacing = 4.0 / 100.0;
    assert!(sol.arc.distance_to([peak.x, peak.y], 512) <= 2.0 * spacing);
}

#[test]
fn potential_is_continuous_across_the_arc() {
    let sol = solved("ex2", Method::Enriched, 128);
    let [x, y] = sol.arc.position(0.8);
    let [nx, ny] = sol.arc.normal(0.8);
    let gap = |delta: f64| {
        let outer = eval_potential(&sol, [x + delta * nx, y + delta * ny]).unwrap();
        let inner = eval_potential(&sol, [x - delta * nx, y - delta * ny]).unwrap();
        (outer - inner).abs()
    };
    let (g1, g2) = (gap(2e-2), gap(1e-2));
    assert!(g1 > 0.0 && g2 <= 0.6 * g1, "{g1:e} {g2:e}");
}

#[test]
fn jump_approaches_density_on_the_semicircle() {
    let sol = solved("ex2", Method::Enriched, 128);
    let s = 0.8;
    let errors: Vec<f64> = [1e-2, 5e-3]
        .iter()
        .map(|&d| jump_check(&sol, s, d).unwrap().relative_error())
        .collect();
    assert!(errors[0] < 0.05 && errors[1] < errors[0], "{errors:?}");
}
