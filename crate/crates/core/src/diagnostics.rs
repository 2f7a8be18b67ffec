//! Energy-norm differences, convergence tables, compatibility residuals,
//! edge-exponent fits, and closed-form oracles for the log-kernel
//! quadrature.

use std::f64::consts::{LN_2, PI};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::assembly::{BlockSystem, ProblemSpec};
use crate::error::{Error, Result};
use crate::geometry::ParamPoint;
use crate::quadrature::{
    galerkin_log_pair, gauss_jacobi, gauss_legendre, integration_pieces, log_weight, Piece,
    PieceMap, QuadratureOrders, QuadratureRule, RuleSet,
};
use crate::solver::Solution;
use crate::spaces::{prolong, Endpoint, Method};

/// Quadratic forms below `-NEGATIVE_ENERGY_TOL` (relative) indicate an
/// assembly defect rather than rounding.
pub const NEGATIVE_ENERGY_TOL: f64 = 1e-10;

/// Points in the geometric sample of an exponent-fit window.
pub const FIT_SAMPLES: usize = 32;

/// Upper end of the default exponent-fit window, in parameter units.
pub const FIT_WINDOW_MAX: f64 = 1.0 / 16.0;

/// `|u_h - u_{2h}|_a` with the blocks of the fine system.
///
/// The coarse solution is prolonged to the fine spaces; for the difference
/// `e` the coupling terms of `a(e, e)` cancel, leaving
/// `e_U^T A e_U + e_psi^T V e_psi`.
pub fn energy_norm_diff(fine_sys: &BlockSystem, fine: &Solution, coarse: &Solution) -> Result<f64> {
    if fine.method() != coarse.method() {
        return Err(Error::InvalidArgument(
            "solutions use different methods".into(),
        ));
    }
    let u_c = prolong(&coarse.u_space, &coarse.u_coeffs, &fine.u_space)?;
    let p_c = prolong(&coarse.psi_space, &coarse.psi_coeffs, &fine.psi_space)?;
    let e_u: Vec<f64> = fine.u_coeffs.iter().zip(&u_c).map(|(a, b)| a - b).collect();
    let e_p: Vec<f64> = fine
        .psi_coeffs
        .iter()
        .zip(&p_c)
        .map(|(a, b)| a - b)
        .collect();
    energy_quadratic_form(fine_sys, &e_u, &e_p).map(|q| q.max(0.0).sqrt())
}

/// `e_U^T A e_U + e_psi^T V e_psi`; errors when clearly negative.
pub fn energy_quadratic_form(sys: &BlockSystem, e_u: &[f64], e_psi: &[f64]) -> Result<f64> {
    for (v, expected) in [(e_u, sys.dim_u()), (e_psi, sys.dim_psi())] {
        if v.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: v.len(),
            });
        }
    }
    let qa = sys.a.bilinear(e_u, e_u);
    let qv = sys.v.bilinear(e_psi, e_psi);
    let q = qa + qv;
    let scale = qa.abs() + qv.abs();
    if q < -NEGATIVE_ENERGY_TOL * scale.max(1.0) {
        return Err(Error::InvalidArgument(format!("negative energy {q:.3e}")));
    }
    Ok(q)
}

/// One row of a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    #[serde(rename = "N")]
    pub n: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// Fills in `log2(error_{2h} / error_h)` between successive levels.
pub fn convergence_table(levels: &[(usize, f64)]) -> Vec<ConvergenceRecord> {
    let mut out: Vec<ConvergenceRecord> = Vec::with_capacity(levels.len());
    for (i, &(n, error)) in levels.iter().enumerate() {
        let order = (i > 0).then(|| (levels[i - 1].1 / error).log2());
        out.push(ConvergenceRecord { n, error, order });
    }
    out
}

/// Writes records as CSV with columns `N,error,order`.
pub fn write_convergence_csv<W: Write>(records: &[ConvergenceRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    }
    w.flush()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(())
}

pub fn read_convergence_csv<R: Read>(input: R) -> Result<Vec<ConvergenceRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(|e| Error::InvalidArgument(e.to_string())))
        .collect()
}

/// `int_S psi_h ds`, integrated on the same graded pieces as the assembly.
pub fn integral_psi(sol: &Solution) -> f64 {
    let orders = QuadratureOrders::default();
    let rules = RuleSet::new(orders).expect("default orders are valid");
    let pieces = integration_pieces(
        sol.psi_space.partition(),
        sol.method() == Method::Enriched,
        orders.transition_split,
    );
    let (x, w) = rules.base();
    let mut total = 0.0;
    for p in &pieces {
        for (&xi, &wi) in x.iter().zip(w) {
            let (pt, jac) = p.point(xi);
            let v: f64 = sol
                .psi_space
                .active_on_element(p.element)
                .into_iter()
                .map(|i| {
                    sol.psi_coeffs[i] * sol.psi_space.eval_on_element(i, p.element, &pt, false)
                })
                .sum();
            total += wi * jac * v;
        }
    }
    total
}

/// `int psi_h - (int f + g_left + g_right)`, which vanishes for any
/// Galerkin solution because constants lie in the `U` test space.
pub fn compatibility_residual(sol: &Solution, spec: &ProblemSpec) -> f64 {
    integral_psi(sol) - spec.compatibility_defect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    U,
    Psi,
}

/// Least-squares slope of `ln|y|` against `ln x` on `x_i = lo (hi/lo)^{i/(n-1)}`.
pub fn fit_log_slope<F: Fn(f64) -> Result<f64>>(
    profile: F,
    window: (f64, f64),
    samples: usize,
) -> Result<f64> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) || samples < 2 {
        return Err(Error::InvalidArgument(format!(
            "invalid fit window ({lo}, {hi})"
        )));
    }
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    let mut smallest = f64::INFINITY;
    for i in 0..samples {
        let d = lo * (hi / lo).powf(i as f64 / (samples - 1) as f64);
        let y = profile(d)?.abs();
        smallest = smallest.min(y);
        xs.push(d.ln());
        ys.push(y.ln());
    }
    if !(smallest > 1e-12) {
        return Err(Error::NoSingularContent {
            magnitude: smallest,
        });
    }
    let n = samples as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

/// The default window `(h, 1/16)`.
pub fn default_fit_window(sol: &Solution) -> (f64, f64) {
    (sol.u_space.partition().h(), FIT_WINDOW_MAX)
}

/// Fitted exponent of the endpoint behaviour of `U_h` or `psi_h`.
///
/// For `psi` the profile is `psi_h` at distance `d` from the endpoint. For
/// `U` it is `U_h(d) - U_h(0) + g d`: the endpoint value is removed, and so is
/// the linear term fixed by the Neumann data, since `dU/dd = -g` at either
/// end.
pub fn fit_edge_exponent(
    sol: &Solution,
    endpoint: Endpoint,
    field: Field,
    window: Option<(f64, f64)>,
) -> Result<f64> {
    let window = window.unwrap_or_else(|| default_fit_window(sol));
    let (a, b) = sol.domain();
    let point = |d: f64| match endpoint {
        Endpoint::Left => ParamPoint {
            s: a + d,
            dl: d,
            dr: (b - a) - d,
        },
        Endpoint::Right => ParamPoint {
            s: b - d,
            dl: (b - a) - d,
            dr: d,
        },
    };
    match field {
        Field::Psi => fit_log_slope(|d| sol.psi_at(&point(d)), window, FIT_SAMPLES),
        Field::U => {
            let g = match endpoint {
                Endpoint::Left => sol.g.0,
                Endpoint::Right => sol.g.1,
            };
            let u0 = sol.u_at(&point(0.0))?;
            fit_log_slope(
                |d| Ok(sol.u_at(&point(d))? - u0 + g * d),
                window,
                FIT_SAMPLES,
            )
        }
    }
}

/// Orders used by [`chebyshev_oracle_check`].
pub const CHEBYSHEV_ORDER: usize = 32;

/// `(V_S rho)(s)` on the segment `(-1, 1)` for `rho(t) = (1 - t^2)^{-1/2}`,
/// by log-weight rules at `t = s` and Gauss–Jacobi rules at `t = -1, 1`.
///
/// Between the two, pieces double in length away from `s` so that each
/// stays as far from every singularity as it is long.
pub fn chebyshev_single_layer(s: f64, order: usize) -> Result<f64> {
    chebyshev_single_layer_with(s, order, &log_weight(order)?)
}

/// As [`chebyshev_single_layer`] with a caller-supplied `-ln x` rule on
/// [0, 1].
pub fn chebyshev_single_layer_with(s: f64, order: usize, lw: &QuadratureRule) -> Result<f64> {
    if !(s > -1.0 && s < 1.0) {
        return Err(Error::OutOfDomain { s, a: -1.0, b: 1.0 });
    }
    let gl = gauss_legendre(order, (0.0, 1.0))?;
    let rho = |t: f64| 1.0 / ((1.0 - t) * (1.0 + t)).sqrt();
    let kernel = |t: f64| (s - t).abs().ln();
    let delta = (1.0 - s).min(1.0 + s) / 3.0;
    let (c_left, c_right) = (-1.0 + 2.0 * (1.0 + s) / 3.0, 1.0 - 2.0 * (1.0 - s) / 3.0);

    let mut total = gauss_jacobi(order, 0.0, -0.5, (-1.0, c_left))?
        .integrate(|t| kernel(t) / (1.0 - t).sqrt())
        + gauss_jacobi(order, -0.5, 0.0, (c_right, 1.0))?
            .integrate(|t| kernel(t) / (1.0 + t).sqrt());
    for (dir, stop) in [(-1.0, s - c_left), (1.0, c_right - s)] {
        // t = s + dir * delta * x; ln|s - t| = ln(delta) + ln x.
        let smooth = gl.integrate(|x| rho(s + dir * delta * x));
        let logpart = lw.integrate(|x| rho(s + dir * delta * x));
        total += delta * (delta.ln() * smooth - logpart);
        let (mut near, mut len) = (delta, delta);
        while near < stop {
            let far = (near + 2.0 * len).min(stop);
            let (lo, hi) = (near, far);
            total += (hi - lo)
                * gl.integrate(|x| {
                    let t = s + dir * (lo + (hi - lo) * x);
                    kernel(t) * rho(t)
                });
            len = far - near;
            near = far;
        }
    }
    Ok(-total / (2.0 * PI))
}

/// Largest deviation of `(V_S rho)(s)` from `ln(2) / 2` over 50 interior
/// points.
pub fn chebyshev_oracle_check() -> Result<f64> {
    chebyshev_deviation(CHEBYSHEV_ORDER)
}

pub fn chebyshev_deviation(order: usize) -> Result<f64> {
    chebyshev_deviation_with(order, &log_weight(order)?)
}

pub fn chebyshev_deviation_with(order: usize, log_rule: &QuadratureRule) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let s = (PI * (k as f64 + 0.5) / 50.0).cos();
        worst = worst.max((chebyshev_single_layer_with(s, order, log_rule)? - 0.5 * LN_2).abs());
    }
    Ok(worst)
}

/// `(1/2 pi) <L e^{ikt}, e^{iks}>` for the periodic kernel
/// `-(1/2 pi) ln|2 sin((s - t)/2)|`, assembled on `[0, 2 pi)`.
///
/// The kernel is split as
/// `ln|u| + ln|u - 2 pi| + ln|u + 2 pi| + r(u)` with `u = s - t` and `r`
/// analytic on `[-2 pi, 2 pi]`; the shifted logarithms become ordinary
/// log-kernel pairs against translated copies of the pieces.
pub fn torus_multiplier(k: i32, orders: QuadratureOrders) -> Result<f64> {
    let kk = k.unsigned_abs() as usize;
    let m = 16.max(8 * kk);
    let rules = RuleSet::new(orders)?;
    let two_pi = 2.0 * PI;
    let mut nodes: Vec<f64> = (0..m).map(|i| two_pi * i as f64 / m as f64).collect();
    nodes.push(two_pi);
    let domain = (-two_pi, 2.0 * two_pi);
    let pieces: Vec<Piece> = (0..m)
        .map(|i| Piece::new(nodes[i], nodes[i + 1], domain, i, PieceMap::Affine))
        .collect();
    let shifted = |shift: f64| -> Vec<Piece> {
        (0..m)
            .map(|i| {
                Piece::new(
                    nodes[i] + shift,
                    nodes[i + 1] + shift,
                    domain,
                    i,
                    PieceMap::Affine,
                )
            })
            .collect()
    };
    let kf = k as f64;
    let cos = move |p: &ParamPoint| (kf * p.s).cos();
    let sin = move |p: &ParamPoint| (kf * p.s).sin();

    let mut log_total = 0.0;
    for images in [pieces.clone(), shifted(two_pi), shifted(-two_pi)] {
        log_total += galerkin_log_pair(cos, &pieces, cos, &images, &rules)?;
        log_total += galerkin_log_pair(sin, &pieces, sin, &images, &rules)?;
    }

    let r = |u: f64| {
        if u.abs() < 1e-8 {
            return -(two_pi * two_pi).ln();
        }
        (2.0 * (0.5 * u).sin().abs()).ln()
            - u.abs().ln()
            - (u - two_pi).abs().ln()
            - (u + two_pi).abs().ln()
    };
    let (x, w) = rules.base();
    let mut smooth = 0.0;
    for p in &pieces {
        for q in &pieces {
            for (&xi, &wi) in x.iter().zip(w) {
                let (sp, js) = p.point(xi);
                for (&xj, &wj) in x.iter().zip(w) {
                    let (tp, jt) = q.point(xj);
                    smooth += wi * wj * js * jt * r(sp.s - tp.s) * (kf * (tp.s - sp.s)).cos();
                }
            }
        }
    }
    let total = log_total - smooth / (2.0 * PI);
    Ok(total / two_pi)
}

/// The exact multiplier: `0` at `k = 0`, `1 / (2|k|)` otherwise.
pub fn exact_multiplier(k: i32) -> f64 {
    if k == 0 {
        0.0
    } else {
        0.5 / k.unsigned_abs() as f64
    }
}

/// Worst relative error over `1 <= |k| <= max_k` and the absolute error at
/// `k = 0`, returned as `(relative, absolute_at_zero)`.
pub fn fourier_multiplier_check(max_k: usize) -> Result<(f64, f64)> {
    if !(1..=32).contains(&max_k) {
        return Err(Error::InvalidArgument(format!(
            "mode count {max_k} outside 1..=32"
        )));
    }
    let orders = QuadratureOrders::default();
    let zero = torus_multiplier(0, orders)?.abs();
    let mut worst: f64 = 0.0;
    for k in 1..=max_k as i32 {
        for kk in [k, -k] {
            let exact = exact_multiplier(kk);
            worst = worst.max((torus_multiplier(kk, orders)? - exact).abs() / exact);
        }
    }
    Ok((worst, zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive_with_breakpoints;
    use approx::assert_relative_eq;

    #[test]
    fn orders_from_halving_errors() {
        let t = convergence_table(&[(32, 0.4), (64, 0.2), (128, 0.1)]);
        assert_eq!(t[0].order, None);
        assert_relative_eq!(t[1].order.unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(t[2].order.unwrap(), 1.0, epsilon = 1e-15);
        let t = convergence_table(&[(64, 0.117), (128, 0.0812)]);
        assert_eq!(format!("{:.2}", t[1].order.unwrap()), "0.53");
        assert!(convergence_table(&[(64, 0.1)])[0].order.is_none());
    }

    #[test]
    fn csv_round_trip() {
        let t = convergence_table(&[(32, 0.4), (64, 0.2123456789012345), (128, 1e-3)]);
        let mut buf = Vec::new();
        write_convergence_csv(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("N,error,order\n32,0.4,\n"));
        assert_eq!(read_convergence_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn slope_of_pure_power() {
        let s = fit_log_slope(|d| Ok(3.0 * d.powf(-0.5)), (1e-4, 1e-2), 32).unwrap();
        assert_relative_eq!(s, -0.5, epsilon = 1e-12);
        assert!(matches!(
            fit_log_slope(|_| Ok(0.0), (1e-4, 1e-2), 32),
            Err(Error::NoSingularContent { .. })
        ));
    }

    #[test]
    fn chebyshev_identity_oracle() {
        // The identity itself, by adaptive integration in t = cos(theta).
        let s = 0.3;
        let oracle = adaptive_with_breakpoints(
            &mut |th: f64| (s - th.cos()).abs().ln(),
            (0.0, PI),
            &[s.acos()],
            1e-12,
        )
        .unwrap();
        assert_relative_eq!(oracle, -PI * LN_2, max_relative = 1e-9);
        assert_relative_eq!(
            chebyshev_single_layer(0.0, 32).unwrap(),
            0.5 * LN_2,
            epsilon = 1e-12
        );
        assert!(chebyshev_oracle_check().unwrap() <= 1e-8);
    }

    #[test]
    fn torus_multiplier_values() {
        let o = QuadratureOrders::default();
        assert_relative_eq!(torus_multiplier(1, o).unwrap(), 0.5, epsilon = 1e-8);
        assert_relative_eq!(torus_multiplier(4, o).unwrap(), 0.125, epsilon = 1e-8);
        assert!(torus_multiplier(0, o).unwrap().abs() < 1e-8);
    }
}
