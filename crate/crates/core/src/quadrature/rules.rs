//! Gaussian rules built from three-term recurrences.
//!
//! Every rule is produced the same way: Golub–Welsch eigenvalues of the
//! Jacobi matrix as starting guesses, a Newton polish on the monic
//! orthogonal polynomial, and weights from the Christoffel function
//! `1 / sum_k p_k(x)^2` of the orthonormal family.

use libm::lgamma as ln_gamma;
use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest order accepted by the public rule constructors.
pub const MAX_ORDER: usize = 64;

/// Nodes and weights approximating a (possibly weighted) integral over
/// `interval`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub interval: (f64, f64),
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Recurrence data for a monic orthogonal family:
/// `pi_{k+1}(x) = (x - alpha_k) pi_k(x) - beta_k pi_{k-1}(x)`, with
/// `beta_0` the total mass of the measure.
struct Recurrence {
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

fn gauss_from_recurrence(rec: &Recurrence, n: usize) -> (Vec<f64>, Vec<f64>) {
    debug_assert!(rec.alpha.len() >= n && rec.beta.len() >= n);
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jacobi[(k, k)] = rec.alpha[k];
        if k + 1 < n {
            let off = rec.beta[k + 1].sqrt();
            jacobi[(k, k + 1)] = off;
            jacobi[(k + 1, k)] = off;
        }
    }
    let mut nodes: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    nodes.sort_by(|a, b| a.total_cmp(b));

    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = monic_with_derivative(rec, n, *x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            *x -= step;
            if step.abs() <= 1e-17 * x.abs().max(1e-300) {
                break;
            }
        }
    }

    let weights = nodes
        .iter()
        .map(|&x| {
            let mut prev = 0.0;
            let mut cur = 1.0 / rec.beta[0].sqrt();
            let mut sum = cur * cur;
            for k in 0..n - 1 {
                let next = ((x - rec.alpha[k]) * cur
                    - if k == 0 {
                        0.0
                    } else {
                        rec.beta[k].sqrt() * prev
                    })
                    / rec.beta[k + 1].sqrt();
                prev = cur;
                cur = next;
                sum += cur * cur;
            }
            1.0 / sum
        })
        .collect();
    (nodes, weights)
}

fn monic_with_derivative(rec: &Recurrence, n: usize, x: f64) -> (f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for k in 0..n {
        let b = if k == 0 { 0.0 } else { rec.beta[k] };
        let p_next = (x - rec.alpha[k]) * p - b * p_prev;
        let d_next = p + (x - rec.alpha[k]) * d - b * d_prev;
        p_prev = p;
        p = p_next;
        d_prev = d;
        d = d_next;
    }
    (p, d)
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 || n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "quadrature order {n} outside 1..={MAX_ORDER}"
        )));
    }
    Ok(())
}

fn check_interval((l, r): (f64, f64)) -> Result<()> {
    if !(l.is_finite() && r.is_finite() && l < r) {
        return Err(Error::InvalidArgument(format!(
            "invalid interval [{l}, {r}]"
        )));
    }
    Ok(())
}

fn legendre_recurrence(n: usize) -> Recurrence {
    let mut beta = vec![2.0];
    beta.extend((1..n).map(|k| {
        let k = k as f64;
        k * k / (4.0 * k * k - 1.0)
    }));
    Recurrence {
        alpha: vec![0.0; n],
        beta,
    }
}

fn jacobi_recurrence(n: usize, a: f64, b: f64) -> Recurrence {
    let ab = a + b;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    alpha.push((b - a) / (ab + 2.0));
    let ln_mass = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
        - ln_gamma(ab + 2.0);
    beta.push(ln_mass.exp());
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        alpha.push((b * b - a * a) / (s * (s + 2.0)));
        if k == 1 {
            beta.push(4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab)));
        } else {
            beta.push(4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (s * s * (s + 1.0) * (s - 1.0)));
        }
    }
    Recurrence { alpha, beta }
}

/// Raw Gauss–Legendre nodes and weights on [-1, 1] without the order cap.
pub(crate) fn legendre_reference(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (mut nodes, mut weights) = gauss_from_recurrence(&legendre_recurrence(n), n);
    // Enforce exact symmetry of the reference rule.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let x = 0.5 * (nodes[j] - nodes[i]);
        let w = 0.5 * (weights[i] + weights[j]);
        nodes[i] = -x;
        nodes[j] = x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// `n`-point Gauss–Legendre rule mapped to `interval`.
pub fn gauss_legendre(n: usize, interval: (f64, f64)) -> Result<QuadratureRule> {
    check_order(n)?;
    check_interval(interval)?;
    let (l, r) = interval;
    let (half, mid) = (0.5 * (r - l), 0.5 * (r + l));
    let (nodes, weights) = legendre_reference(n);
    Ok(QuadratureRule {
        nodes: nodes.iter().map(|x| mid + half * x).collect(),
        weights: weights.iter().map(|w| half * w).collect(),
        interval,
    })
}

/// `n`-point Gauss–Jacobi rule for the weight `(1 - x)^alpha (1 + x)^beta`
/// on [-1, 1], mapped affinely to `interval = (l, r)`.
///
/// On the mapped interval the rule approximates
/// `int_l^r (r - x)^alpha (x - l)^beta g(x) dx`.
pub fn gauss_jacobi(
    n: usize,
    alpha: f64,
    beta: f64,
    interval: (f64, f64),
) -> Result<QuadratureRule> {
    check_order(n)?;
    check_interval(interval)?;
    if !(alpha > -1.0 && beta > -1.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "Jacobi exponents must exceed -1 (alpha = {alpha}, beta = {beta})"
        )));
    }
    let (nodes, weights) = gauss_from_recurrence(&jacobi_recurrence(n, alpha, beta), n);
    let (l, r) = interval;
    let half = 0.5 * (r - l);
    let scale = half.powf(alpha + beta + 1.0);
    Ok(QuadratureRule {
        nodes: nodes.iter().map(|x| l + (x + 1.0) * half).collect(),
        weights: weights.iter().map(|w| scale * w).collect(),
        interval,
    })
}

/// `n`-point Gauss rule for the weight `-ln x` on (0, 1).
///
/// Recurrence coefficients come from a discretized Stieltjes procedure
/// over geometrically graded Gauss–Legendre panels, on which `-ln x` is
/// analytic.
pub fn log_weight(n: usize) -> Result<QuadratureRule> {
    check_order(n)?;
    let rec = log_weight_recurrence(n);
    let (nodes, weights) = gauss_from_recurrence(&rec, n);
    Ok(QuadratureRule {
        nodes,
        weights,
        interval: (0.0, 1.0),
    })
}

fn log_weight_recurrence(n: usize) -> Recurrence {
    const PANELS: i32 = 64;
    const PANEL_ORDER: usize = 80;
    let (ref_nodes, ref_weights) = legendre_reference(PANEL_ORDER);
    let mut xs = Vec::with_capacity(PANELS as usize * PANEL_ORDER);
    let mut ws = Vec::with_capacity(xs.capacity());
    for k in 0..PANELS {
        let hi = 0.5f64.powi(k);
        let lo = 0.5 * hi;
        let (half, mid) = (0.5 * (hi - lo), 0.5 * (hi + lo));
        for (t, w) in ref_nodes.iter().zip(&ref_weights) {
            let x = mid + half * t;
            xs.push(x);
            ws.push(-half * w * x.ln());
        }
    }

    let mass: f64 = ws.iter().sum();
    let mut alpha = Vec::with_capacity(n);
    let mut beta = vec![mass];
    let mut prev = vec![0.0; xs.len()];
    let mut cur = vec![1.0 / mass.sqrt(); xs.len()];
    for k in 0..n {
        let a: f64 = xs
            .iter()
            .zip(&ws)
            .zip(&cur)
            .map(|((x, w), p)| w * x * p * p)
            .sum();
        alpha.push(a);
        if k + 1 == n {
            break;
        }
        let sb = if k == 0 { 0.0 } else { beta[k].sqrt() };
        let next: Vec<f64> = xs
            .iter()
            .zip(&cur)
            .zip(&prev)
            .map(|((x, p), q)| (x - a) * p - sb * q)
            .collect();
        let norm2: f64 = ws.iter().zip(&next).map(|(w, p)| w * p * p).sum();
        beta.push(norm2);
        let inv = 1.0 / norm2.sqrt();
        prev = cur;
        cur = next.into_iter().map(|p| p * inv).collect();
    }
    Recurrence { alpha, beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{PI, SQRT_2};

    #[test]
    fn legendre_single_point() {
        let r = gauss_legendre(1, (-1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.nodes[0], 0.0);
        assert_abs_diff_eq!(r.weights[0], 2.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_two_point_exact_for_cubic() {
        let r = gauss_legendre(2, (-1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.integrate(|x| x * x), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.integrate(|x| x * x * x), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn legendre_sine() {
        let r = gauss_legendre(20, (0.0, PI)).unwrap();
        assert_abs_diff_eq!(r.integrate(f64::sin), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn legendre_monomial_exactness() {
        for n in 1..=20 {
            let r = gauss_legendre(n, (-1.0, 1.0)).unwrap();
            for k in 0..2 * n {
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 / (k as f64 + 1.0)
                };
                assert_abs_diff_eq!(r.integrate(|x| x.powi(k as i32)), exact, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn order_out_of_range() {
        assert!(gauss_legendre(0, (0.0, 1.0)).is_err());
        assert!(gauss_legendre(65, (0.0, 1.0)).is_err());
        assert!(gauss_jacobi(8, -1.0, 0.0, (-1.0, 1.0)).is_err());
        assert!(log_weight(0).is_err());
    }

    #[test]
    fn jacobi_inverse_sqrt_weight() {
        let r = gauss_jacobi(8, -0.5, 0.0, (-1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(r.integrate(|_| 1.0), 2.0 * SQRT_2, epsilon = 1e-12);
        // int (1-x)^{-1/2} x dx = int_0^2 u^{-1/2} (1 - u) du = (2 sqrt 2) / 3.
        assert_abs_diff_eq!(r.integrate(|x| x), 2.0 * SQRT_2 / 3.0, epsilon = 1e-12);
        let oracle =
            crate::quadrature::adaptive_integrate(|u| (1.0 - u) / u.sqrt(), (0.0, 2.0), 1e-13)
                .unwrap();
        assert_abs_diff_eq!(r.integrate(|x| x), oracle, epsilon = 1e-10);
    }

    #[test]
    fn jacobi_identity_case_is_legendre() {
        let j = gauss_jacobi(12, 0.0, 0.0, (-1.0, 1.0)).unwrap();
        let l = gauss_legendre(12, (-1.0, 1.0)).unwrap();
        for (a, b) in j.nodes.iter().zip(&l.nodes) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        for (a, b) in j.weights.iter().zip(&l.weights) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn jacobi_mapped_interval() {
        // int_0^2 (2 - x)^{1/2} x^{3/2} dx = 2^3 B(3/2, 5/2) = pi / 2.
        let r = gauss_jacobi(10, 0.5, 1.5, (0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(r.integrate(|_| 1.0), PI / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn log_weight_moments() {
        for n in [4, 12, 24, 40] {
            let r = log_weight(n).unwrap();
            for k in 0..(2 * n).min(21) {
                let exact = 1.0 / ((k + 1) as f64).powi(2);
                assert_abs_diff_eq!(r.integrate(|x| x.powi(k as i32)), exact, epsilon = 1e-13);
            }
            assert!(r.weights.iter().all(|&w| w > 0.0));
            assert!(r.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
        }
    }
}
