//! Dense direct solution of the block system.

use crate::assembly::BlockSystem;
use crate::error::{Error, Result};
use crate::geometry::{ArcParameterization, ParamPoint};
use crate::matrix::DenseMatrix;
use crate::spaces::{EnrichedSpace, Method};

/// `P M = L U` with unit lower `L`, both stored in one row-major array.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    /// Gaussian elimination with partial pivoting.
    ///
    /// Fails when a pivot falls below `n * eps * max|M|`.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        let n = m.rows();
        if m.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.cols(),
            });
        }
        let mut lu = m.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = n as f64 * f64::EPSILON * m.max_abs();
        for k in 0..n {
            let (mut piv, mut best) = (k, lu[k * n + k].abs());
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    piv = i;
                    best = v;
                }
            }
            if !(best > threshold) {
                return Err(Error::SingularMatrix { pivot: k });
            }
            if piv != k {
                for j in 0..n {
                    lu.swap(k * n + j, piv * n + j);
                }
                perm.swap(k, piv);
            }
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let pivot_row = &head[k * n..];
            let inv = 1.0 / pivot_row[k];
            for row in tail.chunks_exact_mut(n) {
                let l = row[k] * inv;
                row[k] = l;
                if l != 0.0 {
                    for (x, &p) in row[k + 1..].iter_mut().zip(&pivot_row[k + 1..]) {
                        *x -= l * p;
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: f64 = row.iter().zip(&x[..i]).map(|(l, y)| l * y).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: f64 = row[i + 1..]
                .iter()
                .zip(&x[i + 1..])
                .map(|(u, y)| u * y)
                .sum();
            x[i] = (x[i] - s) / row[i];
        }
        x
    }

    /// Solves `M^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut w = b.to_vec();
        for i in 0..n {
            w[i] /= self.lu[i * n + i];
            let wi = w[i];
            for j in (i + 1)..n {
                w[j] -= self.lu[i * n + j] * wi;
            }
        }
        for i in (0..n).rev() {
            let wi = w[i];
            for j in 0..i {
                w[j] -= self.lu[i * n + j] * wi;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = w[i];
        }
        x
    }

    /// Hager's estimate of `||M^{-1}||_1`, safeguarded by Higham's
    /// alternating-sign test vector.
    pub fn inverse_norm_one_estimate(&self) -> f64 {
        let n = self.n;
        let mut x = vec![1.0 / n as f64; n];
        let mut est = 0.0;
        for _ in 0..5 {
            let y = self.solve(&x);
            est = y.iter().map(|v| v.abs()).sum::<f64>();
            let xi: Vec<f64> = y
                .iter()
                .map(|&v| if v >= 0.0 { 1.0 } else { -1.0 })
                .collect();
            let z = self.solve_transpose(&xi);
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0f64), |(bj, bv), (j, &v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
            let ztx: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
            if zmax <= ztx {
                break;
            }
            x.fill(0.0);
            x[j] = 1.0;
        }
        let alt: Vec<f64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * (1.0 + i as f64 / (n.max(2) - 1) as f64)
            })
            .collect();
        let y = self.solve(&alt);
        let alt_est = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        est.max(alt_est)
    }
}

/// Scaled residual `||M x - b||_inf / (||M||_inf ||x||_inf + ||b||_inf)`.
pub fn scaled_residual(m: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r = m.mul_vec(x);
    let rmax = r
        .iter()
        .zip(b)
        .fold(0.0f64, |acc, (ri, bi)| acc.max((ri - bi).abs()));
    let xmax = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let bmax = b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let denom = m.norm_inf() * xmax + bmax;
    if denom == 0.0 {
        0.0
    } else {
        rmax / denom
    }
}

/// LU solve with one step of iterative refinement. Returns the solution
/// and its scaled residual.
pub fn solve_dense(m: &DenseMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if b.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: b.len(),
        });
    }
    let lu = LuFactors::new(m)?;
    let mut x = lu.solve(b);
    let mx = m.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect();
    let dx = lu.solve(&r);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    let res = scaled_residual(m, &x, b);
    Ok((x, res))
}

/// 1-norm condition estimate of a square matrix; infinite when singular.
pub fn condition_estimate_matrix(m: &DenseMatrix) -> f64 {
    match LuFactors::new(m) {
        Ok(lu) => m.norm_one() * lu.inverse_norm_one_estimate(),
        Err(_) => f64::INFINITY,
    }
}

/// 1-norm condition estimate of the full block matrix.
pub fn condition_estimate(sys: &BlockSystem) -> f64 {
    condition_estimate_matrix(&sys.full_matrix())
}

/// Discrete solution `(U_h, psi_h)`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: String,
    pub arc: ArcParameterization,
    /// Neumann data `(g_left, g_right)` of the problem.
    pub g: (f64, f64),
    pub u_space: EnrichedSpace,
    pub psi_space: EnrichedSpace,
    pub u_coeffs: Vec<f64>,
    pub psi_coeffs: Vec<f64>,
    /// Scaled residual of the linear solve.
    pub residual: f64,
}

impl Solution {
    /// Assembles a solution directly from coefficients, without solving.
    pub fn from_coefficients(
        problem: impl Into<String>,
        arc: ArcParameterization,
        u_space: EnrichedSpace,
        psi_space: EnrichedSpace,
        u_coeffs: Vec<f64>,
        psi_coeffs: Vec<f64>,
    ) -> Result<Self> {
        for (space, coeffs) in [(&u_space, &u_coeffs), (&psi_space, &psi_coeffs)] {
            if coeffs.len() != space.dim() {
                return Err(Error::DimensionMismatch {
                    expected: space.dim(),
                    found: coeffs.len(),
                });
            }
        }
        Ok(Self {
            problem: problem.into(),
            arc,
            g: (0.0, 0.0),
            u_space,
            psi_space,
            u_coeffs,
            psi_coeffs,
            residual: 0.0,
        })
    }

    pub fn with_neumann(mut self, g_left: f64, g_right: f64) -> Self {
        self.g = (g_left, g_right);
        self
    }

    pub fn method(&self) -> Method {
        self.u_space.method()
    }

    pub fn elements(&self) -> usize {
        self.u_space.partition().num_elements()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.u_space.domain()
    }

    /// `U_h(s)`.
    pub fn u(&self, s: f64) -> Result<f64> {
        self.u_space.eval_function(&self.u_coeffs, s, 0)
    }

    /// `U_h'(s)`.
    pub fn u_derivative(&self, s: f64) -> Result<f64> {
        self.u_space.eval_function(&self.u_coeffs, s, 1)
    }

    /// `psi_h(s)`; endpoints are rejected when the density carries singular
    /// terms.
    pub fn psi(&self, s: f64) -> Result<f64> {
        self.psi_space.eval_function(&self.psi_coeffs, s, 0)
    }

    /// `psi_h` at a point with accurate endpoint distances.
    pub fn psi_at(&self, p: &ParamPoint) -> Result<f64> {
        let e = self.psi_space.partition().locate(p.s);
        self.psi_space.eval_function_at(&self.psi_coeffs, e, p, 0)
    }

    /// `U_h` at a point with accurate endpoint distances.
    pub fn u_at(&self, p: &ParamPoint) -> Result<f64> {
        let e = self.u_space.partition().locate(p.s);
        self.u_space.eval_function_at(&self.u_coeffs, e, p, 0)
    }
}

/// Solves the full block system.
pub fn solve(sys: &BlockSystem) -> Result<Solution> {
    let m = sys.full_matrix();
    let (z, residual) = solve_dense(&m, &sys.rhs())?;
    let nu = sys.dim_u();
    Ok(Solution {
        problem: sys.problem.clone(),
        arc: sys.arc.clone(),
        g: sys.g,
        u_space: sys.u_space.clone(),
        psi_space: sys.psi_space.clone(),
        u_coeffs: z[..nu].to_vec(),
        psi_coeffs: z[nu..].to_vec(),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn one_by_one() {
        let m = DenseMatrix::from_rows(&[vec![2.0]]).unwrap();
        let (x, res) = solve_dense(&m, &[4.0]).unwrap();
        assert_eq!(x, vec![2.0]);
        assert_eq!(res, 0.0);
    }

    #[test]
    fn duplicated_row_is_singular() {
        let m = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![0.5, 1.0, 4.0],
            vec![1.0, 2.0, 3.0],
        ])
        .unwrap();
        match solve_dense(&m, &[1.0, 2.0, 3.0]) {
            Err(Error::SingularMatrix { pivot }) => assert_eq!(pivot, 1),
            other => panic!("expected singular matrix, got {other:?}"),
        }
        assert!(condition_estimate_matrix(&m).is_infinite());
    }

    #[test]
    fn pivoting_and_transpose_solve() {
        let m = DenseMatrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ])
        .unwrap();
        let lu = LuFactors::new(&m).unwrap();
        let b = [1.0, -2.0, 0.5];
        let x = lu.solve(&b);
        for (r, bi) in m.mul_vec(&x).iter().zip(b) {
            assert_relative_eq!(*r, bi, epsilon = 1e-14);
        }
        let y = lu.solve_transpose(&b);
        for (r, bi) in m.transpose().mul_vec(&y).iter().zip(b) {
            assert_relative_eq!(*r, bi, epsilon = 1e-14);
        }
    }

    #[test]
    fn condition_of_known_matrices() {
        assert_relative_eq!(
            condition_estimate_matrix(&DenseMatrix::identity(5)),
            1.0,
            max_relative = 1e-14
        );
        let d = condition_estimate_matrix(&DenseMatrix::from_diagonal(&[1.0, 1e-8]));
        assert!((0.5e8..=2e8).contains(&d), "{d}");
    }

    #[test]
    fn condition_estimate_is_a_lower_bound_close_to_exact() {
        // Hilbert matrix of order 4: exact 1-norm condition 28375.
        let m = DenseMatrix::from_rows(
            &(0..4)
                .map(|i| (0..4).map(|j| 1.0 / (i + j + 1) as f64).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert_relative_eq!(condition_estimate_matrix(&m), 28375.0, max_relative = 1e-6);
    }
}
