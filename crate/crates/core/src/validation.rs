//! Self-checks of the quadrature layer and of assembled systems against
//! closed-form values.

use std::f64::consts::PI;

use crate::assembly::{assemble_system, ProblemSpec};
use crate::diagnostics::{
    chebyshev_oracle_check, compatibility_residual, fourier_multiplier_check,
};
use crate::error::Result;
use crate::geometry::make_segment;
use crate::potential::eval_potential_guarded;
use crate::quadrature::{
    galerkin_log_pair, log_weight, Piece, PieceMap, QuadratureOrders, RuleSet,
};
use crate::solver::{solve, Solution};
use crate::spaces::{build_uniform_partition, Endpoint, EnrichedSpace, Method};

/// Elements per level for the system checks.
const CHECK_ELEMENTS: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCheck {
    pub name: String,
    /// Deviation from the expected value.
    pub measured: f64,
    pub tolerance: f64,
}

impl OracleCheck {
    fn new(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.measured.abs() <= self.tolerance
    }
}

/// Largest coefficient mismatch between `s` and `-s` for a solution on a
/// domain symmetric about zero.
pub fn mirror_defect(sol: &Solution) -> f64 {
    let mut worst = 0.0f64;
    for (space, c) in [
        (&sol.u_space, &sol.u_coeffs),
        (&sol.psi_space, &sol.psi_coeffs),
    ] {
        let m = space.num_hats();
        for j in 0..m {
            worst = worst.max((c[j] - c[m - 1 - j]).abs());
        }
        if let (Some(l), Some(r)) = (
            space.singular_index(Endpoint::Left),
            space.singular_index(Endpoint::Right),
        ) {
            worst = worst.max((c[l] - c[r]).abs());
        }
    }
    worst
}

pub fn quadrature_checks() -> Result<Vec<OracleCheck>> {
    let orders = QuadratureOrders::default();
    let mut out = Vec::new();

    let rule = log_weight(orders.log)?;
    let moments = (0..=10)
        .map(|k| (rule.integrate(|v| v.powi(k)) - 1.0 / ((k + 1) as f64).powi(2)).abs())
        .fold(0.0, f64::max);
    out.push(OracleCheck::new(
        "log-weight moments k <= 10",
        moments,
        1e-12,
    ));

    let arc = make_segment();
    let part = build_uniform_partition(arc.domain(), 8)?;
    let u_space = EnrichedSpace::for_u(part.clone(), Method::Standard);
    let psi_space = EnrichedSpace::for_psi(part, Method::Standard).with_boundary_hats(true);
    let (du, dp) = (u_space.dim(), psi_space.dim());
    let unit = Solution::from_coefficients(
        "unit density",
        arc,
        u_space,
        psi_space,
        vec![0.0; du],
        vec![1.0; dp],
    )?;
    let integral = -2.0 * PI * eval_potential_guarded(&unit, [0.0, 0.0], 0.0)?;
    out.push(OracleCheck::new(
        "int ln|t| over [-1, 1] = -2",
        integral + 2.0,
        1e-10,
    ));

    out.push(OracleCheck::new(
        "Chebyshev identity",
        chebyshev_oracle_check()?,
        1e-8,
    ));

    let rules = RuleSet::new(orders)?;
    let square = [Piece::new(0.0, 1.0, (0.0, 1.0), 0, PieceMap::Affine)];
    let double = -2.0 * PI * galerkin_log_pair(|_| 1.0, &square, |_| 1.0, &square, &rules)?;
    out.push(OracleCheck::new(
        "double log integral = -3/2",
        double + 1.5,
        1e-9,
    ));

    let (relative, zero) = fourier_multiplier_check(8)?;
    out.push(OracleCheck::new(
        "torus multipliers 1 <= |k| <= 8",
        relative,
        1e-6,
    ));
    out.push(OracleCheck::new("torus multiplier k = 0", zero, 1e-6));
    Ok(out)
}

pub fn system_checks() -> Result<Vec<OracleCheck>> {
    let mut out = Vec::new();
    for example in ["ex1", "ex2"] {
        for method in [Method::Standard, Method::Enriched] {
            let spec = ProblemSpec::example(example, method, CHECK_ELEMENTS)?;
            let sys = assemble_system(&spec)?;
            let sol = solve(&sys)?;
            let tag = format!("{example} {}", method.as_str());
            out.push(OracleCheck::new(
                format!("{tag} V symmetry"),
                sys.v.asymmetry(),
                1e-10,
            ));
            out.push(OracleCheck::new(
                format!("{tag} compatibility"),
                compatibility_residual(&sol, &spec),
                1e-8,
            ));
            if example == "ex1" {
                out.push(OracleCheck::new(
                    format!("{tag} segment smooth remainder"),
                    sys.v_smooth.max_abs(),
                    1e-13,
                ));
                out.push(OracleCheck::new(
                    format!("{tag} mirror symmetry"),
                    mirror_defect(&sol),
                    1e-8,
                ));
            }
        }
    }
    Ok(out)
}

/// Every quadrature and system check.
pub fn oracle_suite() -> Result<Vec<OracleCheck>> {
    let mut out = quadrature_checks()?;
    out.extend(system_checks()?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::chebyshev_deviation_with;

    #[test]
    fn suite_passes() {
        let checks = oracle_suite().unwrap();
        assert!(checks.len() >= 18);
        for c in &checks {
            assert!(c.passed(), "{c:?}");
        }
    }

    #[test]
    fn perturbed_log_weights_break_chebyshev_identity() {
        let mut rule = log_weight(32).unwrap();
        rule.weights.iter_mut().for_each(|w| *w *= 1.0 + 1e-3);
        assert!(chebyshev_deviation_with(32, &rule).unwrap() > 1e-8);
    }
}
