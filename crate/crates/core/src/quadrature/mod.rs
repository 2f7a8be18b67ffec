//! Numerical integration: Gaussian rules, an adaptive oracle, and the
//! singular double integrals of the log-kernel Galerkin matrix.

mod adaptive;
pub(crate) mod pair;
mod rules;

pub use adaptive::{adaptive_integrate, adaptive_with_breakpoints, MAX_SUBINTERVALS};
pub use pair::{
    galerkin_log_pair, galerkin_smooth_pair, integration_pieces, PairNode, Piece, PieceEnd,
    PieceMap, RuleSet,
};
pub use rules::{gauss_jacobi, gauss_legendre, log_weight, QuadratureRule, MAX_ORDER};

/// Quadrature orders used throughout assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureOrders {
    /// Gauss–Legendre points per piece and direction.
    pub gauss: usize,
    /// Points of the `-ln x` rule in the singular splittings.
    pub log: usize,
    /// Equal subpieces per element inside the cutoff transition zone.
    pub transition_split: usize,
}

impl Default for QuadratureOrders {
    fn default() -> Self {
        Self {
            gauss: 16,
            log: 24,
            transition_split: 4,
        }
    }
}

impl QuadratureOrders {
    /// Every order doubled, capped at [`MAX_ORDER`].
    pub fn doubled(&self) -> Self {
        Self {
            gauss: (2 * self.gauss).min(MAX_ORDER),
            log: (2 * self.log).min(MAX_ORDER),
            transition_split: 2 * self.transition_split,
        }
    }
}
