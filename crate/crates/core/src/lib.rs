//! Galerkin finite element / boundary integral solver for the bulk–surface
//! coupled Laplace problem on an open arc.
//!
//! The exterior field is a single-layer potential of a density `psi`
//! supported on the arc, coupled to a surface unknown `U` through
//!
//! ```text
//! -U'' + psi = f,   V_S psi - U = h   on the arc,
//! U'(b) = g(b),  -U'(a) = g(a)        at the endpoints,
//! ```
//!
//! where `V_S` is the single-layer operator with kernel
//! `-(1/2 pi) ln|X(s) - X(t)|`. Both unknowns can be discretized with plain
//! piecewise-linear elements or with elements enriched by the endpoint
//! singularities `d^{3/2}` (for `U`) and `d^{-1/2}` (for `psi`).

pub mod assembly;
pub mod diagnostics;
pub mod error;
pub mod geometry;
pub mod matrix;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod spaces;
pub mod validation;

pub use assembly::{assemble_system, bilinear_apply, BlockSystem, ProblemSpec, ScalarFn};
pub use diagnostics::{
    compatibility_residual, convergence_table, energy_norm_diff, fit_edge_exponent,
    ConvergenceRecord, Field,
};
pub use error::{Error, Result};
pub use geometry::{
    arc_by_name, arc_chord_constant, make_segment, make_semicircle, ArcParameterization, ParamPoint,
};
pub use matrix::DenseMatrix;
pub use potential::{eval_potential, field_grid, jump_check, FieldGrid, GridSpec, JumpCheck};
pub use quadrature::QuadratureOrders;
pub use solver::{condition_estimate, solve, Solution};
pub use spaces::{
    build_uniform_partition, cutoff_phi, prolong, Endpoint, EnrichedSpace, Method, Partition,
};
