//! Differentially private conic optimization.
//!
//! A deterministic program `min cᵀx s.t. b − Ax ∈ K` is turned into a
//! chance-constrained counterpart over linear decision rules `x̄ + Xζ`, where
//! `ζ` is the privacy noise. Releasing `q(x̄) + ζ̂` is then private while the
//! perturbed solution stays feasible with a controlled probability.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod apps;
pub mod conic;
pub mod dp;
pub mod error;
pub mod harness;
pub mod ldr;
pub mod risk;
pub mod solver;
mod util;

pub use conic::{build_simple_lp, cone_membership, ConeKind, ConeSpec, ConicProgram};
pub use error::{Error, Result};
pub use solver::{solve, Solution, SolverSettings, Status};
