//! Linear decision rules `x = x̄ + Xζ` and the deterministic counterpart of a
//! program whose solution is perturbed by noise `ζ`.

mod privatize;
mod query;
mod rule;
mod safety;
mod vertex;

pub use privatize::{
    privatize, privatize_with, reduce_quadratic_objective, reformulate_individual_soc, split_equalities,
    BlockTreatment, ChanceSpec, EtaBar, PrivatizeOptions, Privatized, QuadraticReduction,
};
pub use query::{apply_query_constraint, QueryConstraint, RecourseEquality};
pub use rule::{release_query, DecisionRule, Entry, Release, RuleLayout};
pub use safety::{safety_factor, SafetyKind};
pub use vertex::{hyperrectangle_vertices, vertex_sample_size, MAX_VERTEX_DIM};
