//! Penalty approximation of frictional contact problems for linear elastic
//! bodies: meshing, finite element assembly, contact laws, energies, solvers
//! and the lambda-sweep experiment.

pub mod contact_laws;
pub mod energy;
pub mod error;
pub mod experiment;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod solver;

pub use contact_laws::{verify_conditions, ConditionReport, ContactLaw, SamplingGrid};
pub use energy::{
    distance_to_k, energy_constrained, energy_penalty, gradient_constrained, gradient_penalty, probe_set,
    vi_residual, ConstrainedProblem, PenaltyProblem,
};
pub use error::{Error, Result};
pub use fem::{assemble, check_smallness, estimate_trace_constant, DiscreteSystem, Material};
pub use linalg::CsrMatrix;
pub use mesh::{contact_weights, generate_rect_mesh, rect_mesh, tag_boundary, BoundaryTag, Mesh};
pub use solver::oracle::{active_set_oracle, OracleSolution};
pub use solver::{minimize, solve_constrained, solve_penalty, Method, SolveOptions, SolveReport};
