//! Multi-task relationship learning with a distributed primal-dual solver.
//!
//! Each task keeps its own dual block and runs local SDCA on a worker; a
//! server aggregates per-task dual summaries, maintains the weights and
//! alternates with a closed-form update of the task covariance.

pub mod data;
pub mod error;
pub mod linalg;
pub mod local;
pub mod loss;
pub mod objective;
pub mod problem;
pub mod rng;
pub mod runtime;
pub mod server;

pub use error::{Error, Result};
pub use loss::{Conjugate, CoordinateState, Loss};
pub use objective::{duality_gap, dual_objective, primal_objective, weights_from_duals, ObjectiveReport};
pub use problem::{
    validate_problem, DualState, FeatureMap, LocalIters, MultiTaskProblem, RhoMode, RunConfig,
    TaskCovariance, TaskData,
};
pub use runtime::{run_dmtrl, run_ssdca, run_stl, run_w_step, RoundTrace, RunOutput};
pub use server::{omega_step, rho_bound};
