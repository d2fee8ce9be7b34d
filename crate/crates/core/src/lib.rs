//! Splitting primal-dual fixed-point solvers for composite convex problems
//! `min f(x) + g(x) + h(D x)`, with three execution regimes built on one
//! operator:
//!
//! - centralized full updates ([`solver`]),
//! - stochastic minibatch updates over batch replicas coupled by consensus
//!   ([`minibatch`]),
//! - synchronous and asynchronous agent updates on a communication graph,
//!   run in a deterministic seeded simulator ([`distributed`]).
//!
//! Every regime is a (possibly coordinate-masked) Krasnosel'skii-Mann
//! iteration of the same nonexpansive operator ([`km`]); the randomized
//! variants are bitwise-testable masked applications of the centralized
//! step. Problem instantiations (LASSO, l1-regularized logistic regression),
//! dataset I/O, and an independent proximal-gradient reference solver round
//! out the toolkit.

pub mod distributed;
pub mod error;
pub mod graph;
pub mod io;
pub mod km;
pub mod linalg;
pub mod linop;
pub mod minibatch;
pub mod norm;
pub mod problems;
pub mod prox;
pub mod reference;
pub mod smooth;
pub mod solver;
pub mod trace;

pub use error::{PdfpError, Result};
pub use km::{
    fixed_point_residual, km_step, randomized_km_run, BlockOperator, BlockPartition,
    CoordinateSampler, RelaxationSchedule, SamplerKind, StoppingRule,
};
pub use linop::{power_iteration_opnorm, IdentityMap, LinearMap, MatrixMap, StackedMap};
pub use norm::{lambda_norm, ProductPoint, ResidualNorm};
pub use prox::{project_consensus, project_pair_consensus, soft_threshold, ProxFn};
pub use smooth::SmoothFn;
pub use solver::{
    as_fixed_point_operator, pdfp2o_step, solve, spdfp2o_step, Algo, CheckedParams,
    CompositeProblem, PdfpParams, SolverState,
};
pub use trace::{IterationTrace, TraceRecord};
