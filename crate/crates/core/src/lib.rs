//! Learning sparse combinatorial graph Laplacians from covariance data.
//!
//! The estimator minimizes
//!
//! ```text
//! -log det(Θ + J) + <S, Θ> + P(Θ),    Θ = B Diag(w) Bᵀ,  w ≥ 0
//! ```
//!
//! where `P` is the minimax concave penalty (MCP), `B` the node-arc incidence
//! matrix of a connectivity prior and `J = 11ᵀ/n`. The non-convex problem is
//! handled by an inexact proximal difference-of-convex loop ([`dca`]) whose
//! convex subproblems are solved in the dual by a semismooth Newton method
//! ([`ssn`]). The ℓ1-penalized convex model is solved by ADMM ([`admm`]) and
//! provides the warm start.
//!
//! Supporting modules cover graph generators and covariance synthesis
//! ([`graph`], [`synth`]), dense symmetric linear algebra ([`linalg`]),
//! evaluation metrics ([`metrics`]), file formats ([`io`]) and the synthetic
//! benchmark harness ([`experiment`]).

pub mod admm;
pub mod dca;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod penalty;
pub mod problem;
pub mod report;
pub mod ssn;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{ConnectivityPrior, EdgeGraph, IncidenceMatrix, PriorKind};
pub use penalty::{DcPenalty, PenaltyParams};
pub use problem::ProblemData;
pub use report::{Model, SolveReport, Termination};
