//! Solver output shared by the ADMM and DCA paths.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::EdgeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    CglMcp,
    CglL1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    IterationCap,
    /// The SSN tolerance was tightened the maximum number of times without
    /// producing a step that satisfies the inexactness certificate.
    CertificateUnattained,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        self == Termination::Converged
    }

    /// Process exit code: 0 on convergence, 2 otherwise.
    pub fn exit_code(self) -> i32 {
        if self.is_converged() {
            0
        } else {
            2
        }
    }
}

/// Final state of an ADMM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmSummary {
    pub iterations: usize,
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub pobj: f64,
    /// `None` when `Y + K` is not positive definite.
    pub dobj: Option<f64>,
    pub sigma: f64,
    pub termination: Termination,
}

impl AdmmSummary {
    pub fn max_residual(&self) -> f64 {
        self.eta_p.max(self.eta_d).max(self.eta_g)
    }
}

/// Residuals sampled during an ADMM run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmmRecord {
    pub iteration: usize,
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub pobj: f64,
    pub sigma: f64,
}

/// One accepted outer DCA step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcaIteration {
    pub iteration: usize,
    pub objective: f64,
    pub sigma: f64,
    pub step_norm: f64,
    pub ssn_iterations: usize,
    pub retries: usize,
    /// Final gradient norm of the dual subproblem.
    pub dual_residual: f64,
    pub r: f64,
    pub bound: f64,
    pub delta_norm: f64,
    pub stop_rhs: f64,
    pub descent_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub model: Model,
    pub n: usize,
    pub edges: Vec<(usize, usize)>,
    pub w: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub wall_time_s: f64,
    pub admm: Option<AdmmSummary>,
    #[serde(default)]
    pub admm_history: Vec<AdmmRecord>,
    #[serde(default)]
    pub dca_history: Vec<DcaIteration>,
    /// Resolved solver settings.
    #[serde(default)]
    pub config: serde_json::Value,
}

impl SolveReport {
    pub fn weights(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.w)
    }

    /// `Θ = 𝒜*w`.
    pub fn theta(&self) -> Result<DMatrix<f64>> {
        EdgeGraph::new(self.n, self.edges.iter().copied())?
            .incidence()
            .apply_astar(&self.weights())
    }

    /// Graph of the edges whose weight exceeds `threshold_rel · max(w)`.
    pub fn estimated_graph(&self, threshold_rel: f64) -> Result<EdgeGraph> {
        let kept = crate::metrics::edge_set(&self.weights(), &self.edges, threshold_rel);
        let triples = self
            .edges
            .iter()
            .zip(&self.w)
            .filter(|(e, _)| kept.binary_search(e).is_ok())
            .map(|(&(i, j), &w)| (i, j, w));
        EdgeGraph::with_weights(self.n, triples)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
