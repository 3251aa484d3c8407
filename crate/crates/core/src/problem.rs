use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{ConnectivityPrior, IncidenceMatrix};
use crate::penalty::{objective_f, PenaltyParams};

/// Covariance data, connectivity prior and penalty parameters of one
/// estimation problem, with the derived incidence matrix and `J = 11ᵀ/n`.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub s: DMatrix<f64>,
    pub prior: ConnectivityPrior,
    pub penalty: PenaltyParams,
    inc: IncidenceMatrix,
    j: DMatrix<f64>,
}

impl ProblemData {
    pub fn new(s: DMatrix<f64>, prior: ConnectivityPrior, penalty: PenaltyParams) -> Result<Self> {
        let n = prior.n();
        if s.nrows() != n || s.ncols() != n {
            return Err(Error::Dimension(format!(
                "covariance is {}x{} but the prior has {n} nodes",
                s.nrows(),
                s.ncols()
            )));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "covariance has non-finite entries".into(),
            ));
        }
        let asym = (&s - s.transpose()).amax();
        if asym > 1e-10 * s.amax().max(1.0) {
            return Err(Error::NotSymmetric {
                asym,
                tol: 1e-10 * s.amax().max(1.0),
            });
        }
        let s = (&s + s.transpose()) * 0.5;
        let inc = prior.incidence();
        let j = DMatrix::from_element(n, n, 1.0 / n as f64);
        Ok(Self {
            s,
            prior,
            penalty,
            inc,
            j,
        })
    }

    pub fn n(&self) -> usize {
        self.prior.n()
    }

    pub fn num_edges(&self) -> usize {
        self.inc.num_edges()
    }

    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.inc
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    /// Same data with different penalty parameters.
    pub fn with_penalty(&self, penalty: PenaltyParams) -> Self {
        Self {
            penalty,
            ..self.clone()
        }
    }

    /// `K = S + λI`.
    pub fn k_l1(&self) -> DMatrix<f64> {
        let n = self.n();
        &self.s + DMatrix::identity(n, n) * self.penalty.lambda
    }

    /// `log det(𝒜*w + J)`, or `None` if an eigenvalue falls below `1e-12`.
    pub fn logdet_shifted(&self, w: &DVector<f64>) -> Option<f64> {
        let theta = self.inc.apply_astar(w).ok()?;
        logdet_pd(&(theta + &self.j))
    }

    /// MCP objective `f(w)`.
    pub fn objective(&self, w: &DVector<f64>) -> f64 {
        objective_f(w, self)
    }

    /// ℓ1 objective `−log det(𝒜*w + J) + ⟨S + λI, 𝒜*w⟩`.
    pub fn l1_objective(&self, w: &DVector<f64>) -> f64 {
        if w.iter().any(|&v| v < 0.0) {
            return f64::INFINITY;
        }
        match (self.logdet_shifted(w), self.inc.apply_a(&self.k_l1())) {
            (Some(ld), Ok(ak)) => -ld + ak.dot(w),
            _ => f64::INFINITY,
        }
    }
}

/// `log det X` for symmetric `X` whose eigenvalues all exceed `1e-12`.
pub fn logdet_pd(x: &DMatrix<f64>) -> Option<f64> {
    let vals = ((x + x.transpose()) * 0.5).symmetric_eigenvalues();
    if vals.iter().any(|&v| !(v >= 1e-12)) {
        return None;
    }
    Some(vals.iter().map(|v| v.ln()).sum())
}
