//! The minimax concave penalty and its difference-of-convex split.
//!
//! `p(x) = λ|x| − h(x)` with `h` convex and continuously differentiable, so
//! the penalized objective is `g(w) − h(𝒜*w)` with `g` convex. Other
//! penalties with the same split (e.g. SCAD) plug in through [`DcPenalty`].

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::ProblemData;

/// A scalar penalty written as `λ|x| − h(x)` with convex, smooth `h`.
pub trait DcPenalty {
    /// Weight of the ℓ1 part.
    fn lambda(&self) -> f64;
    fn value(&self, x: f64) -> f64;
    fn h(&self, x: f64) -> f64;
    fn h_grad(&self, x: f64) -> f64;
}

/// MCP parameters: `λ ≥ 0`, `γ > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub lambda: f64,
    pub gamma: f64,
}

impl PenaltyParams {
    pub fn new(lambda: f64, gamma: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be non-negative, got {lambda}"
            )));
        }
        if !(gamma > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must exceed 1, got {gamma}"
            )));
        }
        Ok(Self { lambda, gamma })
    }
}

impl DcPenalty for PenaltyParams {
    fn lambda(&self) -> f64 {
        self.lambda
    }

    fn value(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.gamma * self.lambda {
            self.lambda * a - x * x / (2.0 * self.gamma)
        } else {
            0.5 * self.gamma * self.lambda * self.lambda
        }
    }

    fn h(&self, x: f64) -> f64 {
        let a = x.abs();
        if a <= self.gamma * self.lambda {
            x * x / (2.0 * self.gamma)
        } else {
            self.lambda * a - 0.5 * self.gamma * self.lambda * self.lambda
        }
    }

    fn h_grad(&self, x: f64) -> f64 {
        (x.abs() / self.gamma).min(self.lambda) * sign(x)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `∇h(Θ)`: the scalar rule off the diagonal, zero on it.
pub fn grad_h_matrix<P: DcPenalty + ?Sized>(theta: &DMatrix<f64>, pen: &P) -> DMatrix<f64> {
    DMatrix::from_fn(theta.nrows(), theta.ncols(), |i, j| {
        if i == j {
            0.0
        } else {
            pen.h_grad(theta[(i, j)])
        }
    })
}

/// `P(Θ) = Σ_{i≠j} p(Θ_ij)`.
pub fn penalty_value<P: DcPenalty + ?Sized>(theta: &DMatrix<f64>, pen: &P) -> f64 {
    off_diagonal_sum(theta, |x| pen.value(x))
}

/// `h(Θ) = Σ_{i≠j} h(Θ_ij)`.
pub fn h_value<P: DcPenalty + ?Sized>(theta: &DMatrix<f64>, pen: &P) -> f64 {
    off_diagonal_sum(theta, |x| pen.h(x))
}

/// `‖Θ‖_{1,off} = Σ_{i≠j} |Θ_ij|`.
pub fn l1_off(theta: &DMatrix<f64>) -> f64 {
    off_diagonal_sum(theta, f64::abs)
}

fn off_diagonal_sum(theta: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for j in 0..theta.ncols() {
        for i in 0..theta.nrows() {
            if i != j {
                total += f(theta[(i, j)]);
            }
        }
    }
    total
}

/// `f(w) = −log det(𝒜*w + J) + ⟨S, 𝒜*w⟩ + P(𝒜*w)`; `+∞` when `w` has a
/// negative entry or `𝒜*w + J` has an eigenvalue below `1e-12`.
pub fn objective_f(w: &DVector<f64>, problem: &ProblemData) -> f64 {
    let Some(logdet) = problem.logdet_shifted(w) else {
        return f64::INFINITY;
    };
    if w.iter().any(|&v| v < 0.0) {
        return f64::INFINITY;
    }
    let aw = match problem.incidence().apply_a(&problem.s) {
        Ok(v) => v,
        Err(_) => return f64::INFINITY,
    };
    // each edge appears twice off the diagonal of 𝒜*w, with value −w_e
    let pen: f64 = w.iter().map(|&we| 2.0 * problem.penalty.value(-we)).sum();
    -logdet + aw.dot(w) + pen
}
