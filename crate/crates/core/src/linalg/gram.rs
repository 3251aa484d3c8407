//! The edge-space Gram operator `𝒜𝒜* = 2I + |B|ᵀ|B|` and solvers for the
//! shifted system `(3I + |B|ᵀ|B|) x = b` that appears in every ADMM step.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::cg::conjugate_gradient;
use crate::error::{Error, Result};
use crate::graph::IncidenceMatrix;

/// Minimal compressed-sparse-row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = self.indptr[i]..self.indptr[i + 1];
        match self.indices[row.clone()].binary_search(&j) {
            Ok(k) => self.values[row.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.nrows, |i, _| {
            (self.indptr[i]..self.indptr[i + 1])
                .map(|k| self.values[k] * x[self.indices[k]])
                .sum()
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for k in self.indptr[i]..self.indptr[i + 1] {
                m[(i, self.indices[k])] = self.values[k];
            }
        }
        m
    }
}

fn incident_edges(inc: &IncidenceMatrix) -> Vec<Vec<usize>> {
    let mut at = vec![Vec::new(); inc.n()];
    for (e, &(i, j)) in inc.edges().iter().enumerate() {
        at[i].push(e);
        at[j].push(e);
    }
    at
}

/// Matrix form of `𝒜𝒜*`: `4` on the diagonal, `1` between edges sharing a node.
pub fn build_aat_matrix(inc: &IncidenceMatrix) -> CsrMatrix {
    let m = inc.num_edges();
    let at = incident_edges(inc);
    let mut indptr = Vec::with_capacity(m + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);
    for (e, &(i, j)) in inc.edges().iter().enumerate() {
        let mut row: Vec<(usize, f64)> = at[i]
            .iter()
            .chain(at[j].iter())
            .filter(|&&f| f != e)
            .map(|&f| (f, 1.0))
            .collect();
        row.push((e, 4.0));
        row.sort_by_key(|t| t.0);
        for (f, v) in row {
            indices.push(f);
            values.push(v);
        }
        indptr.push(indices.len());
    }
    CsrMatrix {
        nrows: m,
        ncols: m,
        indptr,
        indices,
        values,
    }
}

/// How the shifted Gram system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramStrategy {
    /// Dense Cholesky factor of the `|ℰ| × |ℰ|` matrix.
    Cholesky,
    /// Sherman–Morrison–Woodbury through the `n × n` matrix `3I + |B||B|ᵀ`.
    Smw,
    /// Matrix-free conjugate gradients.
    Cg,
}

impl GramStrategy {
    /// Picks the direct method with the smaller dense dimension, falling back
    /// to CG when both dimensions reach 5000.
    pub fn auto(n: usize, num_edges: usize) -> Self {
        const DIRECT_LIMIT: usize = 5000;
        if num_edges <= n && num_edges < DIRECT_LIMIT {
            GramStrategy::Cholesky
        } else if n < DIRECT_LIMIT {
            GramStrategy::Smw
        } else {
            GramStrategy::Cg
        }
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Cholesky(Cholesky<f64, Dyn>),
    Smw(Cholesky<f64, Dyn>),
    Cg,
}

/// Pre-factored solver for `(3I + |B|ᵀ|B|) x = b`.
#[derive(Debug, Clone)]
pub struct GramSolver {
    inc: IncidenceMatrix,
    factor: Factor,
    cg_tol: f64,
}

impl GramSolver {
    pub fn new(inc: &IncidenceMatrix, strategy: GramStrategy) -> Result<Self> {
        let factor = match strategy {
            GramStrategy::Cholesky => {
                let mut m = build_aat_matrix(inc).to_dense();
                for k in 0..m.nrows() {
                    m[(k, k)] += 1.0;
                }
                Factor::Cholesky(Cholesky::new(m).ok_or_else(|| {
                    Error::Factorization("3I + |B|ᵀ|B| is not positive definite".into())
                })?)
            }
            GramStrategy::Smw => {
                let n = inc.n();
                let mut m = DMatrix::identity(n, n) * 3.0;
                for &(i, j) in inc.edges() {
                    m[(i, i)] += 1.0;
                    m[(j, j)] += 1.0;
                    m[(i, j)] += 1.0;
                    m[(j, i)] += 1.0;
                }
                Factor::Smw(Cholesky::new(m).ok_or_else(|| {
                    Error::Factorization("3I + |B||B|ᵀ is not positive definite".into())
                })?)
            }
            GramStrategy::Cg => Factor::Cg,
        };
        Ok(Self {
            inc: inc.clone(),
            factor,
            cg_tol: 1e-10,
        })
    }

    pub fn auto(inc: &IncidenceMatrix) -> Result<Self> {
        Self::new(inc, GramStrategy::auto(inc.n(), inc.num_edges()))
    }

    pub fn strategy(&self) -> GramStrategy {
        match self.factor {
            Factor::Cholesky(_) => GramStrategy::Cholesky,
            Factor::Smw(_) => GramStrategy::Smw,
            Factor::Cg => GramStrategy::Cg,
        }
    }

    /// Relative residual target of the CG strategy (default `1e-10`).
    pub fn with_cg_tolerance(mut self, tol: f64) -> Self {
        self.cg_tol = tol;
        self
    }

    /// `(3I + |B|ᵀ|B|) x`, matrix-free.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.inc.abs_t_mul(&self.inc.abs_mul(x)) + x * 3.0
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        let m = self.inc.num_edges();
        if b.len() != m {
            return Err(Error::Dimension(format!(
                "right-hand side of length {} for {m} edges",
                b.len()
            )));
        }
        Ok(match &self.factor {
            Factor::Cholesky(ch) => ch.solve(b),
            Factor::Smw(ch) => {
                let z = ch.solve(&self.inc.abs_mul(b));
                (b - self.inc.abs_t_mul(&z)) / 3.0
            }
            Factor::Cg => {
                let tol = self.cg_tol * b.norm();
                conjugate_gradient(|v: &DVector<f64>| self.apply(v), b, tol, 10 * m.max(1)).x
            }
        })
    }
}

/// `‖𝒜‖ = sqrt(λ_max(2I + |B|ᵀ|B|))` by power iteration (relative tolerance
/// `1e-8` on the Rayleigh quotient). This is the operator norm of `𝒜` with
/// Frobenius norm on its input.
pub fn opnorm_a(inc: &IncidenceMatrix) -> f64 {
    let m = inc.num_edges();
    if m == 0 {
        return 0.0;
    }
    let apply = |v: &DVector<f64>| inc.abs_t_mul(&inc.abs_mul(v)) + v * 2.0;
    let mut v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
    let mut rayleigh = 0.0;
    for _ in 0..100_000 {
        let av = apply(&v);
        let next = v.dot(&av);
        let norm = av.norm();
        v = av / norm;
        if (next - rayleigh).abs() <= 1e-8 * next {
            rayleigh = next;
            break;
        }
        rayleigh = next;
    }
    rayleigh.sqrt()
}

/// `sup{‖𝒜X‖ : ‖X‖₂ ≤ 1} = 2·sqrt(|ℰ|)`: every component of `𝒜X` is the
/// quadratic form of `X` at `e_i − e_j`, bounded by `2‖X‖₂`, with equality
/// at `X = I`.
pub fn opnorm_a_spectral(inc: &IncidenceMatrix) -> f64 {
    2.0 * (inc.num_edges() as f64).sqrt()
}
