use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Symmetric eigendecomposition `X = U Diag(Λ) Uᵀ` with `Λ` ascending.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub vectors: DMatrix<f64>,
    pub values: DVector<f64>,
}

impl SymEig {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.values);
        symmetrize(&(scaled * self.vectors.transpose()))
    }

    /// `U Diag(f(Λ)) Uᵀ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let fv = self.values.map(f);
        let mut scaled = self.vectors.clone();
        for (mut col, &s) in scaled.column_iter_mut().zip(fv.iter()) {
            col *= s;
        }
        symmetrize(&(scaled * self.vectors.transpose()))
    }
}

/// `(X + Xᵀ)/2`.
pub fn symmetrize(x: &DMatrix<f64>) -> DMatrix<f64> {
    (x + x.transpose()) * 0.5
}

/// Frobenius inner product `⟨X, Y⟩ = tr(XᵀY)`.
pub fn frob_inner(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.dot(y)
}

pub fn sym_eig(x: &DMatrix<f64>) -> Result<SymEig> {
    if x.nrows() != x.ncols() {
        return Err(Error::Dimension(format!(
            "eigendecomposition of a {}x{} matrix",
            x.nrows(),
            x.ncols()
        )));
    }
    let n = x.nrows();
    if n == 0 {
        return Ok(SymEig {
            vectors: DMatrix::zeros(0, 0),
            values: DVector::zeros(0),
        });
    }
    let norm = x.norm();
    let asym = (x - x.transpose()).norm();
    let tol = 1e-12 * norm.max(f64::MIN_POSITIVE);
    if asym > tol {
        return Err(Error::NotSymmetric { asym, tol });
    }
    if !norm.is_finite() {
        return Err(Error::EigenNonConvergence);
    }
    let eig = symmetrize(x)
        .try_symmetric_eigen(f64::EPSILON, 10_000)
        .ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k))
            .collect::<Vec<_>>(),
    );
    Ok(SymEig { vectors, values })
}

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
pub fn spectral_norm_sym(x: &DMatrix<f64>) -> Result<f64> {
    if x.is_empty() {
        return Ok(0.0);
    }
    let vals = symmetrize(x).symmetric_eigenvalues();
    Ok(vals.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}
