//! Proximal maps of `ℓ(X) = −log det X` and of the non-negative orthant.

use nalgebra::{DMatrix, DVector};

use super::eig::{sym_eig, symmetrize};
use crate::error::{Error, Result};

/// Spectral data of one log-det prox evaluation, reused for its derivative.
///
/// With `X = U Diag(Λ) Uᵀ` and `s_i = sqrt(Λ_i² + 4/σ)`:
/// `D_i = (s_i + Λ_i)/2` and `Γ_ij = (D_i + D_j)/(s_i + s_j)`, which equals
/// `½[1 + (Λ_i + Λ_j)/(s_i + s_j)]` and lies in `(0, 1)`.
#[derive(Debug, Clone)]
pub struct EigCache {
    pub u: DMatrix<f64>,
    pub lambda: DVector<f64>,
    pub sigma: f64,
    pub d: DVector<f64>,
    pub gamma: DMatrix<f64>,
}

impl EigCache {
    fn new(u: DMatrix<f64>, lambda: DVector<f64>, sigma: f64) -> Self {
        let n = lambda.len();
        let s = lambda.map(|l| (l * l + 4.0 / sigma).sqrt());
        // Cancellation-free for strongly negative eigenvalues.
        let d = DVector::from_fn(n, |i, _| {
            let l = lambda[i];
            if l >= 0.0 {
                0.5 * (s[i] + l)
            } else {
                (2.0 / sigma) / (s[i] - l)
            }
        });
        let gamma = DMatrix::from_fn(n, n, |i, j| (d[i] + d[j]) / (s[i] + s[j]));
        Self {
            u,
            lambda,
            sigma,
            d,
            gamma,
        }
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    fn spectral(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let mut scaled = self.u.clone();
        for (mut col, &v) in scaled.column_iter_mut().zip(values.iter()) {
            col *= v;
        }
        symmetrize(&(scaled * self.u.transpose()))
    }

    /// `Prox(X) = U D Uᵀ`.
    pub fn prox(&self) -> DMatrix<f64> {
        self.spectral(&self.d)
    }

    /// `Prox(X)⁻¹ = U D⁻¹ Uᵀ`.
    pub fn prox_inverse(&self) -> DMatrix<f64> {
        self.spectral(&self.d.map(|v| 1.0 / v))
    }

    /// `log det Prox(X)`.
    pub fn prox_logdet(&self) -> f64 {
        self.d.iter().map(|v| v.ln()).sum()
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "prox parameter sigma must be positive, got {sigma}"
        )))
    }
}

/// `argmin_Z { −log det Z + (σ/2)‖Z − X‖² }`, returned with its spectral cache.
pub fn prox_logdet(x: &DMatrix<f64>, sigma: f64) -> Result<(DMatrix<f64>, EigCache)> {
    check_sigma(sigma)?;
    let eig = sym_eig(x)?;
    let cache = EigCache::new(eig.vectors, eig.values, sigma);
    Ok((cache.prox(), cache))
}

/// Directional derivative of the prox at the cached base point:
/// `U[Γ ⊙ (UᵀHU)]Uᵀ`.
pub fn prox_logdet_dderiv(cache: &EigCache, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cache.n();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::Dimension(format!(
            "direction is {}x{}, cache is for n = {n}",
            h.nrows(),
            h.ncols()
        )));
    }
    let inner = cache.u.transpose() * h * &cache.u;
    let weighted = inner.component_mul(&cache.gamma);
    Ok(symmetrize(&(&cache.u * weighted * cache.u.transpose())))
}

/// Moreau–Yosida envelope `ℓ(P) + (σ/2)‖P − X‖²` at `P = Prox(X)`.
pub fn moreau_logdet_value(x: &DMatrix<f64>, sigma: f64) -> Result<f64> {
    let (_, cache) = prox_logdet(x, sigma)?;
    let quad: f64 = cache
        .d
        .iter()
        .zip(cache.lambda.iter())
        .map(|(d, l)| (d - l) * (d - l))
        .sum();
    Ok(-cache.prox_logdet() + 0.5 * sigma * quad)
}

/// `Π₊(c) = max{c, 0}` componentwise.
pub fn project_nonneg(c: &DVector<f64>) -> DVector<f64> {
    c.map(|v| v.max(0.0))
}

/// Diagonal of one element of the Clarke Jacobian of `Π₊` at `c`:
/// `1` where `c_i > 0`, `0` otherwise (ties at zero resolve to `0`).
pub fn clarke_diag(c: &DVector<f64>) -> DVector<f64> {
    c.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
}
