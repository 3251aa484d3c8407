use nalgebra::{DMatrix, DVector};

/// Vector space operations needed by [`conjugate_gradient`].
pub trait CgSpace: Clone {
    fn inner(&self, other: &Self) -> f64;
    /// `self += a·x`
    fn add_scaled(&mut self, a: f64, x: &Self);
    fn zeros_like(&self) -> Self;
}

impl CgSpace for DVector<f64> {
    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        self.axpy(a, x, 1.0);
    }
    fn zeros_like(&self) -> Self {
        DVector::zeros(self.len())
    }
}

impl CgSpace for DMatrix<f64> {
    fn inner(&self, other: &Self) -> f64 {
        self.dot(other)
    }
    fn add_scaled(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x.iter()) {
            *s += a * v;
        }
    }
    fn zeros_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome<T> {
    pub x: T,
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
}

/// Conjugate gradients for a symmetric positive (semi)definite operator,
/// started from zero. Stops once `‖b − Ax‖ ≤ abs_tol`.
pub fn conjugate_gradient<T: CgSpace>(
    mut apply: impl FnMut(&T) -> T,
    b: &T,
    abs_tol: f64,
    max_iter: usize,
) -> CgOutcome<T> {
    let mut x = b.zeros_like();
    let mut r = b.clone();
    let mut rr = r.inner(&r);
    if rr.sqrt() <= abs_tol {
        return CgOutcome {
            x,
            iterations: 0,
            residual_norm: rr.sqrt(),
            converged: true,
        };
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        let ap = apply(&p);
        let pap = p.inner(&ap);
        if !(pap > 0.0) {
            return CgOutcome {
                x,
                iterations: it - 1,
                residual_norm: rr.sqrt(),
                converged: false,
            };
        }
        let alpha = rr / pap;
        x.add_scaled(alpha, &p);
        r.add_scaled(-alpha, &ap);
        let rr_new = r.inner(&r);
        if rr_new.sqrt() <= abs_tol {
            return CgOutcome {
                x,
                iterations: it,
                residual_norm: rr_new.sqrt(),
                converged: true,
            };
        }
        let beta = rr_new / rr;
        rr = rr_new;
        let mut next = r.clone();
        next.add_scaled(beta, &p);
        p = next;
    }
    CgOutcome {
        x,
        iterations: max_iter,
        residual_norm: rr.sqrt(),
        converged: false,
    }
}
