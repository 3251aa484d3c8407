//! Semismooth Newton method for the dual of one proximal DCA subproblem
//!
//! ```text
//! min −log det(𝒜*w + J) + ⟨K, 𝒜*w⟩ + σ/2‖w − w̃‖² + σ/2‖𝒜*w − Θ̃‖²,  w ≥ 0
//! ```
//!
//! together with primal recovery and the computable certificate that an
//! inexact dual solution yields an acceptable primal step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::IncidenceMatrix;
use crate::linalg::{
    clarke_diag, conjugate_gradient, opnorm_a_spectral, project_nonneg, prox_logdet,
    prox_logdet_dderiv, symmetrize, EigCache,
};
use crate::problem::logdet_pd;

/// Data `(σ, Θ̃ = 𝒜*w̃, w̃, K)` of one subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemContext<'a> {
    pub sigma: f64,
    pub theta_tilde: DMatrix<f64>,
    pub w_tilde: DVector<f64>,
    pub k: DMatrix<f64>,
    pub inc: &'a IncidenceMatrix,
    pub j: &'a DMatrix<f64>,
}

impl<'a> SubproblemContext<'a> {
    pub fn new(
        sigma: f64,
        w_tilde: DVector<f64>,
        k: DMatrix<f64>,
        inc: &'a IncidenceMatrix,
        j: &'a DMatrix<f64>,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "subproblem sigma must be positive, got {sigma}"
            )));
        }
        let n = inc.n();
        if k.nrows() != n || k.ncols() != n || j.nrows() != n || j.ncols() != n {
            return Err(Error::Dimension(format!(
                "subproblem matrices must be {n}x{n}"
            )));
        }
        let theta_tilde = inc.apply_astar(&w_tilde)?;
        Ok(Self {
            sigma,
            theta_tilde,
            w_tilde,
            k,
            inc,
            j,
        })
    }

    pub fn n(&self) -> usize {
        self.inc.n()
    }

    /// Primal subproblem objective at `w`; `+∞` if infeasible.
    pub fn primal_objective(&self, w: &DVector<f64>) -> f64 {
        if w.iter().any(|&v| v < 0.0) {
            return f64::INFINITY;
        }
        let Ok(theta) = self.inc.apply_astar(w) else {
            return f64::INFINITY;
        };
        let Some(ld) = logdet_pd(&(&theta + self.j)) else {
            return f64::INFINITY;
        };
        -ld + self.k.dot(&theta)
            + 0.5 * self.sigma * (w - &self.w_tilde).norm_squared()
            + 0.5 * self.sigma * (&theta - &self.theta_tilde).norm_squared()
    }

    fn prox_base(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        &self.theta_tilde + self.j - (&self.k + y) / self.sigma
    }

    fn w_base(&self, y: &DMatrix<f64>) -> Result<DVector<f64>> {
        Ok(&self.w_tilde + self.inc.apply_a(y)? / self.sigma)
    }
}

/// Value, gradient and Jacobian data of `Φ` at one dual point.
#[derive(Debug, Clone)]
pub struct DualPoint {
    pub y: DMatrix<f64>,
    pub value: f64,
    pub grad: DMatrix<f64>,
    /// `Prox(Θ̃ + J − (K+Y)/σ)`.
    pub prox: DMatrix<f64>,
    pub cache: EigCache,
    /// `Π₊(w̃ + 𝒜Y/σ)`.
    pub w_hat: DVector<f64>,
    pub mask: DVector<f64>,
}

impl DualPoint {
    pub fn evaluate(y: DMatrix<f64>, ctx: &SubproblemContext) -> Result<Self> {
        let (prox, cache) = prox_logdet(&ctx.prox_base(&y), ctx.sigma)?;
        let c = ctx.w_base(&y)?;
        let w_hat = project_nonneg(&c);
        let mask = clarke_diag(&c);
        let theta_hat = &prox - ctx.j;
        let aw = ctx.inc.apply_astar(&w_hat)?;
        let grad = &theta_hat - &aw;
        // the Lagrangian at its minimizers
        let value = -cache.prox_logdet()
            + ctx.k.dot(&theta_hat)
            + 0.5 * ctx.sigma * (&theta_hat - &ctx.theta_tilde).norm_squared()
            + 0.5 * ctx.sigma * (&w_hat - &ctx.w_tilde).norm_squared()
            + grad.dot(&y);
        Ok(Self {
            y,
            value,
            grad,
            prox,
            cache,
            w_hat,
            mask,
        })
    }
}

pub fn phi_value(y: &DMatrix<f64>, ctx: &SubproblemContext) -> Result<f64> {
    Ok(DualPoint::evaluate(y.clone(), ctx)?.value)
}

/// `∇Φ(Y) = Prox(Θ̃ + J − (K+Y)/σ) − 𝒜*Π₊(w̃ + 𝒜Y/σ) − J`.
pub fn phi_grad(y: &DMatrix<f64>, ctx: &SubproblemContext) -> Result<DMatrix<f64>> {
    Ok(DualPoint::evaluate(y.clone(), ctx)?.grad)
}

/// `V[H] = −(1/σ)Prox′[H] − (1/σ)𝒜*(mask ⊙ 𝒜H)`.
pub fn jacobian_apply(
    cache: &EigCache,
    mask: &DVector<f64>,
    h: &DMatrix<f64>,
    ctx: &SubproblemContext,
) -> Result<DMatrix<f64>> {
    let dprox = prox_logdet_dderiv(cache, h)?;
    let ah = ctx.inc.apply_a(h)?.component_mul(mask);
    Ok(-(dprox + ctx.inc.apply_astar(&ah)?) / ctx.sigma)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsnParams {
    pub eta_bar: f64,
    pub tau: f64,
    /// Armijo parameter.
    pub mu: f64,
    /// Backtracking factor.
    pub rho: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub max_backtracks: usize,
    pub cg_max_iter: usize,
    pub ridge: f64,
}

impl Default for SsnParams {
    fn default() -> Self {
        Self {
            eta_bar: 0.1,
            tau: 0.5,
            mu: 0.25,
            rho: 0.5,
            max_iter: 200,
            grad_tol: 1e-8,
            max_backtracks: 50,
            cg_max_iter: 500,
            ridge: 1e-12,
        }
    }
}

impl SsnParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_bar > 0.0
            && self.eta_bar < 1.0
            && self.tau > 0.0
            && self.tau <= 1.0
            && self.mu > 0.0
            && self.mu < 0.5
            && self.rho > 0.0
            && self.rho < 1.0
            && self.grad_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "invalid SSN parameters {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SsnStatus {
    Converged,
    IterationCap,
    LineSearchFailed,
}

#[derive(Debug, Clone)]
pub struct SsnOutcome {
    pub point: DualPoint,
    pub iterations: usize,
    pub status: SsnStatus,
}

impl SsnOutcome {
    pub fn y(&self) -> &DMatrix<f64> {
        &self.point.y
    }

    /// `E = −∇Φ(Y)`.
    pub fn error_matrix(&self) -> DMatrix<f64> {
        -&self.point.grad
    }

    pub fn grad_norm(&self) -> f64 {
        self.point.grad.norm()
    }
}

pub fn ssn_solve(
    ctx: &SubproblemContext,
    y0: DMatrix<f64>,
    params: &SsnParams,
) -> Result<SsnOutcome> {
    let point = DualPoint::evaluate(y0, ctx)?;
    ssn_continue(ctx, point, params)
}

/// Runs Newton steps from an already evaluated point.
pub fn ssn_continue(
    ctx: &SubproblemContext,
    start: DualPoint,
    params: &SsnParams,
) -> Result<SsnOutcome> {
    params.validate()?;
    let mut point = start;
    let mut iterations = 0;
    loop {
        let gnorm = point.grad.norm();
        if gnorm <= params.grad_tol {
            return Ok(SsnOutcome {
                point,
                iterations,
                status: SsnStatus::Converged,
            });
        }
        if iterations >= params.max_iter {
            return Ok(SsnOutcome {
                point,
                iterations,
                status: SsnStatus::IterationCap,
            });
        }

        let cg_tol = params.eta_bar.min(gnorm.powf(1.0 + params.tau));
        let neg_v = |h: &DMatrix<f64>| {
            let vh = jacobian_apply(&point.cache, &point.mask, h, ctx)
                .expect("direction has the context dimension");
            h * params.ridge - vh
        };
        let cg = conjugate_gradient(neg_v, &point.grad, cg_tol, params.cg_max_iter);
        let mut dir = symmetrize(&cg.x);
        let mut slope = point.grad.dot(&dir);
        if !(slope > 0.0) {
            dir = point.grad.clone();
            slope = gnorm * gnorm;
        }

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=params.max_backtracks {
            let trial = DualPoint::evaluate(&point.y + &dir * alpha, ctx)?;
            let target = params.mu * alpha * slope;
            let armijo = trial.value >= point.value + target;
            // below roundoff in Φ the Armijo test is meaningless
            let flat = target < 1e-13 * (1.0 + point.value.abs()) && trial.grad.norm() < gnorm;
            if armijo || flat {
                accepted = Some(trial);
                break;
            }
            alpha *= params.rho;
        }
        match accepted {
            Some(next) => {
                point = next;
                iterations += 1;
            }
            None => {
                return Ok(SsnOutcome {
                    point,
                    iterations,
                    status: SsnStatus::LineSearchFailed,
                })
            }
        }
    }
}

/// `Θ̄ = Prox(Θ̃ + J − (K+Y)/σ) − J`, `w̄ = Π₊(w̃ + 𝒜Y/σ)`.
pub fn recover_primal(
    y: &DMatrix<f64>,
    ctx: &SubproblemContext,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let (p, _) = prox_logdet(&ctx.prox_base(y), ctx.sigma)?;
    let w = project_nonneg(&ctx.w_base(y)?);
    Ok((p - ctx.j, w))
}

/// Error vector of an inexact subproblem solution and the quantities of
/// its a-priori bound.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub delta: DVector<f64>,
    /// `‖(𝒜*w + J − E)⁻¹E‖₂`.
    pub r: f64,
    /// `‖𝒜‖₂‖E‖₂[σ + ‖(𝒜*w + J − E)⁻¹‖₂²/(1 − r)]`.
    pub bound: f64,
}

impl Certificate {
    pub fn delta_norm(&self) -> f64 {
        self.delta.norm()
    }
}

/// `δ = −𝒜[σE + (𝒜*w − E + J)⁻¹ − (𝒜*w + J)⁻¹]` for the dual residual
/// `E = −∇Φ(Y)` and `w = Π₊(w̃ + 𝒜Y/σ)`.
///
/// With this `δ`, `w` satisfies the optimality conditions of the subproblem
/// with linear term `⟨δ, w⟩` added. Fails with
/// [`Error::CertificateFailure`] when `r ≥ 1`.
pub fn subproblem_error_vector(
    w_next: &DVector<f64>,
    e: &DMatrix<f64>,
    ctx: &SubproblemContext,
) -> Result<Certificate> {
    let aw = ctx.inc.apply_astar(w_next)?;
    let shifted = symmetrize(&(&aw + ctx.j));
    let base = symmetrize(&(&shifted - e));
    let base_inv = spd_inverse(&base).ok_or(Error::CertificateFailure { r: f64::INFINITY })?;
    certificate_from_inverse(&base_inv, e, ctx)
}

/// Same as [`subproblem_error_vector`] but reuses the spectral data of the
/// final SSN point, where `Prox(·) = 𝒜*w̄ + J − E` holds by construction.
pub fn certificate_at(point: &DualPoint, ctx: &SubproblemContext) -> Result<Certificate> {
    let e = -&point.grad;
    let inv = point.cache.prox_inverse();
    certificate_from_inverse(&inv, &e, ctx)
}

fn certificate_from_inverse(
    base_inv: &DMatrix<f64>,
    e: &DMatrix<f64>,
    ctx: &SubproblemContext,
) -> Result<Certificate> {
    let n = ctx.n();
    if e.norm() == 0.0 {
        return Ok(Certificate {
            delta: DVector::zeros(ctx.inc.num_edges()),
            r: 0.0,
            bound: 0.0,
        });
    }
    let m = base_inv * e;
    let r = spectral_norm(&m);
    if !(r < 1.0) {
        return Err(Error::CertificateFailure { r });
    }
    // (P + E)⁻¹ = (I + P⁻¹E)⁻¹P⁻¹, so P⁻¹ − (P + E)⁻¹ = P⁻¹E(P + E)⁻¹ with
    // no cancellation for small E
    let lu = (DMatrix::identity(n, n) + &m).lu();
    let shifted_inv = lu.solve(base_inv).ok_or(Error::CertificateFailure { r })?;
    let diff = symmetrize(&(&m * shifted_inv));
    let delta = -ctx.inc.apply_a(&(e * ctx.sigma + diff))?;

    let e2 = spectral_norm(e);
    let inv2 = spectral_norm(base_inv);
    let bound = opnorm_a_spectral(ctx.inc) * e2 * (ctx.sigma + inv2 * inv2 / (1.0 - r));
    Ok(Certificate { delta, r, bound })
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let g = m.transpose() * m;
    symmetrize(&g)
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |a, &v| a.max(v))
        .sqrt()
}

fn spd_inverse(x: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    x.clone().cholesky().map(|c| symmetrize(&c.inverse()))
}

/// Right-hand side of the stopping condition,
/// `(σ/4)‖Δw‖ + σ‖𝒜*Δw‖²/(2‖Δw‖)`; zero when `Δw = 0`.
pub fn stop_condition_rhs(
    w_next: &DVector<f64>,
    w_prev: &DVector<f64>,
    sigma: f64,
    inc: &IncidenceMatrix,
) -> Result<f64> {
    let dw = w_next - w_prev;
    let nd = dw.norm();
    if nd == 0.0 {
        return Ok(0.0);
    }
    let adw = inc.apply_astar(&dw)?.norm_squared();
    Ok(0.25 * sigma * nd + sigma * adw / (2.0 * nd))
}

/// Inclusive check of `‖δ‖` against [`stop_condition_rhs`]. A zero step is
/// accepted only if `‖δ‖ ≤ 1e-12`.
pub fn check_stop_condition(
    delta: &DVector<f64>,
    w_next: &DVector<f64>,
    w_prev: &DVector<f64>,
    sigma: f64,
    inc: &IncidenceMatrix,
) -> Result<bool> {
    let rhs = stop_condition_rhs(w_next, w_prev, sigma, inc)?;
    if w_next == w_prev {
        return Ok(delta.norm() <= 1e-12);
    }
    Ok(delta.norm() <= rhs)
}
