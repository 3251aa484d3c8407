//! Inexact proximal DCA for the MCP-penalized model.
//!
//! Each outer step linearizes the concave part of the penalty at `wᵏ` and
//! solves the resulting convex problem with proximal terms of weight `σ_k`
//! through its dual ([`crate::ssn`]). A step is accepted only when its
//! error vector passes the stopping condition, which guarantees the
//! descent `f(wᵏ⁺¹) ≤ f(wᵏ) − (σ_k/4)‖wᵏ⁺¹ − wᵏ‖²`.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::admm::{run_admm, AdmmOptions};
use crate::error::{Error, Result};
use crate::linalg::symmetrize;
use crate::penalty::grad_h_matrix;
use crate::problem::ProblemData;
use crate::report::{AdmmRecord, AdmmSummary, DcaIteration, Model, SolveReport, Termination};
use crate::ssn::{
    certificate_at, ssn_continue, stop_condition_rhs, DualPoint, SsnParams, SubproblemContext,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DcaParams {
    pub sigma0: f64,
    /// `σ_{k+1} = max(ρ σ_k, σ_min)`.
    pub rho: f64,
    pub sigma_min: f64,
    /// Relative change of `w` or of `f` that ends the run.
    pub eps: f64,
    pub max_outer: usize,
    /// Tolerance tightenings allowed per subproblem.
    pub max_retries: usize,
    /// First SSN tolerance of a subproblem is this times `1 + ‖Gᵏ‖`.
    pub initial_tol_factor: f64,
    /// Relative slack of the runtime descent check.
    pub descent_slack: f64,
    pub ssn: SsnParams,
    /// Warm-start settings; the tolerance is replaced by `max(eps, 1e-5)`.
    pub admm: AdmmOptions,
}

impl Default for DcaParams {
    fn default() -> Self {
        Self {
            sigma0: 1.0,
            rho: 0.8,
            sigma_min: 1e-4,
            eps: 1e-6,
            max_outer: 500,
            max_retries: 20,
            initial_tol_factor: 1e-4,
            descent_slack: 1e-9,
            ssn: SsnParams::default(),
            admm: AdmmOptions::default(),
        }
    }
}

impl DcaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma_min > 0.0) {
            return Err(Error::InvalidParameter(
                "sigma0 and sigma_min must be positive".into(),
            ));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in (0, 1], got {}",
                self.rho
            )));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        self.ssn.validate()
    }

    fn warm_start_options(&self) -> AdmmOptions {
        AdmmOptions {
            tol: self.eps.max(1e-5),
            ..self.admm
        }
    }
}

/// `Gᵏ = S + λI − ∇h(𝒜*wᵏ)`.
pub fn build_gk(w: &DVector<f64>, problem: &ProblemData) -> Result<DMatrix<f64>> {
    let theta = problem.incidence().apply_astar(w)?;
    Ok(symmetrize(
        &(problem.k_l1() - grad_h_matrix(&theta, &problem.penalty)),
    ))
}

/// `f_next ≤ f_prev − (σ/4)·step² + slack·max(1, |f_prev|)` with the default
/// slack `1e-9`.
pub fn descent_check(f_prev: f64, f_next: f64, sigma: f64, step_norm: f64) -> bool {
    descent_excess(f_prev, f_next, sigma, step_norm, 1e-9) <= 0.0
}

fn descent_excess(f_prev: f64, f_next: f64, sigma: f64, step_norm: f64, slack: f64) -> f64 {
    f_next - (f_prev - 0.25 * sigma * step_norm * step_norm + slack * f_prev.abs().max(1.0))
}

/// ADMM warm start followed by the DCA loop.
pub fn dca_solve(problem: &ProblemData, params: &DcaParams) -> Result<SolveReport> {
    params.validate()?;
    let start = Instant::now();
    let admm_opts = params.warm_start_options();
    let out = run_admm(problem, &admm_opts)?;
    let mut report = dca_from(problem, params, out.state.w, Some(out.summary), out.history)?;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// DCA loop from a given non-negative starting point.
pub fn dca_solve_from(
    problem: &ProblemData,
    params: &DcaParams,
    w0: DVector<f64>,
) -> Result<SolveReport> {
    params.validate()?;
    if w0.len() != problem.num_edges() || w0.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter(
            "starting point must be a non-negative vector over the prior edges".into(),
        ));
    }
    if !problem.prior.graph.is_connected() {
        return Err(Error::Disconnected(
            "the connectivity prior does not span all nodes".into(),
        ));
    }
    let start = Instant::now();
    let mut report = dca_from(problem, params, w0, None, Vec::new())?;
    report.wall_time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

fn dca_from(
    problem: &ProblemData,
    params: &DcaParams,
    w0: DVector<f64>,
    admm: Option<AdmmSummary>,
    admm_history: Vec<AdmmRecord>,
) -> Result<SolveReport> {
    let n = problem.n();
    let inc = problem.incidence();
    let mut w = w0;
    let mut f = problem.objective(&w);
    if !f.is_finite() {
        return Err(Error::InvalidParameter(
            "objective is infinite at the starting point".into(),
        ));
    }
    let mut y = DMatrix::zeros(n, n);
    let mut sigma = params.sigma0;
    let mut history = Vec::new();
    let mut termination = Termination::IterationCap;

    for k in 0..params.max_outer {
        let gk = build_gk(&w, problem)?;
        let mut tol = params.initial_tol_factor * (1.0 + gk.norm());
        let ctx = SubproblemContext::new(sigma, w.clone(), gk, inc, problem.j())?;
        let mut point = DualPoint::evaluate(y.clone(), &ctx)?;
        let mut ssn_iterations = 0;
        let mut retries = 0;

        let accepted = loop {
            let ssn = SsnParams {
                grad_tol: tol,
                ..params.ssn
            };
            let out = ssn_continue(&ctx, point, &ssn)?;
            ssn_iterations += out.iterations;
            let gnorm = out.grad_norm();
            point = out.point;

            if let Some(step) = try_accept(&point, &w, &ctx, problem)? {
                break Some(step);
            }
            if retries == params.max_retries {
                break None;
            }
            retries += 1;
            tol = 0.5 * tol.min(gnorm);
        };

        let Some(step) = accepted else {
            termination = Termination::CertificateUnattained;
            break;
        };
        y = point.y.clone();
        let w_next = point.w_hat.clone();
        let step_norm = (&w_next - &w).norm();
        let excess = descent_excess(f, step.f_next, sigma, step_norm, params.descent_slack);
        if excess > 0.0 {
            return Err(Error::DescentViolated {
                iteration: k + 1,
                excess,
            });
        }
        history.push(DcaIteration {
            iteration: k + 1,
            objective: step.f_next,
            sigma,
            step_norm,
            ssn_iterations,
            retries,
            dual_residual: point.grad.norm(),
            r: step.r,
            bound: step.bound,
            delta_norm: step.delta_norm,
            stop_rhs: step.rhs,
            descent_ok: true,
        });

        let w_change = step_norm / (1.0 + w.norm());
        let f_change = (step.f_next - f).abs() / (1.0 + f.abs());
        w = w_next;
        f = step.f_next;
        if w_change < params.eps || f_change < params.eps {
            termination = Termination::Converged;
            break;
        }
        sigma = (params.rho * sigma).max(params.sigma_min);
    }

    Ok(SolveReport {
        model: Model::CglMcp,
        n,
        edges: problem.prior.edges().to_vec(),
        w: w.iter().copied().collect(),
        objective: f,
        iterations: history.len(),
        termination,
        wall_time_s: 0.0,
        admm,
        admm_history,
        dca_history: history,
        config: serde_json::json!({
            "lambda": problem.penalty.lambda,
            "gamma": problem.penalty.gamma,
            "dca": params,
            "warm_start_tol": params.warm_start_options().tol,
        }),
    })
}

struct AcceptedStep {
    f_next: f64,
    r: f64,
    bound: f64,
    delta_norm: f64,
    rhs: f64,
}

fn try_accept(
    point: &DualPoint,
    w_prev: &DVector<f64>,
    ctx: &SubproblemContext,
    problem: &ProblemData,
) -> Result<Option<AcceptedStep>> {
    let cert = match certificate_at(point, ctx) {
        Ok(c) => c,
        Err(Error::CertificateFailure { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let w_next = &point.w_hat;
    let rhs = stop_condition_rhs(w_next, w_prev, ctx.sigma, ctx.inc)?;
    let delta_norm = cert.delta_norm();
    let ok = if w_next == w_prev {
        delta_norm <= 1e-12
    } else {
        delta_norm <= rhs
    };
    if !ok {
        return Ok(None);
    }
    let f_next = problem.objective(w_next);
    if !f_next.is_finite() {
        return Ok(None);
    }
    Ok(Some(AcceptedStep {
        f_next,
        r: cert.r,
        bound: cert.bound,
        delta_norm,
        rhs,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, sample_weights, ConnectivityPrior, EdgeGraph};
    use crate::metrics::{edge_set, f1_score};
    use crate::penalty::PenaltyParams;
    use crate::synth::sample_covariance;

    #[test]
    fn gk_special_cases() {
        let g = EdgeGraph::new(3, [(0, 1), (1, 2)]).unwrap();
        let s = DMatrix::from_row_slice(3, 3, &[1.0, -0.5, 0.0, -0.5, 1.0, -0.5, 0.0, -0.5, 1.0]);
        let p = ProblemData::new(
            s.clone(),
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.3, 1.5).unwrap(),
        )
        .unwrap();
        let zero = build_gk(&DVector::zeros(2), &p).unwrap();
        assert_eq!(zero, p.k_l1());

        let w = DVector::from_vec(vec![0.1, 5.0]);
        let gk = build_gk(&w, &p).unwrap();
        let diff = &gk - p.k_l1();
        assert!(diff.iter().all(|v| v.abs() <= 0.3 + 1e-15));
        assert!((diff[(1, 2)] - 0.3).abs() < 1e-15);

        let free = ProblemData::new(
            s.clone(),
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.0, 1e12).unwrap(),
        )
        .unwrap();
        assert_eq!(build_gk(&w, &free).unwrap(), s);
    }

    #[test]
    fn descent_check_arithmetic() {
        assert!(descent_check(1.0, 1.0, 1.0, 0.0));
        assert!(!descent_check(1.0, 1.0, 1.0, 0.1));
        assert!(descent_check(1.0, 1.0 - 0.0025, 1.0, 0.1));
        assert!(!descent_check(-5.0, -4.0, 0.5, 0.0));
    }

    fn er_instance(n: usize, seed: u64) -> (EdgeGraph, DMatrix<f64>) {
        let mut s = seed;
        let mut g = erdos_renyi(n, 0.3, s).unwrap();
        while !g.is_connected() {
            s += 1000;
            g = erdos_renyi(n, 0.3, s).unwrap();
        }
        let g = sample_weights(&g, 0.1, 3.0, s).unwrap();
        let l = g.laplacian().unwrap();
        let cov = sample_covariance(&l, 5000 * n, s).unwrap();
        (g, cov)
    }

    #[test]
    fn small_er_recovers_graph_with_monotone_descent() {
        let (g, s) = er_instance(20, 1);
        let p = ProblemData::new(
            s,
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.05, 1.5).unwrap(),
        )
        .unwrap();
        let rep = dca_solve(&p, &DcaParams::default()).unwrap();
        assert_eq!(rep.termination, Termination::Converged);
        let mut prev = f64::INFINITY;
        for it in &rep.dca_history {
            assert!(it.objective <= prev + 1e-9 * prev.abs().max(1.0));
            assert!(it.r < 1.0 && it.delta_norm <= it.bound && it.delta_norm <= it.stop_rhs);
            prev = it.objective;
        }
        let est = edge_set(&rep.weights(), &rep.edges, 1e-4);
        assert_eq!(f1_score(&est, g.edges()), 1.0);
    }

    #[test]
    fn zero_penalty_is_stationary_after_warm_start() {
        let (g, s) = er_instance(10, 2);
        let p = ProblemData::new(
            s,
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.0, 1.5).unwrap(),
        )
        .unwrap();
        let rep = dca_solve(&p, &DcaParams::default()).unwrap();
        assert_eq!(rep.termination, Termination::Converged);
        assert!(rep.iterations <= 5, "{} iterations", rep.iterations);
    }

    #[test]
    fn deterministic() {
        let (g, s) = er_instance(10, 3);
        let p = ProblemData::new(
            s,
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.02, 1.5).unwrap(),
        )
        .unwrap();
        let a = dca_solve(&p, &DcaParams::default()).unwrap();
        let b = dca_solve(&p, &DcaParams::default()).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.w, b.w);
    }

    #[test]
    fn rejects_disconnected_prior() {
        let g = EdgeGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        let p = ProblemData::new(
            DMatrix::identity(4, 4),
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.1, 1.5).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            dca_solve(&p, &DcaParams::default()),
            Err(Error::Disconnected(_))
        ));
        assert!(dca_solve_from(&p, &DcaParams::default(), DVector::from_element(2, 1.0)).is_err());
    }
}
