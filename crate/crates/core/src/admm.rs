//! ADMM for the ℓ1-penalized model
//!
//! ```text
//! min −log det(Θ + J) + ⟨K, Θ⟩   s.t.  Θ = 𝒜*x,  w = x,  w ≥ 0,   K = S + λI
//! ```
//!
//! used on its own and as the warm start of the DCA.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{project_nonneg, prox_logdet, GramSolver, GramStrategy};
use crate::problem::{logdet_pd, ProblemData};
use crate::report::{AdmmRecord, AdmmSummary, Model, SolveReport, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdmmOptions {
    /// Stop once `max{η_p, η_d, η_g} < tol`.
    pub tol: f64,
    pub max_iter: usize,
    pub sigma0: f64,
    /// Dual step length, in `(0, (1+√5)/2)`.
    pub tau: f64,
    /// Every this many iterations σ is doubled (halved) when `η_p/η_d`
    /// exceeds 10 (drops below 0.1); residuals are also logged then.
    pub adapt_every: usize,
    /// `None` picks the strategy from the problem size.
    pub gram: Option<GramStrategy>,
}

impl Default for AdmmOptions {
    fn default() -> Self {
        Self {
            tol: 1e-5,
            max_iter: 20_000,
            sigma0: 1.0,
            tau: 1.618,
            adapt_every: 50,
            gram: None,
        }
    }
}

impl AdmmOptions {
    pub fn validate(&self) -> Result<()> {
        let golden = 0.5 * (1.0 + 5f64.sqrt());
        if !(self.tau > 0.0 && self.tau < golden) {
            return Err(Error::InvalidParameter(format!(
                "ADMM step length must lie in (0, {golden:.6}), got {}",
                self.tau
            )));
        }
        if !(self.sigma0 > 0.0 && self.tol > 0.0) {
            return Err(Error::InvalidParameter(
                "ADMM sigma0 and tolerance must be positive".into(),
            ));
        }
        if self.adapt_every == 0 {
            return Err(Error::InvalidParameter(
                "adapt_every must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: DVector<f64>,
    pub theta: DMatrix<f64>,
    pub w: DVector<f64>,
    pub y: DMatrix<f64>,
    pub zeta: DVector<f64>,
    pub sigma: f64,
    pub tau: f64,
}

impl AdmmState {
    /// All-zero primal and dual variables.
    pub fn zeros(n: usize, num_edges: usize, sigma: f64, tau: f64) -> Self {
        Self {
            x: DVector::zeros(num_edges),
            theta: DMatrix::zeros(n, n),
            w: DVector::zeros(num_edges),
            y: DMatrix::zeros(n, n),
            zeta: DVector::zeros(num_edges),
            sigma,
            tau,
        }
    }
}

/// One sweep of the four-block update with the current σ.
pub fn admm_step(state: &AdmmState, problem: &ProblemData, gram: &GramSolver) -> Result<AdmmState> {
    let k = problem.k_l1();
    step_with(state, problem, &k, gram)
}

fn step_with(
    state: &AdmmState,
    problem: &ProblemData,
    k: &DMatrix<f64>,
    gram: &GramSolver,
) -> Result<AdmmState> {
    let inc = problem.incidence();
    let j = problem.j();
    let sigma = state.sigma;
    let inv = 1.0 / sigma;

    let rhs = inc.apply_a(&(&state.theta + &state.y * inv))? + &state.w + &state.zeta * inv;
    let x = gram.solve(&rhs)?;

    let ax = inc.apply_astar(&x)?;
    let base = j + &ax - (&state.y + k) * inv;
    let (p, _) = prox_logdet(&base, sigma)?;
    let theta = p - j;

    let w = project_nonneg(&(&x - &state.zeta * inv));

    let step = state.tau * sigma;
    let y = &state.y + (&theta - &ax) * step;
    let zeta = &state.zeta + (&w - &x) * step;
    Ok(AdmmState {
        x,
        theta,
        w,
        y,
        zeta,
        sigma,
        tau: state.tau,
    })
}

/// Relative KKT residuals of an ADMM iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    pub eta_p: f64,
    pub eta_d: f64,
    pub eta_g: f64,
    pub pobj: f64,
    /// `None` stands for `−∞` (`Y + K` not positive definite).
    pub dobj: Option<f64>,
}

impl KktResiduals {
    pub fn max(&self) -> f64 {
        self.eta_p.max(self.eta_d).max(self.eta_g)
    }
}

pub fn kkt_residuals(state: &AdmmState, problem: &ProblemData) -> Result<KktResiduals> {
    let k = problem.k_l1();
    let (eta_p, eta_d) = feasibility(state, problem)?;
    let (eta_g, pobj, dobj) = gap(state, problem, &k)?;
    Ok(KktResiduals {
        eta_p,
        eta_d,
        eta_g,
        pobj,
        dobj,
    })
}

fn feasibility(state: &AdmmState, problem: &ProblemData) -> Result<(f64, f64)> {
    let inc = problem.incidence();
    let ax = inc.apply_astar(&state.x)?;
    let xn = state.x.norm();
    let coupling = (&state.theta - ax).norm().max((&state.w - &state.x).norm());
    let eta_p =
        (coupling / (1.0 + xn)).max(project_nonneg(&(-&state.w)).norm() / (1.0 + state.w.norm()));
    let ay = inc.apply_a(&state.y)?;
    let eta_d = (&ay + &state.zeta)
        .norm()
        .max(project_nonneg(&(-&state.zeta)).norm())
        / (1.0 + state.zeta.norm());
    Ok((eta_p, eta_d))
}

fn gap(
    state: &AdmmState,
    problem: &ProblemData,
    k: &DMatrix<f64>,
) -> Result<(f64, f64, Option<f64>)> {
    let n = problem.n() as f64;
    let inc = problem.incidence();
    let aw = inc.apply_astar(&state.w)?;
    let pobj = match logdet_pd(&(&aw + problem.j())) {
        Some(ld) => -ld + k.dot(&aw),
        None => f64::INFINITY,
    };
    let yk = &state.y + k;
    let dobj = logdet_pd(&yk).map(|ld| ld - problem.j().dot(&yk) + n);
    let eta_g = match dobj {
        Some(d) if pobj.is_finite() => (pobj - d).abs() / (1.0 + pobj.abs() + d.abs()),
        _ => 1.0,
    };
    Ok((eta_g, pobj, dobj))
}

/// Result of [`run_admm`]: the final iterate plus diagnostics.
#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub state: AdmmState,
    pub summary: AdmmSummary,
    pub history: Vec<AdmmRecord>,
}

/// Runs ADMM from the zero point until the KKT residual drops below
/// `opts.tol` or the iteration cap is hit.
pub fn run_admm(problem: &ProblemData, opts: &AdmmOptions) -> Result<AdmmOutcome> {
    opts.validate()?;
    let graph = &problem.prior.graph;
    if !graph.is_connected() {
        return Err(Error::Disconnected(
            "the connectivity prior does not span all nodes".into(),
        ));
    }
    let inc = problem.incidence();
    let gram = match opts.gram {
        Some(s) => GramSolver::new(inc, s)?,
        None => GramSolver::auto(inc)?,
    };
    let k = problem.k_l1();
    let mut state = AdmmState::zeros(problem.n(), problem.num_edges(), opts.sigma0, opts.tau);
    let mut history = Vec::new();
    let mut last = None;
    let mut iterations = 0;
    let mut termination = Termination::IterationCap;

    while iterations < opts.max_iter {
        state = step_with(&state, problem, &k, &gram)?;
        iterations += 1;
        let (eta_p, eta_d) = feasibility(&state, problem)?;
        let check = iterations % opts.adapt_every == 0;
        if eta_p.max(eta_d) < opts.tol || check {
            let (eta_g, pobj, dobj) = gap(&state, problem, &k)?;
            let res = KktResiduals {
                eta_p,
                eta_d,
                eta_g,
                pobj,
                dobj,
            };
            last = Some(res);
            if check {
                history.push(AdmmRecord {
                    iteration: iterations,
                    eta_p,
                    eta_d,
                    eta_g,
                    pobj,
                    sigma: state.sigma,
                });
            }
            if res.max() < opts.tol {
                termination = Termination::Converged;
                break;
            }
            if check && eta_d > 0.0 {
                let ratio = eta_p / eta_d;
                if ratio > 10.0 {
                    state.sigma *= 2.0;
                } else if ratio < 0.1 {
                    state.sigma *= 0.5;
                }
            }
        }
    }

    let res = match last {
        Some(r) if termination.is_converged() => r,
        _ => kkt_residuals(&state, problem)?,
    };
    let summary = AdmmSummary {
        iterations,
        eta_p: res.eta_p,
        eta_d: res.eta_d,
        eta_g: res.eta_g,
        pobj: res.pobj,
        dobj: res.dobj,
        sigma: state.sigma,
        termination,
    };
    Ok(AdmmOutcome {
        state,
        summary,
        history,
    })
}

/// Solves the ℓ1 model and packages the result.
pub fn solve_cgl_l1(problem: &ProblemData, opts: &AdmmOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let out = run_admm(problem, opts)?;
    let w = out.state.w;
    Ok(SolveReport {
        model: Model::CglL1,
        n: problem.n(),
        edges: problem.prior.edges().to_vec(),
        objective: problem.l1_objective(&w),
        w: w.iter().copied().collect(),
        iterations: out.summary.iterations,
        termination: out.summary.termination,
        wall_time_s: start.elapsed().as_secs_f64(),
        admm: Some(out.summary),
        admm_history: out.history,
        dca_history: Vec::new(),
        config: serde_json::json!({
            "lambda": problem.penalty.lambda,
            "admm": opts,
            "initial_point": "zeros",
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{erdos_renyi, sample_weights, ConnectivityPrior, EdgeGraph};
    use crate::penalty::PenaltyParams;
    use crate::synth::sample_covariance;

    fn two_node(lambda: f64) -> ProblemData {
        let s = DMatrix::from_row_slice(2, 2, &[0.5, -0.2, -0.2, 0.4]);
        ProblemData::new(
            s,
            ConnectivityPrior::full(2),
            PenaltyParams::new(lambda, 1.5).unwrap(),
        )
        .unwrap()
    }

    // −log(2w) + a·w is minimized at w = 1/a with a = 𝒜K.
    fn two_node_solution(problem: &ProblemData) -> AdmmState {
        let k = problem.k_l1();
        let a = k[(0, 0)] + k[(1, 1)] - 2.0 * k[(0, 1)];
        let w = DVector::from_vec(vec![1.0 / a]);
        let theta = problem.incidence().apply_astar(&w).unwrap();
        let inv = (&theta + problem.j()).try_inverse().unwrap();
        AdmmState {
            x: w.clone(),
            theta,
            w,
            y: inv - k,
            zeta: DVector::zeros(1),
            sigma: 1.0,
            tau: 1.618,
        }
    }

    #[test]
    fn kkt_point_is_fixed() {
        let problem = two_node(0.1);
        let star = two_node_solution(&problem);
        let gram = GramSolver::auto(problem.incidence()).unwrap();
        let next = admm_step(&star, &problem, &gram).unwrap();
        assert!((&next.x - &star.x).norm() < 1e-10);
        assert!((&next.theta - &star.theta).norm() < 1e-10);
        assert!((&next.w - &star.w).norm() < 1e-10);
        assert!((&next.y - &star.y).norm() < 1e-10);
        assert!((&next.zeta - &star.zeta).norm() < 1e-10);

        let res = kkt_residuals(&star, &problem).unwrap();
        assert!(res.max() < 1e-12, "{res:?}");
        assert!(res.eta_p >= 0.0 && res.eta_d >= 0.0 && res.eta_g >= 0.0);
    }

    #[test]
    fn x_update_solves_gram_system() {
        let problem = two_node(0.1);
        let mut st = AdmmState::zeros(2, 1, 1.0, 1.618);
        st.theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        st.w[0] = 0.7;
        st.zeta[0] = -0.2;
        let gram = GramSolver::auto(problem.incidence()).unwrap();
        let next = admm_step(&st, &problem, &gram).unwrap();
        let inc = problem.incidence();
        let rhs = inc.apply_a(&st.theta).unwrap() + &st.w + &st.zeta;
        let lhs = &next.x + inc.apply_a(&inc.apply_astar(&next.x).unwrap()).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
        assert!(next.w.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn dual_infeasible_sentinel() {
        let problem = two_node(0.1);
        let mut st = two_node_solution(&problem);
        st.y = -problem.k_l1() * 3.0;
        let res = kkt_residuals(&st, &problem).unwrap();
        assert!(res.dobj.is_none());
        assert_eq!(res.eta_g, 1.0);
    }

    #[test]
    fn two_node_converges_to_analytic_solution() {
        let problem = two_node(0.05);
        let star = two_node_solution(&problem);
        let opts = AdmmOptions {
            tol: 1e-10,
            ..Default::default()
        };
        let rep = solve_cgl_l1(&problem, &opts).unwrap();
        assert_eq!(rep.termination, Termination::Converged);
        assert!((rep.w[0] - star.w[0]).abs() < 1e-7);
    }

    fn er_problem(n: usize, lambda: f64, seed: u64) -> (ProblemData, EdgeGraph) {
        let mut seed = seed;
        let mut g = erdos_renyi(n, 0.3, seed).unwrap();
        while !g.is_connected() {
            seed += 1000;
            g = erdos_renyi(n, 0.3, seed).unwrap();
        }
        let g = sample_weights(&g, 0.1, 3.0, seed).unwrap();
        let l = g.laplacian().unwrap();
        let s = sample_covariance(&l, 5000 * n, seed).unwrap();
        let prior = ConnectivityPrior::truth(&g);
        (
            ProblemData::new(s, prior, PenaltyParams::new(lambda, 1.5).unwrap()).unwrap(),
            g,
        )
    }

    #[test]
    fn gap_shrinks_with_tolerance() {
        let (problem, _) = er_problem(10, 0.01, 3);
        let mut prev = f64::INFINITY;
        for tol in [1e-3, 1e-5, 1e-7] {
            let opts = AdmmOptions {
                tol,
                ..Default::default()
            };
            let out = run_admm(&problem, &opts).unwrap();
            assert_eq!(out.summary.termination, Termination::Converged);
            assert!(out.summary.max_residual() < tol);
            assert!(out.summary.eta_g <= prev);
            prev = out.summary.eta_g;
            assert!(out.state.w.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn trace_decreases_with_lambda() {
        let (base, _) = er_problem(10, 0.01, 5);
        let mut prev = f64::INFINITY;
        for lambda in [0.01, 0.1, 1.0] {
            let problem = base.with_penalty(PenaltyParams::new(lambda, 1.5).unwrap());
            let opts = AdmmOptions {
                tol: 1e-8,
                ..Default::default()
            };
            let rep = solve_cgl_l1(&problem, &opts).unwrap();
            let tr = rep.theta().unwrap().trace();
            assert!(tr < prev, "trace {tr} not below {prev}");
            prev = tr;
        }
    }

    #[test]
    fn strategies_agree() {
        let (problem, _) = er_problem(8, 0.05, 9);
        let mut sols = Vec::new();
        for s in [GramStrategy::Cholesky, GramStrategy::Smw, GramStrategy::Cg] {
            let opts = AdmmOptions {
                tol: 1e-8,
                gram: Some(s),
                ..Default::default()
            };
            sols.push(run_admm(&problem, &opts).unwrap().state.w);
        }
        assert!((&sols[0] - &sols[1]).norm() < 1e-6);
        assert!((&sols[0] - &sols[2]).norm() < 1e-6);
    }

    #[test]
    fn rejects_bad_options_and_disconnected_prior() {
        let problem = two_node(0.1);
        let opts = AdmmOptions {
            tau: 1.7,
            ..Default::default()
        };
        assert!(run_admm(&problem, &opts).is_err());

        let g = EdgeGraph::new(4, [(0, 1), (2, 3)]).unwrap();
        let p = ProblemData::new(
            DMatrix::identity(4, 4),
            ConnectivityPrior::truth(&g),
            PenaltyParams::new(0.1, 1.5).unwrap(),
        )
        .unwrap();
        assert!(matches!(
            run_admm(&p, &AdmmOptions::default()),
            Err(Error::Disconnected(_))
        ));
    }
}
