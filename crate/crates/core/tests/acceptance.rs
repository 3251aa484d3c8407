//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use laplace_mcp::admm::{solve_cgl_l1, AdmmOptions};
use laplace_mcp::dca::{dca_solve, DcaParams};
use laplace_mcp::experiment::{
    average_records, log_grid, run_sweep, Ensemble, InstanceSpec, Scenario, SweepConfig,
    SweepRecord, SyntheticInstance,
};
use laplace_mcp::linalg::{build_aat_matrix, prox_logdet, prox_logdet_dderiv, symmetrize};
use laplace_mcp::penalty::l1_off;
use laplace_mcp::report::DcaIteration;
use laplace_mcp::ssn::{jacobian_apply, DualPoint, SubproblemContext};
use laplace_mcp::{ConnectivityPrior, EdgeGraph, IncidenceMatrix, PenaltyParams, ProblemData};

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn random_graph(rng: &mut ChaCha8Rng, n_max: usize) -> EdgeGraph {
    let n = rng.random_range(2..=n_max);
    loop {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|_| rng.random_bool(0.5))
            .collect();
        if !edges.is_empty() {
            return EdgeGraph::new(n, edges).unwrap();
        }
    }
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| scale * (2.0 * rng.random::<f64>() - 1.0));
    symmetrize(&m)
}

fn operator_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let g = random_graph(&mut rng, 8);
        let inc = g.incidence();
        let m = g.num_edges();
        let abs_b = inc.to_dense().abs();
        let expected = DMatrix::identity(m, m) * 2.0 + abs_b.transpose() * &abs_b;
        let csr = build_aat_matrix(&inc).to_dense();
        let mut operator = DMatrix::zeros(m, m);
        for k in 0..m {
            let mut e = DVector::zeros(m);
            e[k] = 1.0;
            let col = inc.apply_a(&inc.apply_astar(&e).unwrap()).unwrap();
            operator.set_column(k, &col);
        }
        worst = worst
            .max((&csr - &expected).amax())
            .max((&operator - &expected).amax());
    }
    Verdict::new(
        worst <= 1e-12,
        format!("max deviation {worst:.2e} over 50 graphs"),
    )
}

fn prox_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst_kkt = 0.0f64;
    let mut bad_fd = 0;
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let x = random_sym(&mut rng, n, 3.0);
        let sigma = 10f64.powf(rng.random_range(-1.0..1.0));
        let (p, cache) = prox_logdet(&x, sigma).unwrap();
        let p_inv = p.clone().cholesky().unwrap().inverse();
        let kkt = -p_inv + (&p - &x) * sigma;
        worst_kkt = worst_kkt.max(kkt.amax());

        let h = random_sym(&mut rng, n, 1.0);
        let d = prox_logdet_dderiv(&cache, &h).unwrap();
        let fd_err = |t: f64| {
            let (pt, _) = prox_logdet(&(&x + &h * t), sigma).unwrap();
            ((pt - &p) / t - &d).norm()
        };
        let (e1, e2) = (fd_err(1e-3), fd_err(1e-4));
        // first-order accuracy: a tenfold smaller step cuts the error about tenfold
        if !(e2 <= 0.2 * e1 || e2 <= 1e-8) {
            bad_fd += 1;
        }
    }
    Verdict::new(
        worst_kkt <= 1e-8 && bad_fd == 0,
        format!("max KKT residual {worst_kkt:.2e}, {bad_fd} derivative mismatches"),
    )
}

fn dual_calculus() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 10;
    let inc: IncidenceMatrix = EdgeGraph::complete(n).incidence();
    let j = DMatrix::from_element(n, n, 1.0 / n as f64);
    let (mut worst_fd, mut worst_sym, mut worst_nsd) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    for _ in 0..20 {
        let sigma = 10f64.powf(rng.random_range(-1.0..1.0));
        let w_tilde = DVector::from_fn(inc.num_edges(), |_, _| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.0..1.0)
            }
        });
        let k = random_sym(&mut rng, n, 1.0);
        let ctx = SubproblemContext::new(sigma, w_tilde, k, &inc, &j).unwrap();
        let y = random_sym(&mut rng, n, 0.5);
        let point = DualPoint::evaluate(y.clone(), &ctx).unwrap();

        let h = random_sym(&mut rng, n, 1.0);
        let t = 1e-6;
        let plus = DualPoint::evaluate(&y + &h * t, &ctx).unwrap().value;
        let minus = DualPoint::evaluate(&y - &h * t, &ctx).unwrap().value;
        let fd = (plus - minus) / (2.0 * t);
        let analytic = point.grad.dot(&h);
        worst_fd = worst_fd.max((fd - analytic).abs() / (1.0 + analytic.abs()));

        let h2 = random_sym(&mut rng, n, 1.0);
        let vh = jacobian_apply(&point.cache, &point.mask, &h, &ctx).unwrap();
        let vh2 = jacobian_apply(&point.cache, &point.mask, &h2, &ctx).unwrap();
        let scale = vh.norm() * h2.norm() + vh2.norm() * h.norm();
        worst_sym = worst_sym.max((vh.dot(&h2) - h.dot(&vh2)).abs() / scale);
        worst_nsd = worst_nsd.max(vh.dot(&h) / h.norm_squared());
    }
    Verdict::new(
        worst_fd <= 1e-5 && worst_sym <= 1e-12 && worst_nsd <= 1e-12,
        format!(
            "gradient error {worst_fd:.2e}, asymmetry {worst_sym:.2e}, max Rayleigh quotient {worst_nsd:.2e}"
        ),
    )
}

fn admm_kkt() -> Verdict {
    let spec = InstanceSpec::new(Ensemble::ErdosRenyi { p: 0.2 }, 20, Scenario::Full);
    let inst = SyntheticInstance::generate(&spec, 1).unwrap();
    let problem = inst
        .problem(PenaltyParams::new(0.01, 1.5).unwrap())
        .unwrap();
    let opts = AdmmOptions {
        tol: 1e-5,
        max_iter: 20_000,
        ..AdmmOptions::default()
    };
    let report = solve_cgl_l1(&problem, &opts).unwrap();
    let summary = report.admm.expect("ADMM summary");
    let eta = summary.max_residual();
    Verdict::new(
        eta < 1e-5 && summary.iterations <= 20_000,
        format!("max eta {eta:.2e} after {} iterations", summary.iterations),
    )
}

fn descent(histories: &[Vec<DcaIteration>]) -> Verdict {
    let all: Vec<&DcaIteration> = histories.iter().flatten().collect();
    let bad = all.iter().filter(|it| !it.descent_ok).count();
    let mut monotone_breaks = 0;
    for h in histories {
        for pair in h.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let slack = 1e-9 * a.objective.abs().max(1.0);
            let drop = a.objective - b.objective;
            if drop + slack < 0.25 * b.sigma * b.step_norm * b.step_norm {
                monotone_breaks += 1;
            }
        }
    }
    Verdict::new(
        !all.is_empty() && bad == 0 && monotone_breaks == 0,
        format!(
            "{} accepted iterations in {} runs, {bad} flagged, {monotone_breaks} recomputed violations",
            all.len(),
            histories.len()
        ),
    )
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn mcp(x: f64, lambda: f64, gamma: f64) -> f64 {
    let x = x.abs();
    if x <= gamma * lambda {
        lambda * x - x * x / (2.0 * gamma)
    } else {
        gamma * lambda * lambda / 2.0
    }
}

fn two_node_oracle(histories: &mut Vec<Vec<DcaIteration>>) -> Verdict {
    // (S, λ, γ): interior of the concave region, its plateau, and no penalty
    let cases = [
        ([1.0, 0.0, 1.0], 0.5, 4.0),
        ([1.2, 0.2, 1.0], 0.3, 1.5),
        ([0.7, -0.1, 0.9], 0.0, 1.5),
    ];
    let mut worst_w = 0.0f64;
    let mut worst_f = 0.0f64;
    for (s, lambda, gamma) in cases {
        let cov = DMatrix::from_row_slice(2, 2, &[s[0], s[1], s[1], s[2]]);
        let a = s[0] + s[2] - 2.0 * s[1];
        let f = |w: f64| -(2.0 * w).ln() + a * w + 2.0 * mcp(w, lambda, gamma);
        let w_star = golden_section(f, 1e-9, 50.0, 1e-12);
        let graph = EdgeGraph::new(2, [(0, 1)]).unwrap();
        let problem = ProblemData::new(
            cov,
            ConnectivityPrior::truth(&graph),
            PenaltyParams::new(lambda, gamma).unwrap(),
        )
        .unwrap();
        // the relative-change stop bounds w only to about sqrt(eps)
        let params = DcaParams {
            eps: 1e-12,
            ..DcaParams::default()
        };
        let report = dca_solve(&problem, &params).unwrap();
        worst_w = worst_w.max((report.w[0] - w_star).abs());
        worst_f = worst_f.max((report.objective - f(w_star)).abs());
        histories.push(report.dca_history);
    }
    Verdict::new(
        worst_w <= 1e-6 && worst_f <= 1e-6,
        format!("max |w - w*| {worst_w:.2e}, max |f - f*| {worst_f:.2e} over 3 instances"),
    )
}

fn best_row(rows: &[SweepRecord]) -> Option<&SweepRecord> {
    rows.iter()
        .filter(|r| r.f1 >= 0.99 && r.recovery_error <= 2e-2)
        .min_by(|a, b| a.recovery_error.total_cmp(&b.recovery_error))
}

fn er_sweep(histories: &mut Vec<Vec<DcaIteration>>) -> Verdict {
    let spec = InstanceSpec::new(Ensemble::ErdosRenyi { p: 0.1 }, 100, Scenario::True);
    let lambdas = log_grid(1e-4, 1e-1, 10).unwrap();
    let cfg = SweepConfig::new(spec, lambdas, (1..=5).collect());
    let started = Instant::now();
    let outcomes = run_sweep(&cfg).unwrap();
    let elapsed = started.elapsed().as_secs_f64();
    let rows: Vec<SweepRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    histories.extend(outcomes.into_iter().map(|o| o.report.dca_history));
    let avg = average_records(&rows);
    let top = avg
        .iter()
        .max_by(|a, b| {
            a.f1.total_cmp(&b.f1)
                .then(b.recovery_error.total_cmp(&a.recovery_error))
        })
        .unwrap();
    let hit = best_row(&avg);
    let summary = match hit {
        Some(r) => format!(
            "lambda {:.2e}: F1 {:.4}, error {:.2e}",
            r.lambda, r.f1, r.recovery_error
        ),
        None => format!(
            "best lambda {:.2e}: F1 {:.4}, error {:.2e}",
            top.lambda, top.f1, top.recovery_error
        ),
    };
    Verdict::new(
        hit.is_some() && elapsed < 600.0,
        format!("{summary}; 5 seeds x 10 lambdas in {elapsed:.0} s"),
    )
}

fn modular_row(histories: &mut Vec<Vec<DcaIteration>>) -> Verdict {
    let spec = InstanceSpec::new(
        Ensemble::Modular {
            p1: 0.005,
            p2: 0.25,
        },
        160,
        Scenario::Full,
    );
    let seeds: Vec<u64> = (1..=3).collect();
    let mut cfg = SweepConfig::new(spec, vec![0.005], seeds.clone());
    cfg.dca.eps = 1e-6;
    let started = Instant::now();
    let outcomes = run_sweep(&cfg).unwrap();
    let per_seed = started.elapsed().as_secs_f64() / seeds.len() as f64;
    let rows: Vec<SweepRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let per: Vec<String> = rows
        .iter()
        .map(|r| format!("{:.3}/{:.1e}", r.f1, r.recovery_error))
        .collect();
    histories.extend(outcomes.into_iter().map(|o| o.report.dca_history));
    let avg = &average_records(&rows)[0];
    Verdict::new(
        avg.f1 >= 0.95 && avg.recovery_error <= 2e-2 && per_seed < 300.0,
        format!(
            "F1 {:.4}, error {:.2e} (per seed F1/error: {}); {per_seed:.0} s per seed",
            avg.f1,
            avg.recovery_error,
            per.join(", ")
        ),
    )
}

fn l1_degeneracy() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let g = random_graph(&mut rng, 12);
        let inc = g.incidence();
        let w = DVector::from_fn(g.num_edges(), |_, _| {
            if rng.random_bool(0.2) {
                0.0
            } else {
                rng.random_range(0.0..5.0)
            }
        });
        let lambda = rng.random_range(0.0..2.0);
        let theta = inc.apply_astar(&w).unwrap();
        let lhs = lambda * l1_off(&theta);
        let rhs = lambda * theta.trace();
        worst = worst.max((lhs - rhs).abs() / (1.0 + rhs.abs()));
    }
    Verdict::new(
        worst <= 1e-14,
        format!("max relative gap {worst:.2e} over 100 draws"),
    )
}

fn certificates(histories: &[Vec<DcaIteration>]) -> Verdict {
    let all: Vec<&DcaIteration> = histories.iter().flatten().collect();
    let bad: Vec<&&DcaIteration> = all
        .iter()
        .filter(|it| {
            let stop = if it.step_norm == 0.0 {
                it.delta_norm <= 1e-12
            } else {
                it.delta_norm <= it.stop_rhs
            };
            !(it.r < 1.0 && it.delta_norm <= it.bound && stop)
        })
        .collect();
    let max_r = all.iter().map(|it| it.r).fold(0.0, f64::max);
    Verdict::new(
        !all.is_empty() && bad.is_empty(),
        format!(
            "{} accepted iterations, {} violations, max r {max_r:.2e}",
            all.len(),
            bad.len()
        ),
    )
}

fn report(id: usize, name: &str, started: Instant, v: &Verdict) {
    println!(
        "{} [{id:>2}] {name}: {} ({:.1} s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        started.elapsed().as_secs_f64()
    );
}

fn timed(id: usize, name: &str, limit_s: Option<f64>, f: impl FnOnce() -> Verdict) -> bool {
    let started = Instant::now();
    let mut v = f();
    if let Some(limit) = limit_s {
        if started.elapsed().as_secs_f64() >= limit {
            v.pass = false;
            v.detail.push_str(&format!("; exceeded {limit} s"));
        }
    }
    report(id, name, started, &v);
    v.pass
}

fn main() -> ExitCode {
    let mut results = vec![
        timed(1, "operator identity", Some(1.0), operator_identity),
        timed(2, "log-det prox", Some(5.0), prox_correctness),
        timed(3, "dual calculus", Some(10.0), dual_calculus),
        timed(4, "ADMM KKT", Some(30.0), admm_kkt),
    ];

    let mut small = Vec::new();
    let pass6 = timed(6, "two-node oracle", None, || two_node_oracle(&mut small));
    let mut large = Vec::new();
    let pass7 = timed(7, "ER lambda sweep", None, || er_sweep(&mut large));
    let pass8 = timed(8, "modular n=160", None, || modular_row(&mut large));
    let mut everything = small;
    everything.extend(large.iter().cloned());
    results.push(timed(5, "DCA descent", None, || descent(&everything)));
    results.extend([pass6, pass7, pass8]);
    results.push(timed(9, "l1 degeneracy", None, l1_degeneracy));
    results.push(timed(10, "certificate soundness", None, || {
        certificates(&large)
    }));

    let failed = results.iter().filter(|p| !**p).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
