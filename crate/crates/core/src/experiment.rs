//! Synthetic benchmark harness: graph ensembles, prior scenarios, instance
//! generation and λ sweeps.

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::admm::{solve_cgl_l1, AdmmOptions};
use crate::dca::{dca_solve, DcaParams};
use crate::error::{Error, Result};
use crate::graph::{
    erdos_renyi, grid, modular, perturb_connectivity, sample_weights, ConnectivityPrior, EdgeGraph,
    Perturbation,
};
use crate::metrics::{edge_set, recovery_error, EdgeDecision, DEFAULT_EDGE_THRESHOLD};
use crate::penalty::PenaltyParams;
use crate::problem::ProblemData;
use crate::report::{Model, SolveReport};
use crate::synth::sample_covariance;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "LAPLACE_MCP_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "ensemble", rename_all = "snake_case")]
pub enum Ensemble {
    ErdosRenyi { p: f64 },
    Grid,
    Modular { p1: f64, p2: f64 },
}

impl Ensemble {
    pub fn generate(&self, n: usize, seed: u64) -> Result<EdgeGraph> {
        match *self {
            Ensemble::ErdosRenyi { p } => erdos_renyi(n, p, seed),
            Ensemble::Grid => grid(n),
            Ensemble::Modular { p1, p2 } => modular(n, p1, p2, seed),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case")]
pub enum Scenario {
    True,
    Coarse { factor: f64 },
    Full,
    Drop { percent: f64 },
}

impl Scenario {
    pub fn prior(&self, truth: &EdgeGraph, seed: u64) -> Result<ConnectivityPrior> {
        let exact = ConnectivityPrior::truth(truth);
        match *self {
            Scenario::True => Ok(exact),
            Scenario::Full => perturb_connectivity(&exact, Perturbation::Full, seed),
            Scenario::Coarse { factor } => {
                perturb_connectivity(&exact, Perturbation::Coarse { factor }, seed)
            }
            Scenario::Drop { percent } => {
                perturb_connectivity(&exact, Perturbation::Drop { percent }, seed)
            }
        }
    }
}

/// Recipe for one synthetic problem family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub ensemble: Ensemble,
    pub n: usize,
    pub scenario: Scenario,
    pub weight_lo: f64,
    pub weight_hi: f64,
    /// Sample size `k = samples_per_node · n`; `0` uses the exact `L†`.
    pub samples_per_node: usize,
}

impl InstanceSpec {
    pub fn new(ensemble: Ensemble, n: usize, scenario: Scenario) -> Self {
        Self {
            ensemble,
            n,
            scenario,
            weight_lo: 0.1,
            weight_hi: 3.0,
            samples_per_node: 5000,
        }
    }
}

/// Ground truth, its Laplacian, the sample covariance and the prior.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub truth: EdgeGraph,
    pub laplacian: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
    pub prior: ConnectivityPrior,
    /// Seed that produced the (connected) graph.
    pub graph_seed: u64,
}

const MAX_GRAPH_DRAWS: u64 = 1000;

fn derive_seed(seed: u64, stream: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

impl SyntheticInstance {
    /// Draws a connected graph (redrawing with derived seeds if needed),
    /// weights, samples and the prior, all determined by `seed`.
    pub fn generate(spec: &InstanceSpec, seed: u64) -> Result<Self> {
        let mut graph_seed = seed;
        let mut g = spec.ensemble.generate(spec.n, graph_seed)?;
        let mut draws = 1;
        while !g.is_connected() {
            if draws == MAX_GRAPH_DRAWS || matches!(spec.ensemble, Ensemble::Grid) {
                return Err(Error::Disconnected(format!(
                    "no connected graph after {draws} draws"
                )));
            }
            graph_seed = derive_seed(seed, 1000 + draws);
            g = spec.ensemble.generate(spec.n, graph_seed)?;
            draws += 1;
        }
        let truth = sample_weights(&g, spec.weight_lo, spec.weight_hi, derive_seed(seed, 1))?;
        let laplacian = truth.laplacian()?;
        let covariance = if spec.samples_per_node == 0 {
            crate::synth::population_covariance(&laplacian)?
        } else {
            sample_covariance(
                &laplacian,
                spec.samples_per_node * spec.n,
                derive_seed(seed, 2),
            )?
        };
        let prior = spec.scenario.prior(&truth, derive_seed(seed, 3))?;
        Ok(Self {
            truth,
            laplacian,
            covariance,
            prior,
            graph_seed,
        })
    }

    pub fn problem(&self, penalty: PenaltyParams) -> Result<ProblemData> {
        ProblemData::new(self.covariance.clone(), self.prior.clone(), penalty)
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("empty λ grid".into()));
    }
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidParameter(format!(
            "log grid needs 0 < lo <= hi, got {lo}..{hi}"
        )));
    }
    if count == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..count)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == count - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (count - 1) as f64).exp()
            }
        })
        .collect())
}

/// Parses `lo:hi:count` into a log grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(Error::Parse(format!(
            "grid must be lo:hi:count, got {spec}"
        )));
    };
    let bad = |_| Error::Parse(format!("bad grid {spec}"));
    log_grid(
        lo.trim().parse().map_err(bad)?,
        hi.trim().parse().map_err(bad)?,
        count
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad grid {spec}")))?,
    )
}

/// F1 score, recovery error and edge counts of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub f1: f64,
    pub recovery_error: f64,
    pub estimated_edges: usize,
    pub true_edges: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Compares a solution with a weighted ground-truth graph.
pub fn evaluate(report: &SolveReport, truth: &EdgeGraph, threshold_rel: f64) -> Result<Evaluation> {
    if report.n != truth.n() {
        return Err(Error::Dimension(format!(
            "estimate has {} nodes, truth has {}",
            report.n,
            truth.n()
        )));
    }
    let est = edge_set(&report.weights(), &report.edges, threshold_rel);
    let d = EdgeDecision::new(&est, truth.edges(), threshold_rel);
    let err = recovery_error(&report.theta()?, &truth.laplacian()?)?;
    Ok(Evaluation {
        f1: d.f1(),
        recovery_error: err,
        estimated_edges: est.len(),
        true_edges: truth.num_edges(),
        tp: d.tp,
        fp: d.fp,
        fn_: d.fn_,
    })
}

/// One row of a sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub lambda: f64,
    pub edges: f64,
    pub f1: f64,
    pub recovery_error: f64,
    pub objective: f64,
    pub time_s: f64,
    pub status: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub model: Model,
    pub spec: InstanceSpec,
    pub lambdas: Vec<f64>,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub dca: DcaParams,
    pub admm: AdmmOptions,
    pub threshold: f64,
}

impl SweepConfig {
    pub fn new(spec: InstanceSpec, lambdas: Vec<f64>, seeds: Vec<u64>) -> Self {
        Self {
            model: Model::CglMcp,
            spec,
            lambdas,
            gamma: 1.5,
            seeds,
            dca: DcaParams::default(),
            admm: AdmmOptions::default(),
            threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }
}

/// A finished sweep cell.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub seed: u64,
    pub record: SweepRecord,
    pub evaluation: Evaluation,
    pub report: SolveReport,
}

/// Solves one problem with the configured model.
pub fn solve(
    problem: &ProblemData,
    model: Model,
    dca: &DcaParams,
    admm: &AdmmOptions,
) -> Result<SolveReport> {
    match model {
        Model::CglMcp => dca_solve(problem, dca),
        Model::CglL1 => solve_cgl_l1(problem, admm),
    }
}

fn worker_threads() -> usize {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .map_or(available, |t| t.min(available.max(t)))
}

/// Runs every `(seed, λ)` cell, in parallel up to [`THREADS_ENV`] threads.
/// Outcomes are ordered by seed, then by λ.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepOutcome>> {
    if cfg.lambdas.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::InvalidParameter(
            "sweep needs at least one λ and one seed".into(),
        ));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_threads())
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| {
        let instances: Vec<(u64, SyntheticInstance)> = cfg
            .seeds
            .par_iter()
            .map(|&s| SyntheticInstance::generate(&cfg.spec, s).map(|inst| (s, inst)))
            .collect::<Result<_>>()?;
        let cells: Vec<(usize, f64)> = (0..instances.len())
            .flat_map(|i| cfg.lambdas.iter().map(move |&l| (i, l)))
            .collect();
        cells
            .par_iter()
            .map(|&(i, lambda)| {
                let (seed, inst) = &instances[i];
                run_cell(cfg, inst, *seed, lambda)
            })
            .collect()
    })
}

fn run_cell(
    cfg: &SweepConfig,
    inst: &SyntheticInstance,
    seed: u64,
    lambda: f64,
) -> Result<SweepOutcome> {
    let problem = inst.problem(PenaltyParams::new(lambda, cfg.gamma)?)?;
    let start = Instant::now();
    let report = solve(&problem, cfg.model, &cfg.dca, &cfg.admm)?;
    let time_s = start.elapsed().as_secs_f64();
    let evaluation = evaluate(&report, &inst.truth, cfg.threshold)?;
    let record = SweepRecord {
        lambda,
        edges: evaluation.estimated_edges as f64,
        f1: evaluation.f1,
        recovery_error: evaluation.recovery_error,
        objective: report.objective,
        time_s,
        status: status_label(&report),
    };
    Ok(SweepOutcome {
        seed,
        record,
        evaluation,
        report,
    })
}

fn status_label(report: &SolveReport) -> String {
    serde_json::to_value(report.termination)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Arithmetic mean over seeds for each λ, in first-seen λ order. The status
/// column reads `converged k/m`.
pub fn average_records(records: &[SweepRecord]) -> Vec<SweepRecord> {
    let mut lambdas: Vec<f64> = Vec::new();
    for r in records {
        if !lambdas.contains(&r.lambda) {
            lambdas.push(r.lambda);
        }
    }
    lambdas
        .into_iter()
        .map(|lambda| {
            let group: Vec<&SweepRecord> = records.iter().filter(|r| r.lambda == lambda).collect();
            let m = group.len() as f64;
            let mean = |f: fn(&SweepRecord) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / m;
            let ok = group.iter().filter(|r| r.status == "converged").count();
            SweepRecord {
                lambda,
                edges: mean(|r| r.edges),
                f1: mean(|r| r.f1),
                recovery_error: mean(|r| r.recovery_error),
                objective: mean(|r| r.objective),
                time_s: mean(|r| r.time_s),
                status: format!("converged {ok}/{}", group.len()),
            }
        })
        .collect()
}

pub fn write_sweep_csv(path: impl AsRef<Path>, records: &[SweepRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv(path: impl AsRef<Path>) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|rec| rec.map_err(Error::from))
        .collect()
}
