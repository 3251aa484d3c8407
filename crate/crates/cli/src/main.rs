//! Command-line front end: generate synthetic graphs, solve, sweep λ and
//! evaluate estimates.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use laplace_mcp::admm::{solve_cgl_l1, AdmmOptions};
use laplace_mcp::dca::{dca_solve, DcaParams};
use laplace_mcp::experiment::{
    average_records, evaluate, parse_grid, run_sweep, write_sweep_csv, Ensemble, InstanceSpec,
    Scenario, SweepConfig, SweepRecord,
};
use laplace_mcp::graph::{modular_with_modules, ConnectivityPrior, PriorKind};
use laplace_mcp::io;
use laplace_mcp::linalg::GramStrategy;
use laplace_mcp::metrics::DEFAULT_EDGE_THRESHOLD;
use laplace_mcp::{Model, PenaltyParams, ProblemData, SolveReport};

#[derive(Parser)]
#[command(
    name = "laplace-mcp",
    version,
    about = "Sparse graph Laplacian learning with the MCP penalty"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a weighted random graph and optionally its covariance.
    Gen(GenArgs),
    /// Estimate a Laplacian from a covariance or data file.
    Solve(SolveArgs),
    /// Run a λ sweep on synthetic instances and write CSV tables.
    Sweep(SweepArgs),
    /// Compare a solve report with a ground-truth graph.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum EnsembleKind {
    Er,
    Grid,
    Modular,
}

#[derive(Args)]
struct EnsembleArgs {
    #[arg(long, value_enum)]
    ensemble: EnsembleKind,
    #[arg(long)]
    nodes: usize,
    /// Edge probability of the Erdős–Rényi ensemble.
    #[arg(long, default_value_t = 0.1)]
    prob: f64,
    /// Cross-module edge probability.
    #[arg(long, default_value_t = 0.005)]
    p1: f64,
    /// Within-module edge probability.
    #[arg(long, default_value_t = 0.25)]
    p2: f64,
    #[arg(long, default_value_t = 0.1)]
    weight_lo: f64,
    #[arg(long, default_value_t = 3.0)]
    weight_hi: f64,
}

impl EnsembleArgs {
    fn ensemble(&self) -> Ensemble {
        match self.ensemble {
            EnsembleKind::Er => Ensemble::ErdosRenyi { p: self.prob },
            EnsembleKind::Grid => Ensemble::Grid,
            EnsembleKind::Modular => Ensemble::Modular {
                p1: self.p1,
                p2: self.p2,
            },
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of modules of the modular ensemble.
    #[arg(long, default_value_t = 4)]
    modules: usize,
    /// Output graph JSON.
    #[arg(long)]
    out: PathBuf,
    /// Also write a covariance (Matrix Market).
    #[arg(long)]
    cov: Option<PathBuf>,
    /// Sample size for the covariance; omitted means the exact L†.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    CglMcp,
    CglL1,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum GramArg {
    Auto,
    Cholesky,
    Smw,
    Cg,
}

impl GramArg {
    fn strategy(self) -> Option<GramStrategy> {
        match self {
            GramArg::Auto => None,
            GramArg::Cholesky => Some(GramStrategy::Cholesky),
            GramArg::Smw => Some(GramStrategy::Smw),
            GramArg::Cg => Some(GramStrategy::Cg),
        }
    }
}

#[derive(Args, Serialize)]
struct SolverArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::CglMcp)]
    model: ModelArg,
    #[arg(long, default_value_t = 1.5)]
    gamma: f64,
    /// Outer tolerance (DCA) or KKT tolerance (ℓ1 model).
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma0: f64,
    #[arg(long, default_value_t = 500)]
    max_outer: usize,
    #[arg(long, default_value_t = 20_000)]
    admm_max_iter: usize,
    #[arg(long, value_enum, default_value_t = GramArg::Auto)]
    gram: GramArg,
}

impl SolverArgs {
    fn admm(&self) -> AdmmOptions {
        AdmmOptions {
            tol: self.eps,
            max_iter: self.admm_max_iter,
            gram: self.gram.strategy(),
            ..AdmmOptions::default()
        }
    }

    fn dca(&self) -> DcaParams {
        DcaParams {
            eps: self.eps,
            sigma0: self.sigma0,
            max_outer: self.max_outer,
            admm: self.admm(),
            ..DcaParams::default()
        }
    }

    fn model(&self) -> Model {
        match self.model {
            ModelArg::CglMcp => Model::CglMcp,
            ModelArg::CglL1 => Model::CglL1,
        }
    }
}

#[derive(Args, Serialize)]
struct SolveArgs {
    /// Covariance matrix (Matrix Market).
    #[arg(long, conflicts_with = "data", required_unless_present = "data")]
    cov: Option<PathBuf>,
    /// Raw data, k rows by n columns (CSV, optional header).
    #[arg(long)]
    data: Option<PathBuf>,
    /// `full` or a graph JSON file listing the admissible edges.
    #[arg(long, default_value = "full")]
    connectivity: String,
    #[arg(long)]
    lambda: f64,
    #[command(flatten)]
    #[serde(flatten)]
    solver: SolverArgs,
    /// Report JSON; printed to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    ensemble: EnsembleArgs,
    /// `true`, `full`, `coarse:<factor>` or `drop:<percent>`.
    #[arg(long, default_value = "true")]
    scenario: String,
    /// Log-spaced λ grid `lo:hi:count`.
    #[arg(long)]
    grid: String,
    /// Number of seeds, starting at `--first-seed`.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Samples per node; 0 uses the exact L†.
    #[arg(long, default_value_t = 5000)]
    samples_per_node: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
    threshold: f64,
    /// Per-(λ, seed) CSV.
    #[arg(long)]
    out: PathBuf,
    /// Seed-averaged CSV; defaults to `<out stem>_avg.csv`.
    #[arg(long)]
    avg_out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    report: PathBuf,
    /// Weighted ground-truth graph JSON.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EDGE_THRESHOLD)]
    threshold: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(&a).map(|_| 0),
        Command::Solve(a) => cmd_solve(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Eval(a) => cmd_eval(&a).map(|_| 0),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn cmd_gen(a: &GenArgs) -> Result<()> {
    let e = &a.ensemble;
    let graph = match (e.ensemble, a.modules) {
        (EnsembleKind::Modular, m) if m != 4 => {
            modular_with_modules(e.nodes, m, e.p1, e.p2, a.seed)?
        }
        _ => e.ensemble().generate(e.nodes, a.seed)?,
    };
    let truth = laplace_mcp::graph::sample_weights(&graph, e.weight_lo, e.weight_hi, a.seed)?;
    io::write_graph(&a.out, &truth).with_context(|| format!("writing {}", a.out.display()))?;
    eprintln!(
        "wrote {} nodes, {} edges{}",
        truth.n(),
        truth.num_edges(),
        if truth.is_connected() {
            ""
        } else {
            " (disconnected)"
        }
    );
    if let Some(cov) = &a.cov {
        let l = truth.laplacian()?;
        let s = match a.samples {
            Some(k) => laplace_mcp::synth::sample_covariance(&l, k, a.seed)?,
            None => laplace_mcp::synth::population_covariance(&l)?,
        };
        io::write_matrix_market(cov, &s).with_context(|| format!("writing {}", cov.display()))?;
    }
    Ok(())
}

fn load_problem(a: &SolveArgs) -> Result<ProblemData> {
    let s = if let Some(p) = &a.cov {
        io::read_covariance(p).with_context(|| format!("reading {}", p.display()))?
    } else {
        let p = a.data.as_ref().expect("clap requires cov or data");
        let x = io::read_data_matrix(p).with_context(|| format!("reading {}", p.display()))?;
        io::covariance_from_data(&x)?
    };
    let prior = load_prior(&a.connectivity, s.nrows())?;
    Ok(ProblemData::new(
        s,
        prior,
        PenaltyParams::new(a.lambda, a.solver.gamma)?,
    )?)
}

fn load_prior(spec: &str, n: usize) -> Result<ConnectivityPrior> {
    if spec == "full" {
        return Ok(ConnectivityPrior::full(n));
    }
    let g = io::read_graph(Path::new(spec)).with_context(|| format!("reading {spec}"))?;
    if g.n() != n {
        bail!("connectivity graph has {} nodes, covariance has {n}", g.n());
    }
    Ok(ConnectivityPrior::new(&g, PriorKind::External))
}

fn cmd_solve(a: &SolveArgs) -> Result<u8> {
    let problem = load_problem(a)?;
    let mut report = match a.solver.model() {
        Model::CglMcp => dca_solve(&problem, &a.solver.dca())?,
        Model::CglL1 => solve_cgl_l1(&problem, &a.solver.admm())?,
    };
    let solver_config = std::mem::take(&mut report.config);
    report.config = serde_json::json!({ "run": a, "solver": solver_config });
    emit_report(&report, a.out.as_deref())?;
    eprintln!(
        "{:?} after {} iterations, objective {:.10e}",
        report.termination, report.iterations, report.objective
    );
    Ok(report.termination.exit_code() as u8)
}

fn emit_report(report: &SolveReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => report
            .write_json(p)
            .with_context(|| format!("writing {}", p.display()))?,
        None => println!("{}", report.to_json()?),
    }
    Ok(())
}

fn parse_scenario(s: &str) -> Result<Scenario> {
    let (kind, arg) = match s.split_once(':') {
        Some((k, v)) => (k, Some(v)),
        None => (s, None),
    };
    let value = |name: &str| -> Result<f64> {
        arg.with_context(|| format!("scenario {name} needs a value, e.g. {name}:1.5"))?
            .parse()
            .with_context(|| format!("bad scenario value in {s}"))
    };
    Ok(match kind {
        "true" => Scenario::True,
        "full" => Scenario::Full,
        "coarse" => Scenario::Coarse {
            factor: value("coarse")?,
        },
        "drop" => Scenario::Drop {
            percent: value("drop")?,
        },
        _ => bail!("unknown scenario {s}"),
    })
}

fn cmd_sweep(a: &SweepArgs) -> Result<u8> {
    let lambdas = parse_grid(&a.grid)?;
    let mut spec = InstanceSpec::new(
        a.ensemble.ensemble(),
        a.ensemble.nodes,
        parse_scenario(&a.scenario)?,
    );
    spec.weight_lo = a.ensemble.weight_lo;
    spec.weight_hi = a.ensemble.weight_hi;
    spec.samples_per_node = a.samples_per_node;
    let seeds: Vec<u64> = (a.first_seed..a.first_seed + a.seeds).collect();
    let mut cfg = SweepConfig::new(spec, lambdas, seeds);
    cfg.model = a.solver.model();
    cfg.gamma = a.solver.gamma;
    cfg.dca = a.solver.dca();
    cfg.admm = a.solver.admm();
    cfg.threshold = a.threshold;

    let outcomes = run_sweep(&cfg)?;
    let rows: Vec<SweepRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    write_sweep_csv(&a.out, &rows).with_context(|| format!("writing {}", a.out.display()))?;
    let avg_path = a.avg_out.clone().unwrap_or_else(|| {
        let stem = a
            .out
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("sweep");
        a.out.with_file_name(format!("{stem}_avg.csv"))
    });
    write_sweep_csv(&avg_path, &average_records(&rows))
        .with_context(|| format!("writing {}", avg_path.display()))?;
    eprintln!("{} rows written to {}", rows.len(), a.out.display());
    let all_converged = outcomes.iter().all(|o| o.report.termination.is_converged());
    Ok(if all_converged { 0 } else { 2 })
}

fn cmd_eval(a: &EvalArgs) -> Result<()> {
    let report = SolveReport::read_json(&a.report)
        .with_context(|| format!("reading {}", a.report.display()))?;
    let truth =
        io::read_graph(&a.truth).with_context(|| format!("reading {}", a.truth.display()))?;
    let ev = evaluate(&report, &truth, a.threshold)?;
    let text = serde_json::to_string_pretty(&ev)?;
    match &a.out {
        Some(p) => std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    Ok(())
}
