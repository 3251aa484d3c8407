//! Random graph ensembles, edge-weight sampling and prior perturbations.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ConnectivityPrior, EdgeGraph, PriorKind};
use crate::error::{Error, Result};

pub const DEFAULT_MODULES: usize = 4;

fn check_prob(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in (0, 1), got {p}"
        )))
    }
}

/// Erdős–Rényi graph: every pair is kept independently with probability `p`.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<EdgeGraph> {
    check_prob("p", p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    EdgeGraph::new(n, edges)
}

/// Square lattice with four-nearest-neighbour adjacency. `n` must be a
/// perfect square; node `r·side + c` sits at row `r`, column `c`.
pub fn grid(n: usize) -> Result<EdgeGraph> {
    let side = (n as f64).sqrt().round() as usize;
    if side * side != n || n == 0 {
        return Err(Error::InvalidParameter(format!(
            "grid graphs need a perfect-square node count, got {n}"
        )));
    }
    let mut edges = Vec::with_capacity(2 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                edges.push((v, v + 1));
            }
            if r + 1 < side {
                edges.push((v, v + side));
            }
        }
    }
    EdgeGraph::new(n, edges)
}

/// Random modular graph with [`DEFAULT_MODULES`] modules.
pub fn modular(n: usize, p1: f64, p2: f64, seed: u64) -> Result<EdgeGraph> {
    modular_with_modules(n, DEFAULT_MODULES, p1, p2, seed)
}

/// Random modular graph: nodes are split into `modules` contiguous blocks of
/// (near-)equal size; pairs across blocks are joined with probability `p1`,
/// pairs within a block with probability `p2`.
pub fn modular_with_modules(
    n: usize,
    modules: usize,
    p1: f64,
    p2: f64,
    seed: u64,
) -> Result<EdgeGraph> {
    check_prob("p1", p1)?;
    check_prob("p2", p2)?;
    if modules == 0 || modules > n.max(1) {
        return Err(Error::InvalidParameter(format!(
            "cannot split {n} nodes into {modules} modules"
        )));
    }
    let block = |v: usize| v * modules / n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if block(i) == block(j) { p2 } else { p1 };
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    EdgeGraph::new(n, edges)
}

/// Draws i.i.d. uniform weights on `[lo, hi]` for every edge.
pub fn sample_weights(g: &EdgeGraph, lo: f64, hi: f64, seed: u64) -> Result<EdgeGraph> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight interval [{lo}, {hi}] must satisfy 0 < lo <= hi"
        )));
    }
    if g.num_edges() == 0 {
        return Err(Error::InvalidGraph("cannot weight an empty graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..g.num_edges())
        .map(|_| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        })
        .collect();
    g.unweighted().set_weights(weights)
}

/// How a ground-truth connectivity pattern is degraded into a prior.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Perturbation {
    /// Superset of the truth with `round(factor·|ℰ|)` edges.
    Coarse { factor: f64 },
    /// All pairs.
    Full,
    /// Removes `round(percent/100·|ℰ|)` true edges.
    Drop { percent: f64 },
}

pub fn perturb_connectivity(
    truth: &ConnectivityPrior,
    mode: Perturbation,
    seed: u64,
) -> Result<ConnectivityPrior> {
    let n = truth.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match mode {
        Perturbation::Full => Ok(ConnectivityPrior::full(n)),
        Perturbation::Coarse { factor } => {
            if !(factor >= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "coarse factor must be >= 1, got {factor}"
                )));
            }
            let m = truth.num_edges();
            let target = (factor * m as f64).round() as usize;
            let non_edges: Vec<(usize, usize)> = EdgeGraph::complete(n)
                .edges()
                .iter()
                .copied()
                .filter(|&(i, j)| !truth.graph.contains(i, j))
                .collect();
            let extra = target - m;
            if extra > non_edges.len() {
                return Err(Error::InvalidParameter(format!(
                    "coarse prior needs {extra} extra edges but only {} non-edges exist",
                    non_edges.len()
                )));
            }
            let mut edges = truth.edges().to_vec();
            edges.extend(
                sample(&mut rng, non_edges.len(), extra)
                    .into_iter()
                    .map(|k| non_edges[k]),
            );
            Ok(ConnectivityPrior {
                graph: EdgeGraph::new(n, edges)?,
                kind: PriorKind::Coarse { factor },
            })
        }
        Perturbation::Drop { percent } => {
            if !(0.0..=100.0).contains(&percent) {
                return Err(Error::InvalidParameter(format!(
                    "drop percentage must lie in [0, 100], got {percent}"
                )));
            }
            let m = truth.num_edges();
            let remove = (percent / 100.0 * m as f64).round() as usize;
            let mut keep = vec![true; m];
            for k in sample(&mut rng, m, remove) {
                keep[k] = false;
            }
            let edges = truth
                .edges()
                .iter()
                .zip(&keep)
                .filter(|(_, &k)| k)
                .map(|(&e, _)| e);
            Ok(ConnectivityPrior {
                graph: EdgeGraph::new(n, edges)?,
                kind: PriorKind::Drop { percent },
            })
        }
    }
}
