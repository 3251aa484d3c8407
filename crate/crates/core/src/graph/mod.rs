//! Graphs, node-arc incidence structure and the edge-weight operators.
//!
//! A Laplacian supported on a connectivity prior is parametrized by its
//! edge weights `w`: `Θ = 𝒜*w = B Diag(w) Bᵀ`, with `𝒜X = diag(BᵀXB)` the
//! adjoint map. Edges are always kept in lexicographic `(i, j)` order with
//! `i < j`, and every edge-indexed vector follows that order.

mod generate;

pub use generate::{
    erdos_renyi, grid, modular, modular_with_modules, perturb_connectivity, sample_weights,
    Perturbation, DEFAULT_MODULES,
};

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected simple graph on `n` nodes with optional non-negative edge weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
}

impl EdgeGraph {
    /// Builds an unweighted graph. Pairs may be given in either orientation;
    /// they are normalized to `i < j` and sorted.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let triples = edges.into_iter().map(|(i, j)| (i, j, 1.0));
        let mut g = Self::with_weights(n, triples)?;
        g.weights = None;
        Ok(g)
    }

    /// Builds a weighted graph from `(i, j, weight)` triples.
    pub fn with_weights(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut triples: Vec<(usize, usize, f64)> = Vec::new();
        for (a, b, w) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) out of range for {n} nodes"
                )));
            }
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({i}, {j}) has invalid weight {w}"
                )));
            }
            triples.push((i, j, w));
        }
        triples.sort_by_key(|t| (t.0, t.1));
        if let Some(win) = triples
            .windows(2)
            .find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1))
        {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                win[0].0, win[0].1
            )));
        }
        Ok(Self {
            n,
            edges: triples.iter().map(|&(i, j, _)| (i, j)).collect(),
            weights: Some(triples.iter().map(|t| t.2).collect()),
        })
    }

    /// All `n(n-1)/2` pairs.
    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Self {
            n,
            edges,
            weights: None,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Replaces the weights, which must align with the edge list.
    pub fn set_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} edges",
                weights.len(),
                self.edges.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidGraph(format!("invalid weight {w}")));
        }
        self.weights = Some(weights);
        Ok(self)
    }

    pub fn unweighted(&self) -> Self {
        Self {
            n: self.n,
            edges: self.edges.clone(),
            weights: None,
        }
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).is_ok()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Breadth-first connectivity test. The empty graph on zero or one node
    /// counts as connected.
    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        IncidenceMatrix {
            n: self.n,
            edges: self.edges.clone(),
        }
    }

    /// Combinatorial Laplacian `D − W`. Requires weights.
    pub fn laplacian(&self) -> Result<DMatrix<f64>> {
        let w = self
            .weights
            .as_ref()
            .ok_or_else(|| Error::InvalidGraph("graph has no weights".into()))?;
        self.incidence().apply_astar(&DVector::from_column_slice(w))
    }
}

/// Node-arc incidence matrix `B` (`n × |ℰ|`), column `(ij)` equal to `e_i − e_j`.
///
/// Stored implicitly by its edge list; every column has exactly one `+1` and
/// one `−1`, so all products are `O(|ℰ|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl IncidenceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `𝒜*w = B Diag(w) Bᵀ`.
    pub fn apply_astar(&self, w: &DVector<f64>) -> Result<DMatrix<f64>> {
        if w.len() != self.edges.len() {
            return Err(Error::Dimension(format!(
                "weight vector of length {} for {} edges",
                w.len(),
                self.edges.len()
            )));
        }
        let mut m = DMatrix::zeros(self.n, self.n);
        for (&(i, j), &we) in self.edges.iter().zip(w.iter()) {
            m[(i, i)] += we;
            m[(j, j)] += we;
            m[(i, j)] -= we;
            m[(j, i)] -= we;
        }
        Ok(m)
    }

    /// `𝒜X = diag(BᵀXB)`, i.e. `X_ii + X_jj − 2X_ij` per edge (using the
    /// symmetric part of `X`).
    pub fn apply_a(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::Dimension(format!(
                "{}x{} matrix for a graph on {} nodes",
                x.nrows(),
                x.ncols(),
                self.n
            )));
        }
        Ok(DVector::from_iterator(
            self.edges.len(),
            self.edges
                .iter()
                .map(|&(i, j)| x[(i, i)] + x[(j, j)] - x[(i, j)] - x[(j, i)]),
        ))
    }

    /// `|B| x` for an edge-indexed `x`.
    pub fn abs_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n);
        for (&(i, j), &xe) in self.edges.iter().zip(x.iter()) {
            out[i] += xe;
            out[j] += xe;
        }
        out
    }

    /// `|B|ᵀ y` for a node-indexed `y`.
    pub fn abs_t_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.edges.len(),
            self.edges.iter().map(|&(i, j)| y[i] + y[j]),
        )
    }

    /// Dense `n × |ℰ|` form, mostly for tests and small problems.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.n, self.edges.len());
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            b[(i, e)] = 1.0;
            b[(j, e)] = -1.0;
        }
        b
    }
}

/// Where a connectivity prior came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    True,
    Coarse {
        factor: f64,
    },
    Full,
    Drop {
        percent: f64,
    },
    /// Read from a file or supplied by the caller.
    External,
}

/// Edge pattern constraining which off-diagonal entries may be nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectivityPrior {
    pub graph: EdgeGraph,
    pub kind: PriorKind,
}

impl ConnectivityPrior {
    pub fn new(graph: &EdgeGraph, kind: PriorKind) -> Self {
        Self {
            graph: graph.unweighted(),
            kind,
        }
    }

    pub fn truth(graph: &EdgeGraph) -> Self {
        Self::new(graph, PriorKind::True)
    }

    pub fn full(n: usize) -> Self {
        Self {
            graph: EdgeGraph::complete(n),
            kind: PriorKind::Full,
        }
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.graph.edges()
    }

    pub fn num_edges(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn incidence(&self) -> IncidenceMatrix {
        self.graph.incidence()
    }

    pub fn is_superset_of(&self, other: &EdgeGraph) -> bool {
        other
            .edges()
            .iter()
            .all(|&(i, j)| self.graph.contains(i, j))
    }
}
