//! Edge extraction, F1 score and relative recovery error.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default relative threshold for declaring an edge present.
pub const DEFAULT_EDGE_THRESHOLD: f64 = 1e-4;

/// Edges whose weight is strictly above `threshold_rel · max(w)`, sorted.
pub fn edge_set(
    w: &DVector<f64>,
    edges: &[(usize, usize)],
    threshold_rel: f64,
) -> Vec<(usize, usize)> {
    let wmax = w.iter().copied().fold(0.0, f64::max);
    let cut = threshold_rel * wmax;
    let mut kept: Vec<_> = edges
        .iter()
        .zip(w.iter())
        .filter(|(_, &v)| v > cut && v > 0.0)
        .map(|(&e, _)| normalize(e))
        .collect();
    kept.sort_unstable();
    kept
}

fn normalize((i, j): (usize, usize)) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Confusion counts of an estimated edge set against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDecision {
    pub edges: Vec<(usize, usize)>,
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl EdgeDecision {
    pub fn new(estimated: &[(usize, usize)], truth: &[(usize, usize)], threshold: f64) -> Self {
        let est: BTreeSet<_> = estimated.iter().copied().map(normalize).collect();
        let tru: BTreeSet<_> = truth.iter().copied().map(normalize).collect();
        let tp = est.intersection(&tru).count();
        Self {
            edges: est.iter().copied().collect(),
            threshold,
            tp,
            fp: est.len() - tp,
            fn_: tru.len() - tp,
        }
    }

    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            2.0 * self.tp as f64 / denom as f64
        }
    }
}

/// `2tp / (2tp + fp + fn)`; 1 when both sets are empty.
pub fn f1_score(estimated: &[(usize, usize)], truth: &[(usize, usize)]) -> f64 {
    EdgeDecision::new(estimated, truth, 0.0).f1()
}

/// `‖Θ − L‖_F / ‖L‖_F`.
pub fn recovery_error(theta: &DMatrix<f64>, l_true: &DMatrix<f64>) -> Result<f64> {
    if theta.shape() != l_true.shape() {
        return Err(Error::Dimension(format!(
            "estimate is {:?} but truth is {:?}",
            theta.shape(),
            l_true.shape()
        )));
    }
    let denom = l_true.norm();
    if denom == 0.0 {
        return Err(Error::InvalidParameter("true Laplacian is zero".into()));
    }
    Ok((theta - l_true).norm() / denom)
}
