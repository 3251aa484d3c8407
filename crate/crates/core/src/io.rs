//! File formats: Matrix Market covariances, CSV data matrices and graph JSON.
//!
//! Graph JSON is `{"n": 3, "edges": [[0, 1, 0.5], [1, 2, 2.0]]}` with 0-based
//! node indices; unweighted graphs are written with weight 1.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::EdgeGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MmLayout {
    Coordinate,
    Array,
}

/// Reads a real Matrix Market file in coordinate or array layout with
/// `general` or `symmetric` storage.
pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let reader = BufReader::new(File::open(path)?);
    parse_matrix_market(reader)
}

pub fn parse_matrix_market(reader: impl BufRead) -> Result<DMatrix<f64>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty Matrix Market file".into()))??;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse(format!(
            "not a Matrix Market header: {header}"
        )));
    }
    let layout = match tokens[2].as_str() {
        "coordinate" => MmLayout::Coordinate,
        "array" => MmLayout::Array,
        other => return Err(Error::Parse(format!("unsupported layout {other}"))),
    };
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(Error::Parse(format!("unsupported field {}", tokens[3])));
    }
    let symmetric = match tokens[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(Error::Parse(format!("unsupported symmetry {other}"))),
    };

    let mut body = Vec::new();
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        body.push(t.to_string());
    }
    let mut rows = body.into_iter();
    let size = rows
        .next()
        .ok_or_else(|| Error::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| {
            s.parse()
                .map_err(|_| Error::Parse(format!("bad size line: {size}")))
        })
        .collect::<Result<_>>()?;

    let parse_f = |s: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("bad number {s}")))?;
        if v.is_nan() {
            return Err(Error::Parse(
                "NaN entry: missing values are not supported".into(),
            ));
        }
        Ok(v)
    };

    match layout {
        MmLayout::Coordinate => {
            let [nr, nc, nnz] = dims[..] else {
                return Err(Error::Parse(format!("bad coordinate size line: {size}")));
            };
            let mut m = DMatrix::zeros(nr, nc);
            let mut count = 0;
            for row in rows {
                let f: Vec<&str> = row.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(Error::Parse(format!("bad entry line: {row}")));
                }
                let i: usize = f[0]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index in {row}")))?;
                let j: usize = f[1]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index in {row}")))?;
                if i == 0 || j == 0 || i > nr || j > nc {
                    return Err(Error::Parse(format!("index out of range in {row}")));
                }
                let v = parse_f(f[2])?;
                m[(i - 1, j - 1)] = v;
                if symmetric {
                    m[(j - 1, i - 1)] = v;
                }
                count += 1;
            }
            if count != nnz {
                return Err(Error::Parse(format!(
                    "expected {nnz} entries, found {count}"
                )));
            }
            Ok(m)
        }
        MmLayout::Array => {
            let [nr, nc] = dims[..] else {
                return Err(Error::Parse(format!("bad array size line: {size}")));
            };
            if symmetric && nr != nc {
                return Err(Error::Parse("symmetric array must be square".into()));
            }
            let values: Vec<f64> = rows
                .flat_map(|r| r.split_whitespace().map(str::to_string).collect::<Vec<_>>())
                .map(|s| parse_f(&s))
                .collect::<Result<_>>()?;
            let expected = if symmetric {
                nr * (nr + 1) / 2
            } else {
                nr * nc
            };
            if values.len() != expected {
                return Err(Error::Parse(format!(
                    "expected {expected} values, found {}",
                    values.len()
                )));
            }
            let mut m = DMatrix::zeros(nr, nc);
            let mut it = values.into_iter();
            for j in 0..nc {
                let start = if symmetric { j } else { 0 };
                for i in start..nr {
                    let v = it.next().expect("count checked");
                    m[(i, j)] = v;
                    if symmetric {
                        m[(j, i)] = v;
                    }
                }
            }
            Ok(m)
        }
    }
}

/// Writes a square symmetric matrix as `array real symmetric` (lower
/// triangle, column major), with shortest round-trip number formatting.
pub fn write_matrix_market(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension("only square matrices are written".into()));
    }
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "%%MatrixMarket matrix array real symmetric")?;
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in j..m.nrows() {
            writeln!(out, "{:?}", m[(i, j)])?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Square symmetric covariance from a Matrix Market file; symmetry is
/// enforced by averaging with the transpose.
pub fn read_covariance(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    let m = read_matrix_market(path)?;
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "covariance must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Reads a `k × n` data matrix from CSV. A first row that does not parse as
/// numbers is treated as a header.
pub fn read_data_matrix(path: impl AsRef<Path>) -> Result<DMatrix<f64>> {
    parse_data_matrix(File::open(path)?)
}

pub fn parse_data_matrix(reader: impl std::io::Read) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(vals) => {
                if vals.iter().any(|v| v.is_nan()) {
                    return Err(Error::Parse(format!(
                        "NaN in data row {}: missing values are not supported",
                        idx + 1
                    )));
                }
                rows.push(vals);
            }
            Err(_) if idx == 0 => continue,
            Err(_) => {
                return Err(Error::Parse(format!(
                    "non-numeric value in data row {}",
                    idx + 1
                )))
            }
        }
    }
    let k = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::Parse("data rows have different lengths".into()));
    }
    Ok(DMatrix::from_fn(k, n, |i, j| rows[i][j]))
}

/// `S = XcᵀXc / k` with column-centered `Xc`, symmetrized.
pub fn covariance_from_data(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let k = x.nrows();
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 observations, got {k}"
        )));
    }
    let mut xc = x.clone();
    for mut col in xc.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let s = xc.transpose() * &xc / k as f64;
    Ok((&s + s.transpose()) * 0.5)
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

pub fn graph_to_json(g: &EdgeGraph) -> Result<String> {
    let weights = g.weights();
    let edges = g
        .edges()
        .iter()
        .enumerate()
        .map(|(k, &(i, j))| (i, j, weights.map_or(1.0, |w| w[k])))
        .collect();
    Ok(serde_json::to_string_pretty(&GraphFile {
        n: g.n(),
        edges,
    })?)
}

pub fn graph_from_json(s: &str) -> Result<EdgeGraph> {
    let f: GraphFile = serde_json::from_str(s)?;
    EdgeGraph::with_weights(f.n, f.edges)
}

pub fn write_graph(path: impl AsRef<Path>, g: &EdgeGraph) -> Result<()> {
    std::fs::write(path, graph_to_json(g)?)?;
    Ok(())
}

pub fn read_graph(path: impl AsRef<Path>) -> Result<EdgeGraph> {
    graph_from_json(&std::fs::read_to_string(path)?)
}
