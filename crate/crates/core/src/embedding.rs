//! Embedding text files: header `n d`, then one `node_id v1 ... vd` row per
//! node with values printed to 17 significant digits (exact `f64` round trip).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkernel::DenseMatrix;

pub fn format_embedding(m: &DenseMatrix) -> String {
    let mut out = String::with_capacity(m.rows() * (m.cols() * 24 + 8) + 16);
    writeln!(out, "{} {}", m.rows(), m.cols()).unwrap();
    for i in 0..m.rows() {
        write!(out, "{i}").unwrap();
        for v in m.row(i) {
            write!(out, " {v:.16e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_embedding(m: &DenseMatrix, path: &Path) -> Result<()> {
    fs::write(path, format_embedding(m)).map_err(|e| Error::io(path, e))
}

pub fn parse_embedding(text: &str, path: &Path) -> Result<DenseMatrix> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty embedding file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| err(1, format!("bad header {header:?}")))?;
    let [n, d] = dims[..] else {
        return Err(err(1, format!("header must be `n d`, got {header:?}")));
    };
    let mut m = DenseMatrix::zeros(n, d);
    let mut seen = vec![false; n];
    for (no, line) in lines {
        let mut toks = line.split_whitespace();
        let node: usize = toks
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| err(no + 1, "missing node id".into()))?;
        if node >= n {
            return Err(err(no + 1, format!("node {node} >= n = {n}")));
        }
        let vals: Vec<f64> = toks
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(no + 1, format!("bad value: {e}")))?;
        if vals.len() != d {
            return Err(err(no + 1, format!("{} values, expected {d}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(err(no + 1, "non-finite value".into()));
        }
        m.row_mut(node).copy_from_slice(&vals);
        seen[node] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(err(0, format!("no row for node {missing}")));
    }
    Ok(m)
}

pub fn read_embedding(path: &Path) -> Result<DenseMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_embedding(&text, path)
}
