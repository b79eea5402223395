//! Two-dimensional PCA projection by power iteration with deflation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkernel::{dot, DenseMatrix};

pub const TOL: f64 = 1e-9;
const MAX_ITER: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// n×2 coordinates.
    pub coords: DenseMatrix,
    /// Principal axes, each of length d.
    pub axes: [Vec<f64>; 2],
    /// Matching eigenvalues of XᵀX for the centered X.
    pub eigenvalues: [f64; 2],
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn matvec(c: &[f64], d: usize, v: &[f64]) -> Vec<f64> {
    (0..d).map(|a| dot(&c[a * d..(a + 1) * d], v)).collect()
}

/// Leading eigenpair of the symmetric PSD matrix `c`, orthogonal to `against`.
fn leading(c: &[f64], d: usize, against: Option<&[f64]>) -> (Vec<f64>, f64) {
    let project_out = |v: &mut Vec<f64>| {
        if let Some(u) = against {
            let p = dot(v, u);
            v.iter_mut().zip(u).for_each(|(x, ux)| *x -= p * ux);
        }
    };
    // start from the column with the largest diagonal entry, nudged so it is
    // not accidentally orthogonal to the top eigenvector
    let j = (0..d).max_by(|&a, &b| c[a * d + a].total_cmp(&c[b * d + b])).unwrap_or(0);
    let mut v: Vec<f64> = (0..d).map(|a| c[a * d + j] + 1e-3 * (1.0 + a as f64) / d as f64).collect();
    project_out(&mut v);
    if normalize(&mut v) == 0.0 {
        return (vec![0.0; d], 0.0);
    }
    let mut lambda = 0.0;
    for _ in 0..MAX_ITER {
        let mut w = matvec(c, d, &v);
        project_out(&mut w);
        lambda = normalize(&mut w);
        if lambda == 0.0 {
            return (v, 0.0);
        }
        let diff = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        v = w;
        if diff < TOL {
            break;
        }
    }
    (v, lambda)
}

/// Sign convention: the largest-magnitude entry of each axis is positive.
fn fix_sign(v: &mut [f64]) {
    let k = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    if v.get(k).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn project_2d(x: &DenseMatrix) -> Result<Projection> {
    let (n, d) = (x.rows(), x.cols());
    if d < 2 {
        return Err(Error::Shape(format!("projection needs d >= 2, got {d}")));
    }
    if n == 0 {
        return Err(Error::Shape("empty embedding".into()));
    }
    let mut mean = vec![0.0; d];
    for i in 0..n {
        mean.iter_mut().zip(x.row(i)).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered: Vec<Vec<f64>> = (0..n)
        .map(|i| x.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let mut c = vec![0.0; d * d];
    for r in &centered {
        for a in 0..d {
            for b in 0..d {
                c[a * d + b] += r[a] * r[b];
            }
        }
    }

    let (mut v1, l1) = leading(&c, d, None);
    let (mut v2, mut l2) = if l1 > 0.0 { leading(&c, d, Some(&v1)) } else { (vec![0.0; d], 0.0) };
    if l2 <= TOL * l1.max(1.0) {
        log::warn!("embedding has fewer than 2 nonzero singular values; second coordinate set to zero");
        v2 = vec![0.0; d];
        l2 = 0.0;
    }
    fix_sign(&mut v1);
    fix_sign(&mut v2);
    let mut coords = DenseMatrix::zeros(n, 2);
    for (i, r) in centered.iter().enumerate() {
        coords.set(i, 0, dot(r, &v1));
        coords.set(i, 1, dot(r, &v2));
    }
    Ok(Projection {
        coords,
        axes: [v1, v2],
        eigenvalues: [l1, l2],
    })
}

pub fn format_projection(coords: &DenseMatrix, labels: Option<&[Option<u32>]>) -> String {
    let mut s = String::from("node_id,x,y,label\n");
    for i in 0..coords.rows() {
        let label = labels.and_then(|l| l.get(i).copied().flatten());
        let label = label.map(|l| l.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{i},{},{},{label}", coords.get(i, 0), coords.get(i, 1));
    }
    s
}

pub fn write_projection(path: &Path, coords: &DenseMatrix, labels: Option<&[Option<u32>]>) -> Result<()> {
    std::fs::write(path, format_projection(coords, labels)).map_err(|e| Error::io(path, e))
}
