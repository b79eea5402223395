//! L2-regularized logistic regression fitted by full-batch accelerated
//! gradient descent.
//!
//! Objective: `J(w, b) = (1/N) [Σ_i (softplus(z_i) − y_i z_i) + (λ/2)‖w‖²]`
//! with `z_i = w·x_i + b`; the bias is not penalized.

use crate::error::{Error, Result};
use crate::numkernel::{dot, sigmoid, softplus, DenseMatrix};
use crate::par::{self, Exec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub lambda: f64,
    /// Stop once every gradient entry is below this in absolute value.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            lambda: 1.0,
            tol: 1e-6,
            max_iter: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub iterations: usize,
}

impl LogisticModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.w, x) + self.b
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

/// Parameters packed as `[w..., b]`.
pub fn objective(x: &DenseMatrix, y: &[bool], lambda: f64, theta: &[f64]) -> f64 {
    let d = x.cols();
    let (w, b) = (&theta[..d], theta[d]);
    let n = x.rows() as f64;
    let data: f64 = (0..x.rows())
        .map(|i| {
            let z = dot(w, x.row(i)) + b;
            softplus(z) - if y[i] { z } else { 0.0 }
        })
        .sum();
    (data + 0.5 * lambda * dot(w, w)) / n
}

pub fn gradient(x: &DenseMatrix, y: &[bool], lambda: f64, theta: &[f64]) -> Vec<f64> {
    let d = x.cols();
    let (w, b) = (&theta[..d], theta[d]);
    let mut g = vec![0.0; d + 1];
    for i in 0..x.rows() {
        let r = sigmoid(dot(w, x.row(i)) + b) - if y[i] { 1.0 } else { 0.0 };
        for (gk, xk) in g[..d].iter_mut().zip(x.row(i)) {
            *gk += r * xk;
        }
        g[d] += r;
    }
    let n = x.rows() as f64;
    for k in 0..d {
        g[k] = (g[k] + lambda * w[k]) / n;
    }
    g[d] /= n;
    g
}

/// Largest eigenvalue of `[X 1]ᵀ[X 1]` by power iteration.
fn gram_spectral_norm(x: &DenseMatrix) -> f64 {
    let d = x.cols() + 1;
    let mut gram = vec![0.0; d * d];
    for i in 0..x.rows() {
        let row = x.row(i);
        for a in 0..d {
            let xa = if a < d - 1 { row[a] } else { 1.0 };
            for b in 0..d {
                let xb = if b < d - 1 { row[b] } else { 1.0 };
                gram[a * d + b] += xa * xb;
            }
        }
    }
    let mut v = vec![1.0 / (d as f64).sqrt(); d];
    let mut lambda = 0.0;
    for _ in 0..200 {
        let mut nv: Vec<f64> = (0..d).map(|a| dot(&gram[a * d..(a + 1) * d], &v)).collect();
        let norm = dot(&nv, &nv).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        nv.iter_mut().for_each(|x| *x /= norm);
        let converged = (norm - lambda).abs() <= 1e-10 * norm;
        lambda = norm;
        v = nv;
        if converged {
            break;
        }
    }
    lambda
}

pub fn fit_binary(x: &DenseMatrix, y: &[bool], opts: &FitOptions) -> Result<LogisticModel> {
    if x.rows() != y.len() {
        return Err(Error::Shape(format!("{} feature rows for {} labels", x.rows(), y.len())));
    }
    if x.rows() == 0 {
        return Err(Error::Argument("no training examples".into()));
    }
    if !x.is_finite() {
        return Err(Error::Numeric("non-finite feature".into()));
    }
    let d = x.cols();
    let n = x.rows() as f64;
    // 1.05 margin over the power-iteration estimate
    let lipschitz = 1.05 * (0.25 * gram_spectral_norm(x) + opts.lambda) / n;
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let mut theta = vec![0.0; d + 1];
    let mut y_pt = theta.clone();
    let mut t = 1.0f64;
    let mut iterations = opts.max_iter;
    for it in 0..opts.max_iter {
        let g = gradient(x, y, opts.lambda, &y_pt);
        if g.iter().all(|v| v.abs() < opts.tol) {
            theta = y_pt;
            iterations = it;
            break;
        }
        let next: Vec<f64> = y_pt.iter().zip(&g).map(|(p, gk)| p - step * gk).collect();
        let delta: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        // gradient-based restart of the momentum sequence
        let (t_next, beta) = if dot(&g, &delta) > 0.0 {
            (1.0, 0.0)
        } else {
            let tn = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            (tn, (t - 1.0) / tn)
        };
        y_pt = next.iter().zip(&delta).map(|(a, dl)| a + beta * dl).collect();
        theta = next;
        t = t_next;
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("logistic regression diverged".into()));
    }
    let b = theta.pop().expect("bias");
    Ok(LogisticModel { w: theta, b, iterations })
}

/// One-vs-rest multi-class classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct OvrModel {
    pub classes: Vec<u32>,
    pub models: Vec<LogisticModel>,
}

impl OvrModel {
    pub fn fit(x: &DenseMatrix, labels: &[u32], opts: &FitOptions, exec: Exec) -> Result<Self> {
        if x.rows() != labels.len() {
            return Err(Error::Shape(format!("{} feature rows for {} labels", x.rows(), labels.len())));
        }
        let mut classes = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Ok(OvrModel { classes, models: Vec::new() });
        }
        let models = par::map(exec, &classes, |&c| {
            let y: Vec<bool> = labels.iter().map(|&l| l == c).collect();
            fit_binary(x, &y, opts)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        Ok(OvrModel { classes, models })
    }

    /// Class with the highest decision value; first class on ties.
    pub fn predict_row(&self, x: &[f64]) -> u32 {
        if self.models.is_empty() {
            return self.classes[0];
        }
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (k, m) in self.models.iter().enumerate() {
            let s = m.decision(x);
            if s > best_score {
                best = k;
                best_score = s;
            }
        }
        self.classes[best]
    }

    pub fn predict(&self, x: &DenseMatrix) -> Vec<u32> {
        (0..x.rows()).map(|i| self.predict_row(x.row(i))).collect()
    }
}
