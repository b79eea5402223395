use serde::{Deserialize, Serialize};

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    /// `v ← μ v + g; θ ← θ − lr v`
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Sgd { momentum: 0.9 }
    }
}

impl OptimizerKind {
    pub fn adam() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First-order optimizer holding per-tensor state. State is created lazily on
/// the first step and must see the same tensor list, in the same order, on
/// every later step.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub lr: f64,
    pub kind: OptimizerKind,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
    steps: u64,
}

impl Optimizer {
    pub fn new(lr: f64, kind: OptimizerKind) -> Self {
        Optimizer {
            lr,
            kind,
            first: Vec::new(),
            second: Vec::new(),
            steps: 0,
        }
    }

    pub fn sgd(lr: f64) -> Self {
        Self::new(lr, OptimizerKind::Sgd { momentum: 0.0 })
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Apply one descent step. Gradients are checked for finiteness before
    /// anything is modified.
    pub fn step(&mut self, params: &mut [&mut DenseMatrix], grads: &[&DenseMatrix]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::Shape(format!(
                "{} parameter tensors, {} gradient tensors",
                params.len(),
                grads.len()
            )));
        }
        for (k, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() {
                return Err(Error::Shape(format!(
                    "tensor {k}: parameter {:?}, gradient {:?}",
                    p.shape(),
                    g.shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::Numeric(format!("gradient tensor {k} has non-finite entries")));
            }
        }
        if self.first.is_empty() {
            self.first = grads.iter().map(|g| vec![0.0; g.as_slice().len()]).collect();
            if matches!(self.kind, OptimizerKind::Adam { .. }) {
                self.second = self.first.clone();
            }
        } else if self.first.len() != grads.len()
            || self.first.iter().zip(grads).any(|(s, g)| s.len() != g.as_slice().len())
        {
            return Err(Error::Shape("optimizer state does not match parameter shapes".into()));
        }
        self.steps += 1;
        let lr = self.lr;
        match self.kind {
            OptimizerKind::Sgd { momentum } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut self.first) {
                    for ((pk, &gk), vk) in p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(v) {
                        *vk = momentum * *vk + gk;
                        *pk -= lr * *vk;
                    }
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                let t = self.steps as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                for (((p, g), m), s) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    for (((pk, &gk), mk), sk) in
                        p.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(s)
                    {
                        *mk = beta1 * *mk + (1.0 - beta1) * gk;
                        *sk = beta2 * *sk + (1.0 - beta2) * gk * gk;
                        *pk -= lr * (*mk / c1) / ((*sk / c2).sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
