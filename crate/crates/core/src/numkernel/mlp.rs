use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
    Identity,
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            "identity" => Ok(Activation::Identity),
            _ => Err(Error::Argument(format!("unknown activation {s:?}"))),
        }
    }
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Two affine layers with a hidden activation: `y = W2 act(W1 x + b1) + b2`.
/// Biases are stored as single-column matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub w1: DenseMatrix,
    pub b1: DenseMatrix,
    pub w2: DenseMatrix,
    pub b2: DenseMatrix,
    pub act: Activation,
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    pub input: Vec<f64>,
    pub pre: Vec<f64>,
    pub hidden: Vec<f64>,
}

impl MlpParams {
    pub fn new(
        w1: DenseMatrix,
        b1: DenseMatrix,
        w2: DenseMatrix,
        b2: DenseMatrix,
        act: Activation,
    ) -> Result<Self> {
        let p = MlpParams {
            w1,
            b1,
            w2,
            b2,
            act,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(input: usize, hidden: usize, output: usize, act: Activation) -> Self {
        MlpParams {
            w1: DenseMatrix::zeros(hidden, input),
            b1: DenseMatrix::zeros(hidden, 1),
            w2: DenseMatrix::zeros(output, hidden),
            b2: DenseMatrix::zeros(output, 1),
            act,
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(
        input: usize,
        hidden: usize,
        output: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        MlpParams {
            w1: DenseMatrix::glorot(hidden, input, rng),
            b1: DenseMatrix::zeros(hidden, 1),
            w2: DenseMatrix::glorot(output, hidden, rng),
            b2: DenseMatrix::zeros(output, 1),
            act,
        }
    }

    /// Zero-valued parameters with the same shapes, for gradient accumulation.
    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_width(), self.hidden_width(), self.output_width(), self.act)
    }

    pub fn input_width(&self) -> usize {
        self.w1.cols()
    }

    pub fn hidden_width(&self) -> usize {
        self.w1.rows()
    }

    pub fn output_width(&self) -> usize {
        self.w2.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let h = self.w1.rows();
        if self.b1.shape() != (h, 1) {
            return Err(Error::Shape(format!("b1 {:?}, expected ({h}, 1)", self.b1.shape())));
        }
        if self.w2.cols() != h {
            return Err(Error::Shape(format!(
                "layer-1 output width {h} != layer-2 input width {}",
                self.w2.cols()
            )));
        }
        if self.b2.shape() != (self.w2.rows(), 1) {
            return Err(Error::Shape(format!(
                "b2 {:?}, expected ({}, 1)",
                self.b2.shape(),
                self.w2.rows()
            )));
        }
        Ok(())
    }

    pub fn tensors(&self) -> [&DenseMatrix; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn tensors_mut(&mut self) -> [&mut DenseMatrix; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        if x.len() != self.input_width() {
            return Err(Error::Shape(format!(
                "mlp input width {}, expected {}",
                x.len(),
                self.input_width()
            )));
        }
        let h = self.hidden_width();
        let mut pre = Vec::with_capacity(h);
        for r in 0..h {
            pre.push(dot(self.w1.row(r), x) + self.b1.as_slice()[r]);
        }
        let hidden: Vec<f64> = pre.iter().map(|&z| self.act.apply(z)).collect();
        let y = self.output_from_hidden(&hidden);
        Ok((
            y,
            MlpCache {
                input: x.to_vec(),
                pre,
                hidden,
            },
        ))
    }

    /// Forward pass given an already computed layer-1 pre-activation.
    pub fn forward_from_pre(&self, pre: Vec<f64>, input: Vec<f64>) -> (Vec<f64>, MlpCache) {
        let hidden: Vec<f64> = pre.iter().map(|&z| self.act.apply(z)).collect();
        let y = self.output_from_hidden(&hidden);
        (y, MlpCache { input, pre, hidden })
    }

    fn output_from_hidden(&self, hidden: &[f64]) -> Vec<f64> {
        (0..self.output_width())
            .map(|r| dot(self.w2.row(r), hidden) + self.b2.as_slice()[r])
            .collect()
    }

    /// Gradients of `y · dy` with respect to the input and every parameter.
    pub fn backward(&self, cache: &MlpCache, dy: &[f64]) -> Result<(Vec<f64>, MlpParams)> {
        let mut grads = self.zeros_like();
        let dx = self.backward_into(cache, dy, 1.0, &mut grads)?;
        Ok((dx, grads))
    }

    /// Like [`backward`](Self::backward) but adds `scale ×` the parameter
    /// gradients into `acc`. The returned input gradient is unscaled.
    pub fn backward_into(
        &self,
        cache: &MlpCache,
        dy: &[f64],
        scale: f64,
        acc: &mut MlpParams,
    ) -> Result<Vec<f64>> {
        let (h, inp, out) = (self.hidden_width(), self.input_width(), self.output_width());
        if dy.len() != out
            || cache.input.len() != inp
            || cache.pre.len() != h
            || cache.hidden.len() != h
        {
            return Err(Error::Shape("mlp backward: cache or dy does not match parameters".into()));
        }
        if acc.w1.shape() != self.w1.shape() || acc.w2.shape() != self.w2.shape() {
            return Err(Error::Shape("mlp backward: accumulator shape mismatch".into()));
        }
        // dh = W2^T dy
        let mut dh = vec![0.0; h];
        for (r, &g) in dy.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let sg = scale * g;
            for (c, (&w, &a)) in self.w2.row(r).iter().zip(&cache.hidden).enumerate() {
                dh[c] += w * g;
                acc.w2.as_mut_slice()[r * h + c] += sg * a;
            }
            acc.b2.as_mut_slice()[r] += sg;
        }
        let dpre: Vec<f64> = dh
            .iter()
            .zip(cache.pre.iter().zip(&cache.hidden))
            .map(|(&g, (&z, &a))| g * self.act.derivative(z, a))
            .collect();
        let mut dx = vec![0.0; inp];
        for (r, &g) in dpre.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            let sg = scale * g;
            let wrow = self.w1.row(r);
            let arow = &mut acc.w1.as_mut_slice()[r * inp..(r + 1) * inp];
            for c in 0..inp {
                dx[c] += wrow[c] * g;
                arow[c] += sg * cache.input[c];
            }
            acc.b1.as_mut_slice()[r] += sg;
        }
        Ok(dx)
    }

    /// `self += alpha * other`
    pub fn add_scaled(&mut self, alpha: f64, other: &MlpParams) -> Result<()> {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            a.add_scaled(alpha, b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, alpha: f64) {
        self.tensors_mut().into_iter().for_each(|t| t.scale(alpha));
    }

    /// Flattened parameter vector in `w1, b1, w2, b2` order.
    pub fn flatten(&self) -> Vec<f64> {
        self.tensors().iter().flat_map(|t| t.as_slice().iter().copied()).collect()
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn unflatten_from(&mut self, theta: &[f64]) -> Result<()> {
        let total: usize = self.tensors().iter().map(|t| t.as_slice().len()).sum();
        if theta.len() != total {
            return Err(Error::Shape(format!("expected {total} parameters, got {}", theta.len())));
        }
        let mut off = 0;
        for t in self.tensors_mut() {
            let len = t.as_slice().len();
            t.as_mut_slice().copy_from_slice(&theta[off..off + len]);
            off += len;
        }
        Ok(())
    }
}
