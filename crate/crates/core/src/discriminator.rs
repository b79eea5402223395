//! Pair discriminator `D(i, j) = σ(d_i · d_j)` over its own node table.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::generator::clip_prob;
use crate::numkernel::{dot, sigmoid, DenseMatrix};
use crate::par::{self, Exec};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub table: DenseMatrix,
}

/// Sparse gradient with respect to the discriminator table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiscGrad {
    pub rows: BTreeMap<usize, Vec<f64>>,
}

impl DiscGrad {
    fn add_row(&mut self, node: usize, scale: f64, v: &[f64]) {
        let row = self.rows.entry(node).or_insert_with(|| vec![0.0; v.len()]);
        for (a, b) in row.iter_mut().zip(v) {
            *a += scale * b;
        }
    }

    fn merge(&mut self, other: DiscGrad) {
        for (node, v) in other.rows {
            self.add_row(node, 1.0, &v);
        }
    }

    pub fn dense(&self, n: usize, d: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, d);
        for (&node, row) in &self.rows {
            m.row_mut(node).copy_from_slice(row);
        }
        m
    }

    pub fn is_zero(&self) -> bool {
        self.rows.values().flatten().all(|&v| v == 0.0)
    }
}

impl DiscriminatorParams {
    pub fn new(table: DenseMatrix) -> Self {
        DiscriminatorParams { table }
    }

    /// Gaussian init. A zero table would have an identically zero gradient.
    pub fn init<R: Rng + ?Sized>(n: usize, d: usize, std: f64, rng: &mut R) -> Self {
        DiscriminatorParams {
            table: DenseMatrix::gaussian(n, d, std, rng),
        }
    }

    pub fn n(&self) -> usize {
        self.table.rows()
    }

    pub fn d(&self) -> usize {
        self.table.cols()
    }

    fn check(&self, i: usize, j: usize) -> Result<()> {
        for node in [i, j] {
            if node >= self.n() {
                return Err(Error::NodeOutOfBounds { node, n: self.n() });
            }
        }
        if i == j {
            return Err(Error::InvalidPair(i));
        }
        Ok(())
    }

    #[inline]
    fn logit(&self, i: usize, j: usize) -> f64 {
        dot(self.table.row(i), self.table.row(j))
    }

    /// `σ(d_i · d_j)`, unclipped.
    pub fn score(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i, j)?;
        Ok(sigmoid(self.logit(i, j)))
    }

    /// `log(1 − D(i, c))` with `D` clipped, the generator's reward.
    pub fn reward(&self, i: usize, c: usize) -> Result<f64> {
        Ok((1.0 - clip_prob(self.score(i, c)?)).ln())
    }

    /// Mean of `Σ log D(pos) + Σ log(1 − D(neg))` over all pairs, with `D`
    /// clipped before the log.
    pub fn objective(&self, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> Result<f64> {
        let total = pos.len() + neg.len();
        if total == 0 {
            return Err(Error::Argument("no pairs".into()));
        }
        let mut acc = 0.0;
        for &(i, j) in pos {
            acc += clip_prob(self.score(i, j)?).ln();
        }
        for &(i, c) in neg {
            acc += (1.0 - clip_prob(self.score(i, c)?)).ln();
        }
        Ok(acc / total as f64)
    }

    /// Gradient of [`objective`](Self::objective) (the ascent direction).
    pub fn discriminator_gradient(&self, pos: &[(usize, usize)], neg: &[(usize, usize)]) -> Result<DiscGrad> {
        self.discriminator_gradient_with(pos, neg, Exec::default())
    }

    pub fn discriminator_gradient_with(
        &self,
        pos: &[(usize, usize)],
        neg: &[(usize, usize)],
        exec: Exec,
    ) -> Result<DiscGrad> {
        let total = pos.len() + neg.len();
        if total == 0 {
            return Err(Error::Argument("no pairs".into()));
        }
        let items: Vec<(usize, usize, bool)> = pos
            .iter()
            .map(|&(i, j)| (i, j, true))
            .chain(neg.iter().map(|&(i, c)| (i, c, false)))
            .collect();
        let scale = 1.0 / total as f64;
        let parts = par::map_chunks(exec, &items, par::CHUNK, |chunk| {
            let mut g = DiscGrad::default();
            for &(i, j, positive) in chunk {
                self.check(i, j)?;
                let s = sigmoid(self.logit(i, j));
                if !s.is_finite() {
                    return Err(Error::Numeric(format!("score of ({i}, {j}) is {s}")));
                }
                // d log σ(z)/dz = 1 − σ, d log(1 − σ(z))/dz = −σ
                let w = if positive { 1.0 - s } else { -s } * scale;
                g.add_row(i, w, self.table.row(j));
                g.add_row(j, w, self.table.row(i));
            }
            Ok(g)
        });
        let mut total_grad = DiscGrad::default();
        for p in parts {
            total_grad.merge(p?);
        }
        Ok(total_grad)
    }
}
