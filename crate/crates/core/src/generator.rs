//! Multi-view generator.
//!
//! A pair `(i, j)` is fused by a two-layer perceptron over the concatenated
//! embedding rows `[X_i ; X_j]`; `k` per-view heads map the fused vector to
//! edge logits. Views are conditionally independent given the fused
//! representation, so the probability of a connectivity pattern is the
//! product of per-view Bernoulli terms.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConnectivityPattern, MultiViewGraph, NeighborIndex};
use crate::numkernel::{dot, sigmoid, Activation, DenseMatrix, MlpCache, MlpParams};
use crate::par::{self, Exec};
use crate::rng;

/// Probabilities are clipped to `[EPS, 1 − EPS]` wherever a log is taken.
pub const EPS: f64 = 1e-7;

#[inline]
pub fn clip_prob(p: f64) -> f64 {
    p.clamp(EPS, 1.0 - EPS)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    /// Highest joint probability, lowest node id on ties.
    #[default]
    Greedy,
    /// Sample proportionally to joint probability.
    Proportional,
}

impl std::str::FromStr for SelectMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(SelectMode::Greedy),
            "proportional" => Ok(SelectMode::Proportional),
            _ => Err(Error::Argument(format!("unknown selection mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    /// Node embedding, one row per node.
    pub x: DenseMatrix,
    /// `2d → hidden → fused`
    pub fuse: MlpParams,
    /// One `fused → hidden → 1` head per view.
    pub heads: Vec<MlpParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedRep {
    pub values: Vec<f64>,
    pub i: usize,
    pub j: usize,
}

/// One policy-gradient term: `reward · ∇ log G(pattern | i, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GenItem {
    pub i: usize,
    pub c: usize,
    pub pattern: ConnectivityPattern,
    pub reward: f64,
}

/// Gradient with respect to every generator parameter. Embedding rows are
/// stored sparsely since a batch touches few of them.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorGrad {
    pub x_rows: BTreeMap<usize, Vec<f64>>,
    pub fuse: MlpParams,
    pub heads: Vec<MlpParams>,
}

struct PairForward {
    fuse_cache: MlpCache,
    head_caches: Vec<MlpCache>,
    logits: Vec<f64>,
}

impl GeneratorParams {
    pub fn new(x: DenseMatrix, fuse: MlpParams, heads: Vec<MlpParams>) -> Result<Self> {
        let p = GeneratorParams { x, fuse, heads };
        p.validate()?;
        Ok(p)
    }

    /// Glorot-initialized perceptrons and a Gaussian embedding.
    #[allow(clippy::too_many_arguments)]
    pub fn init<R: Rng + ?Sized>(
        n: usize,
        d: usize,
        k: usize,
        hidden: usize,
        fused: usize,
        x_std: f64,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let x = DenseMatrix::gaussian(n, d, x_std, rng);
        let fuse = MlpParams::init(2 * d, hidden, fused, act, rng);
        let heads = (0..k)
            .map(|_| MlpParams::init(fused, hidden, 1, act, rng))
            .collect();
        GeneratorParams { x, fuse, heads }
    }

    pub fn validate(&self) -> Result<()> {
        self.fuse.validate()?;
        if self.fuse.input_width() != 2 * self.x.cols() {
            return Err(Error::Shape(format!(
                "fuse input width {} != 2 × embedding width {}",
                self.fuse.input_width(),
                self.x.cols()
            )));
        }
        if self.heads.is_empty() {
            return Err(Error::Shape("generator needs at least one view head".into()));
        }
        for (l, h) in self.heads.iter().enumerate() {
            h.validate()?;
            if h.input_width() != self.fuse.output_width() || h.output_width() != 1 {
                return Err(Error::Shape(format!(
                    "head {l} maps {} → {}, expected {} → 1",
                    h.input_width(),
                    h.output_width(),
                    self.fuse.output_width()
                )));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }

    pub fn k(&self) -> usize {
        self.heads.len()
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            Err(Error::NodeOutOfBounds { node: i, n: self.n() })
        } else {
            Ok(())
        }
    }

    fn pair_input(&self, i: usize, j: usize) -> Vec<f64> {
        let mut input = Vec::with_capacity(2 * self.d());
        input.extend_from_slice(self.x.row(i));
        input.extend_from_slice(self.x.row(j));
        input
    }

    pub fn fuse(&self, i: usize, j: usize) -> Result<FusedRep> {
        self.check_node(i)?;
        self.check_node(j)?;
        let (values, _) = self.fuse.forward(&self.pair_input(i, j))?;
        Ok(FusedRep { values, i, j })
    }

    /// Per-view edge probabilities, clipped to `[EPS, 1 − EPS]`.
    pub fn view_probs(&self, f: &FusedRep) -> Result<Vec<f64>> {
        self.heads
            .iter()
            .map(|h| Ok(clip_prob(sigmoid(h.forward(&f.values)?.0[0]))))
            .collect()
    }

    pub fn joint_prob(&self, i: usize, j: usize, pattern: &ConnectivityPattern) -> Result<f64> {
        self.check_pattern(pattern)?;
        let probs = self.view_probs(&self.fuse(i, j)?)?;
        Ok(pattern_prob(&probs, pattern))
    }

    pub fn log_joint_prob(&self, i: usize, j: usize, pattern: &ConnectivityPattern) -> Result<f64> {
        self.check_pattern(pattern)?;
        let probs = self.view_probs(&self.fuse(i, j)?)?;
        Ok(probs
            .iter()
            .zip(&pattern.bits)
            .map(|(&p, &b)| if b { p.ln() } else { (1.0 - p).ln() })
            .sum())
    }

    fn check_pattern(&self, pattern: &ConnectivityPattern) -> Result<()> {
        if pattern.len() != self.k() {
            return Err(Error::Shape(format!(
                "pattern of length {} for a {}-view generator",
                pattern.len(),
                self.k()
            )));
        }
        Ok(())
    }

    fn forward_pair(&self, i: usize, j: usize) -> Result<PairForward> {
        let (fused, fuse_cache) = self.fuse.forward(&self.pair_input(i, j))?;
        let mut head_caches = Vec::with_capacity(self.k());
        let mut logits = Vec::with_capacity(self.k());
        for h in &self.heads {
            let (z, cache) = h.forward(&fused)?;
            logits.push(z[0]);
            head_caches.push(cache);
        }
        Ok(PairForward {
            fuse_cache,
            head_caches,
            logits,
        })
    }

    /// Scorer for many candidates `c` against a fixed anchor `i`; the
    /// anchor's half of the fuse layer is computed once.
    pub fn anchor_scorer(&self, i: usize) -> Result<AnchorScorer<'_>> {
        self.check_node(i)?;
        let d = self.d();
        let w1 = &self.fuse.w1;
        let left = (0..w1.rows())
            .map(|r| dot(&w1.row(r)[..d], self.x.row(i)) + self.fuse.b1.as_slice()[r])
            .collect();
        Ok(AnchorScorer { params: self, left })
    }

    pub fn zero_grad(&self) -> GeneratorGrad {
        GeneratorGrad {
            x_rows: BTreeMap::new(),
            fuse: self.fuse.zeros_like(),
            heads: self.heads.iter().map(MlpParams::zeros_like).collect(),
        }
    }

    /// Adds `weight · ∇ log G(pattern | i, c)` into `acc`.
    fn accumulate_log_grad(
        &self,
        i: usize,
        c: usize,
        pattern: &ConnectivityPattern,
        weight: f64,
        acc: &mut GeneratorGrad,
    ) -> Result<()> {
        let fwd = self.forward_pair(i, c)?;
        let mut dfused = vec![0.0; self.fuse.output_width()];
        for (l, (head, cache)) in self.heads.iter().zip(&fwd.head_caches).enumerate() {
            let s = sigmoid(fwd.logits[l]);
            // d/dz of log of the clipped Bernoulli term; zero where clipped
            let dz = if !(EPS..=1.0 - EPS).contains(&s) {
                0.0
            } else if pattern.bits[l] {
                1.0 - s
            } else {
                -s
            };
            let df = head.backward_into(cache, &[weight * dz], 1.0, &mut acc.heads[l])?;
            for (a, b) in dfused.iter_mut().zip(df) {
                *a += b;
            }
        }
        let dx = self.fuse.backward_into(&fwd.fuse_cache, &dfused, 1.0, &mut acc.fuse)?;
        let d = self.d();
        for (node, part) in [(i, &dx[..d]), (c, &dx[d..])] {
            let row = acc.x_rows.entry(node).or_insert_with(|| vec![0.0; d]);
            for (a, b) in row.iter_mut().zip(part) {
                *a += b;
            }
        }
        Ok(())
    }

    /// Mean over the batch of `reward · ∇ log G(pattern | i, c)`.
    pub fn generator_gradient(&self, batch: &[GenItem]) -> Result<GeneratorGrad> {
        self.generator_gradient_with(batch, Exec::default())
    }

    pub fn generator_gradient_with(&self, batch: &[GenItem], exec: Exec) -> Result<GeneratorGrad> {
        if batch.is_empty() {
            return Ok(self.zero_grad());
        }
        for item in batch {
            if !item.reward.is_finite() {
                return Err(Error::Numeric(format!(
                    "reward {} for pair ({}, {})",
                    item.reward, item.i, item.c
                )));
            }
            self.check_node(item.i)?;
            self.check_node(item.c)?;
            self.check_pattern(&item.pattern)?;
        }
        let scale = 1.0 / batch.len() as f64;
        let partials = par::map_chunks(exec, batch, par::CHUNK, |chunk| {
            let mut acc = self.zero_grad();
            for item in chunk {
                if item.reward != 0.0 {
                    self.accumulate_log_grad(item.i, item.c, &item.pattern, item.reward * scale, &mut acc)?;
                }
            }
            Ok(acc)
        });
        let mut total = self.zero_grad();
        for part in partials {
            total.add(&part?)?;
        }
        Ok(total)
    }

    /// Named tensors in a fixed order (checkpoints and optimizer state).
    pub fn named_tensors(&self) -> Vec<(String, &DenseMatrix)> {
        let mut out = vec![("gen.x".to_string(), &self.x)];
        push_mlp(&mut out, "gen.fuse", &self.fuse);
        for (l, h) in self.heads.iter().enumerate() {
            push_mlp(&mut out, &format!("gen.head{l}"), h);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut DenseMatrix> {
        let mut out = vec![&mut self.x];
        out.extend(self.fuse.tensors_mut());
        for h in &mut self.heads {
            out.extend(h.tensors_mut());
        }
        out
    }

    /// Rebuild from named tensors produced by [`named_tensors`](Self::named_tensors).
    pub fn from_named(tensors: &BTreeMap<String, DenseMatrix>, act: Activation) -> Result<Self> {
        let get = |name: &str| {
            tensors
                .get(name)
                .cloned()
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))
        };
        let mlp = |prefix: &str| -> Result<MlpParams> {
            MlpParams::new(
                get(&format!("{prefix}.w1"))?,
                get(&format!("{prefix}.b1"))?,
                get(&format!("{prefix}.w2"))?,
                get(&format!("{prefix}.b2"))?,
                act,
            )
        };
        let mut heads = Vec::new();
        while tensors.contains_key(&format!("gen.head{}.w1", heads.len())) {
            heads.push(mlp(&format!("gen.head{}", heads.len()))?);
        }
        GeneratorParams::new(get("gen.x")?, mlp("gen.fuse")?, heads)
    }
}

fn push_mlp<'a>(out: &mut Vec<(String, &'a DenseMatrix)>, prefix: &str, p: &'a MlpParams) {
    for (name, t) in ["w1", "b1", "w2", "b2"].iter().zip(p.tensors()) {
        out.push((format!("{prefix}.{name}"), t));
    }
}

/// `∏_l (p_l if bit_l else 1 − p_l)`
pub fn pattern_prob(probs: &[f64], pattern: &ConnectivityPattern) -> f64 {
    probs
        .iter()
        .zip(&pattern.bits)
        .map(|(&p, &b)| if b { p } else { 1.0 - p })
        .product()
}

impl GeneratorGrad {
    pub fn add(&mut self, other: &GeneratorGrad) -> Result<()> {
        self.fuse.add_scaled(1.0, &other.fuse)?;
        for (a, b) in self.heads.iter_mut().zip(&other.heads) {
            a.add_scaled(1.0, b)?;
        }
        for (&node, row) in &other.x_rows {
            let dst = self.x_rows.entry(node).or_insert_with(|| vec![0.0; row.len()]);
            for (a, b) in dst.iter_mut().zip(row) {
                *a += b;
            }
        }
        Ok(())
    }

    pub fn dense_x(&self, n: usize, d: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, d);
        for (&node, row) in &self.x_rows {
            m.row_mut(node).copy_from_slice(row);
        }
        m
    }

    /// Dense tensors in the same order as [`GeneratorParams::tensors_mut`].
    pub fn dense_tensors(&self, n: usize, d: usize) -> Vec<DenseMatrix> {
        let mut out = vec![self.dense_x(n, d)];
        out.extend(self.fuse.tensors().into_iter().cloned());
        for h in &self.heads {
            out.extend(h.tensors().into_iter().cloned());
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.x_rows.values().flatten().all(|&v| v == 0.0)
            && self.fuse.flatten().iter().all(|&v| v == 0.0)
            && self.heads.iter().all(|h| h.flatten().iter().all(|&v| v == 0.0))
    }
}

pub struct AnchorScorer<'a> {
    params: &'a GeneratorParams,
    left: Vec<f64>,
}

impl AnchorScorer<'_> {
    /// Clipped per-view probabilities for the pair `(anchor, c)`.
    pub fn view_probs(&self, c: usize) -> Result<Vec<f64>> {
        let p = self.params;
        p.check_node(c)?;
        let d = p.d();
        let w1 = &p.fuse.w1;
        let xc = p.x.row(c);
        let pre: Vec<f64> = (0..w1.rows())
            .map(|r| self.left[r] + dot(&w1.row(r)[d..], xc))
            .collect();
        let (fused, _) = p.fuse.forward_from_pre(pre, Vec::new());
        p.heads
            .iter()
            .map(|h| Ok(clip_prob(sigmoid(h.forward(&fused)?.0[0]))))
            .collect()
    }

    pub fn joint_prob(&self, c: usize, pattern: &ConnectivityPattern) -> Result<f64> {
        Ok(pattern_prob(&self.view_probs(c)?, pattern))
    }
}

/// Candidate set for a positive pair `(i, j)`: union neighbors of `i`
/// excluding `i` and `j`.
pub fn candidates(idx: &NeighborIndex, i: usize, j: usize) -> Vec<usize> {
    idx.neighbors(i).iter().copied().filter(|&c| c != i && c != j).collect()
}

/// Choose the negative node `c` for the positive pair `(i, j)`.
///
/// The target pattern is the positive pair's connectivity `K_ij`, scored
/// for the pair `(i, c)`. Candidates are restricted to `N(i) \ {i, j}`; if
/// that set is empty a uniformly random node other than `i`, `j` is used.
pub fn select_negative<R: Rng + ?Sized>(
    p: &GeneratorParams,
    g: &MultiViewGraph,
    idx: &NeighborIndex,
    i: usize,
    j: usize,
    mode: SelectMode,
    rng: &mut R,
) -> Result<usize> {
    let n = g.n();
    if n < 3 {
        return Err(Error::CannotSample(format!("graph has only {n} nodes")));
    }
    let pattern = g.connectivity(i, j)?;
    if !pattern.any() {
        return Err(Error::Argument(format!("({i}, {j}) is not a positive pair")));
    }
    let cands = candidates(idx, i, j);
    if cands.is_empty() {
        let (lo, hi) = (i.min(j), i.max(j));
        let mut c = rng.random_range(0..n - 2);
        if c >= lo {
            c += 1;
        }
        if c >= hi {
            c += 1;
        }
        return Ok(c);
    }
    let scorer = p.anchor_scorer(i)?;
    match mode {
        SelectMode::Greedy => {
            let mut best = cands[0];
            let mut best_p = scorer.joint_prob(best, &pattern)?;
            for &c in &cands[1..] {
                let q = scorer.joint_prob(c, &pattern)?;
                if q > best_p {
                    best = c;
                    best_p = q;
                }
            }
            Ok(best)
        }
        SelectMode::Proportional => {
            let weights = cands
                .iter()
                .map(|&c| scorer.joint_prob(c, &pattern))
                .collect::<Result<Vec<f64>>>()?;
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (&c, &w) in cands.iter().zip(&weights) {
                if u < w {
                    return Ok(c);
                }
                u -= w;
            }
            Ok(*cands.last().expect("non-empty"))
        }
    }
}

/// Select one negative per positive pair. Request `r` uses a random stream
/// derived from `(seed, r)`, so results do not depend on scheduling.
#[allow(clippy::too_many_arguments)]
pub fn select_negatives(
    p: &GeneratorParams,
    g: &MultiViewGraph,
    idx: &NeighborIndex,
    pairs: &[(usize, usize)],
    mode: SelectMode,
    seed: u64,
    exec: Exec,
) -> Result<Vec<usize>> {
    let indexed: Vec<(usize, (usize, usize))> = pairs.iter().copied().enumerate().collect();
    par::map(exec, &indexed, |&(r, (i, j))| {
        let mut rng = rng::derive(seed, "select", r as u64);
        select_negative(p, g, idx, i, j, mode, &mut rng)
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkernel::grad_check;
    use crate::rng::seeded;

    fn params(seed: u64, n: usize, d: usize, k: usize) -> GeneratorParams {
        let mut rng = seeded(seed);
        let mut p = GeneratorParams::init(n, d, k, d, d, 0.5, Activation::Tanh, &mut rng);
        for t in p.tensors_mut() {
            if t.cols() == 1 {
                for v in t.as_mut_slice() {
                    *v = rng.random_range(-0.3..0.3);
                }
            }
        }
        p
    }

    /// Hand-written evaluation of the generator for one pair.
    fn oracle_probs(p: &GeneratorParams, i: usize, j: usize) -> Vec<f64> {
        let d = p.d();
        let mut input = vec![0.0; 2 * d];
        for c in 0..d {
            input[c] = p.x.get(i, c);
            input[d + c] = p.x.get(j, c);
        }
        let mlp = |m: &MlpParams, v: &[f64]| -> Vec<f64> {
            let h: Vec<f64> = (0..m.w1.rows())
                .map(|r| {
                    let mut z = m.b1.get(r, 0);
                    for c in 0..v.len() {
                        z += m.w1.get(r, c) * v[c];
                    }
                    z.tanh()
                })
                .collect();
            (0..m.w2.rows())
                .map(|r| {
                    let mut z = m.b2.get(r, 0);
                    for c in 0..h.len() {
                        z += m.w2.get(r, c) * h[c];
                    }
                    z
                })
                .collect()
        };
        let fused = mlp(&p.fuse, &input);
        p.heads
            .iter()
            .map(|h| {
                let z = mlp(h, &fused)[0];
                (1.0 / (1.0 + (-z).exp())).clamp(EPS, 1.0 - EPS)
            })
            .collect()
    }

    #[test]
    fn zero_fuse_gives_zero_representation() {
        let mut p = params(1, 5, 3, 2);
        p.fuse = MlpParams::zeros(6, 3, 3, Activation::Tanh);
        assert!(p.fuse(0, 4).unwrap().values.iter().all(|&v| v == 0.0));
        let mut q = params(2, 5, 3, 2);
        q.fuse.b1.fill(0.0);
        q.fuse.b2.fill(0.0);
        q.x.row_mut(1).fill(0.0);
        q.x.row_mut(2).fill(0.0);
        assert!(q.fuse(1, 2).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(matches!(q.fuse(0, 5), Err(Error::NodeOutOfBounds { .. })));
    }

    #[test]
    fn fuse_and_view_probs_match_oracle() {
        for seed in 0..10 {
            let p = params(seed, 8, 4, 3);
            let probs = p.view_probs(&p.fuse(2, 6).unwrap()).unwrap();
            let oracle = oracle_probs(&p, 2, 6);
            for (a, b) in probs.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_heads_give_half() {
        let mut p = params(3, 4, 3, 3);
        for h in &mut p.heads {
            *h = MlpParams::zeros(3, 3, 1, Activation::Tanh);
        }
        assert_eq!(p.view_probs(&p.fuse(0, 1).unwrap()).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn unit_logit_gives_analytic_sigmoid() {
        let mut p = params(3, 4, 3, 1);
        p.heads[0] = MlpParams::zeros(3, 3, 1, Activation::Tanh);
        p.heads[0].b2.set(0, 0, 1.0);
        let q = p.view_probs(&p.fuse(0, 1).unwrap()).unwrap()[0];
        assert!((q - std::f64::consts::E / (1.0 + std::f64::consts::E)).abs() < 1e-15);
        assert!((q - 0.731_058_6).abs() < 1e-7);
    }

    #[test]
    fn pattern_product_arithmetic() {
        let probs = [0.8, 0.3];
        let pp = |b: &[u8]| pattern_prob(&probs, &ConnectivityPattern::from_bits(b));
        assert!((pp(&[1, 1]) - 0.24).abs() < 1e-15);
        assert!((pp(&[1, 0]) - 0.56).abs() < 1e-15);
        assert!((pp(&[0, 0]) - 0.14).abs() < 1e-15);
        assert_eq!(pattern_prob(&[0.8], &ConnectivityPattern::from_bits(&[1])), 0.8);
    }

    #[test]
    fn joint_prob_normalizes_over_patterns() {
        for k in 1..=6 {
            let p = params(k as u64, 6, 4, k);
            let total: f64 = (0..1u64 << k)
                .map(|code| p.joint_prob(1, 4, &ConnectivityPattern::from_code(code, k)).unwrap())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "k={k}: {total}");
        }
        let p = params(0, 6, 4, 2);
        assert!(matches!(p.joint_prob(0, 1, &ConnectivityPattern::zeros(3)), Err(Error::Shape(_))));
    }

    #[test]
    fn anchor_scorer_agrees_with_full_forward() {
        let p = params(4, 10, 5, 3);
        let s = p.anchor_scorer(3).unwrap();
        for c in 0..10 {
            let a = s.view_probs(c).unwrap();
            let b = oracle_probs(&p, 3, c);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13);
            }
        }
    }

    fn star_graph() -> MultiViewGraph {
        // node 0 linked to 5 in view 0; 0–1 positive pair in both views
        MultiViewGraph::new(10, vec![vec![(0, 1), (0, 5)], vec![(0, 1), (3, 4)]], None).unwrap()
    }

    #[test]
    fn singleton_candidate_is_chosen() {
        let g = star_graph();
        let p = params(5, 10, 3, 2);
        let idx = g.neighbor_union();
        let c = select_negative(&p, &g, &idx, 0, 1, SelectMode::Greedy, &mut seeded(0)).unwrap();
        assert_eq!(c, 5);
    }

    #[test]
    fn greedy_matches_exhaustive_argmax() {
        let g = MultiViewGraph::new(
            12,
            vec![vec![(0, 1), (0, 2), (0, 7)], vec![(0, 1), (0, 9), (0, 2)]],
            None,
        )
        .unwrap();
        let idx = g.neighbor_union();
        for seed in 0..20 {
            let p = params(seed, 12, 4, 2);
            let pattern = g.connectivity(0, 1).unwrap();
            let mut best = (usize::MAX, f64::NEG_INFINITY);
            for c in [2, 7, 9] {
                let q = pattern_prob(&oracle_probs(&p, 0, c), &pattern);
                if q > best.1 {
                    best = (c, q);
                }
            }
            let got = select_negative(&p, &g, &idx, 0, 1, SelectMode::Greedy, &mut seeded(1)).unwrap();
            assert_eq!(got, best.0);
        }
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let g = MultiViewGraph::new(6, vec![vec![(0, 1), (0, 3), (0, 4)]], None).unwrap();
        let mut p = params(6, 6, 3, 1);
        let row = p.x.row(3).to_vec();
        p.x.row_mut(4).copy_from_slice(&row);
        let idx = g.neighbor_union();
        let s = p.anchor_scorer(0).unwrap();
        let pat = ConnectivityPattern::from_bits(&[1]);
        assert_eq!(s.joint_prob(3, &pat).unwrap().to_bits(), s.joint_prob(4, &pat).unwrap().to_bits());
        let c = select_negative(&p, &g, &idx, 0, 1, SelectMode::Greedy, &mut seeded(0)).unwrap();
        assert_eq!(c, 3);
    }

    #[test]
    fn empty_candidates_fall_back_to_uniform() {
        let g = MultiViewGraph::new(5, vec![vec![(0, 1)]], None).unwrap();
        let idx = g.neighbor_union();
        let p = params(7, 5, 3, 1);
        let mut rng = seeded(3);
        let mut seen = [false; 5];
        for _ in 0..200 {
            let c = select_negative(&p, &g, &idx, 0, 1, SelectMode::Greedy, &mut rng).unwrap();
            assert!(c != 0 && c != 1);
            seen[c] = true;
        }
        assert_eq!(seen, [false, false, true, true, true]);
    }

    #[test]
    fn tiny_graph_cannot_sample() {
        let g = MultiViewGraph::new(2, vec![vec![(0, 1)]], None).unwrap();
        let p = params(0, 2, 3, 1);
        let r = select_negative(&p, &g, &g.neighbor_union(), 0, 1, SelectMode::Greedy, &mut seeded(0));
        assert!(matches!(r, Err(Error::CannotSample(_))));
    }

    #[test]
    fn proportional_sampling_follows_joint_probabilities() {
        let g = MultiViewGraph::new(6, vec![vec![(0, 1), (0, 2), (0, 3)]], None).unwrap();
        let idx = g.neighbor_union();
        let p = params(8, 6, 3, 1);
        let pat = g.connectivity(0, 1).unwrap();
        let w2 = p.joint_prob(0, 2, &pat).unwrap();
        let w3 = p.joint_prob(0, 3, &pat).unwrap();
        let expected = w2 / (w2 + w3);
        let mut rng = seeded(10);
        let draws = 20_000;
        let hits = (0..draws)
            .filter(|_| select_negative(&p, &g, &idx, 0, 1, SelectMode::Proportional, &mut rng).unwrap() == 2)
            .count();
        let freq = hits as f64 / draws as f64;
        assert!((freq - expected).abs() < 0.015, "{freq} vs {expected}");
    }

    fn flatten_all(p: &GeneratorParams) -> Vec<f64> {
        p.named_tensors().iter().flat_map(|(_, t)| t.as_slice().to_vec()).collect()
    }

    fn unflatten_all(p: &mut GeneratorParams, theta: &[f64]) {
        let mut off = 0;
        for t in p.tensors_mut() {
            let len = t.as_slice().len();
            t.as_mut_slice().copy_from_slice(&theta[off..off + len]);
            off += len;
        }
    }

    fn flat_grad(g: &GeneratorGrad, n: usize, d: usize) -> Vec<f64> {
        g.dense_tensors(n, d).iter().flat_map(|t| t.as_slice().to_vec()).collect()
    }

    #[test]
    fn log_prob_gradient_matches_finite_differences() {
        for seed in 0..10 {
            let base = params(seed, 6, 3, 3);
            let pattern = ConnectivityPattern::from_bits(&[1, 0, 1]);
            let item = GenItem { i: 1, c: 4, pattern: pattern.clone(), reward: 1.0 };
            let f = |th: &[f64]| {
                let mut p = base.clone();
                unflatten_all(&mut p, th);
                p.log_joint_prob(1, 4, &pattern).unwrap()
            };
            let g = |th: &[f64]| {
                let mut p = base.clone();
                unflatten_all(&mut p, th);
                flat_grad(&p.generator_gradient(std::slice::from_ref(&item)).unwrap(), 6, 3)
            };
            let err = grad_check(f, g, &flatten_all(&base)).unwrap();
            assert!(err <= 1e-4, "seed {seed}: {err}");
        }
    }

    #[test]
    fn zero_reward_gives_zero_gradient() {
        let p = params(1, 6, 3, 2);
        let batch: Vec<GenItem> = (0..5)
            .map(|c| GenItem { i: 0, c: c + 1, pattern: ConnectivityPattern::from_bits(&[1, 0]), reward: 0.0 })
            .collect();
        assert!(p.generator_gradient(&batch).unwrap().is_zero());
    }

    #[test]
    fn duplicate_items_equal_single_item_under_mean() {
        let p = params(2, 6, 3, 2);
        let item = GenItem { i: 2, c: 5, pattern: ConnectivityPattern::from_bits(&[0, 1]), reward: -0.7 };
        let one = flat_grad(&p.generator_gradient(std::slice::from_ref(&item)).unwrap(), 6, 3);
        let two = flat_grad(&p.generator_gradient(&[item.clone(), item]).unwrap(), 6, 3);
        for (a, b) in one.iter().zip(&two) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn non_finite_reward_rejected() {
        let p = params(2, 6, 3, 2);
        let item = GenItem { i: 2, c: 5, pattern: ConnectivityPattern::from_bits(&[0, 1]), reward: f64::NEG_INFINITY };
        assert!(matches!(p.generator_gradient(&[item]), Err(Error::Numeric(_))));
    }

    #[test]
    fn sequential_and_parallel_gradients_are_bitwise_equal() {
        let p = params(3, 30, 4, 2);
        let mut rng = seeded(4);
        let batch: Vec<GenItem> = (0..70)
            .map(|_| {
                let i = rng.random_range(0..30);
                let c = (i + 1 + rng.random_range(0..29)) % 30;
                GenItem {
                    i,
                    c,
                    pattern: ConnectivityPattern::from_code(rng.random_range(0..4), 2),
                    reward: rng.random_range(-3.0..0.0),
                }
            })
            .collect();
        let a = flat_grad(&p.generator_gradient_with(&batch, Exec::Sequential).unwrap(), 30, 4);
        let b = flat_grad(&p.generator_gradient_with(&batch, Exec::Parallel).unwrap(), 30, 4);
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }
}
