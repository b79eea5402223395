//! Edge holdout and link prediction with Hadamard edge features.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use super::logistic::{fit_binary, FitOptions};
use super::metrics::{auc, average_precision, mean_std};
use crate::error::{Error, Result};
use crate::graph::MultiViewGraph;
use crate::numkernel::DenseMatrix;
use crate::par::{self, Exec};
use crate::rng::derive;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSplit {
    pub view: usize,
    pub kept: Vec<(usize, usize)>,
    /// Test positives.
    pub removed: Vec<(usize, usize)>,
    /// Test negatives, absent from every view.
    pub negatives: Vec<(usize, usize)>,
}

impl LinkSplit {
    /// The graph the embedding must be trained on: view `self.view` keeps
    /// only the retained edges.
    pub fn reduced_graph(&self, g: &MultiViewGraph) -> Result<MultiViewGraph> {
        g.with_view_edges(self.view, self.kept.clone())
    }
}

fn canonical(i: usize, j: usize) -> (usize, usize) {
    (i.min(j), i.max(j))
}

/// Draws `count` distinct unordered non-edges of `g` avoiding `exclude`.
fn sample_non_edges<R: Rng + ?Sized>(
    g: &MultiViewGraph,
    count: usize,
    exclude: &HashSet<(usize, usize)>,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>> {
    let n = g.n();
    let pairs = n * (n - 1) / 2;
    let blocked = g.union_edges().len() + exclude.iter().filter(|&&(i, j)| !g.adjacent(i, j)).count();
    if pairs < blocked + count {
        return Err(Error::Split(format!("graph has too few non-edges to draw {count}")));
    }
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let p = canonical(i, j);
        if g.adjacent(i, j) || exclude.contains(&p) || !seen.insert(p) {
            continue;
        }
        out.push(p);
    }
    Ok(out)
}

pub fn link_split<R: Rng + ?Sized>(g: &MultiViewGraph, view: usize, fraction: f64, rng: &mut R) -> Result<LinkSplit> {
    if view >= g.k() {
        return Err(Error::Argument(format!("view {view} out of range for {} views", g.k())));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Argument(format!("holdout fraction {fraction} outside (0, 1)")));
    }
    let edges = g.view_edges(view);
    if edges.len() < 2 {
        return Err(Error::Split(format!("view {view} has {} edges, need at least 2", edges.len())));
    }
    let remove = (fraction * edges.len() as f64).floor() as usize;
    if remove == 0 {
        return Err(Error::Split(format!("holdout {fraction} removes no edges from view {view}")));
    }
    let mut shuffled = edges.to_vec();
    shuffled.shuffle(rng);
    let mut removed = shuffled[..remove].to_vec();
    let mut kept = shuffled[remove..].to_vec();
    removed.sort_unstable();
    kept.sort_unstable();
    let negatives = sample_non_edges(g, remove, &HashSet::new(), rng)?;
    Ok(LinkSplit { view, kept, removed, negatives })
}

fn hadamard(x: &DenseMatrix, pairs: &[(usize, usize)]) -> DenseMatrix {
    let d = x.cols();
    let mut data = Vec::with_capacity(pairs.len() * d);
    for &(i, j) in pairs {
        data.extend(x.row(i).iter().zip(x.row(j)).map(|(a, b)| a * b));
    }
    DenseMatrix::from_vec(pairs.len(), d, data).expect("finite features")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpRun {
    pub seed: u64,
    pub auc: f64,
    pub ap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpReport {
    pub view: usize,
    pub runs: Vec<LpRun>,
    pub auc: (f64, f64),
    pub ap: (f64, f64),
}

/// `g` is the original graph: training negatives avoid every original edge
/// as well as the test negatives.
pub fn link_prediction_run(
    x: &DenseMatrix,
    g: &MultiViewGraph,
    split: &LinkSplit,
    seed: u64,
    opts: &FitOptions,
) -> Result<LpRun> {
    if x.rows() != g.n() {
        return Err(Error::Shape(format!("embedding has {} rows for {} nodes", x.rows(), g.n())));
    }
    if split.kept.is_empty() {
        return Err(Error::Split("no kept edges to train on".into()));
    }
    let mut rng = derive(seed, "lp-train-neg", split.view as u64);
    let exclude: HashSet<(usize, usize)> = split.negatives.iter().copied().collect();
    let train_neg = sample_non_edges(g, split.kept.len(), &exclude, &mut rng)?;
    let train_pairs: Vec<(usize, usize)> = split.kept.iter().chain(&train_neg).copied().collect();
    let ytrain: Vec<bool> = (0..train_pairs.len()).map(|i| i < split.kept.len()).collect();
    let model = fit_binary(&hadamard(x, &train_pairs), &ytrain, opts)?;

    let test_pairs: Vec<(usize, usize)> = split.removed.iter().chain(&split.negatives).copied().collect();
    let ytest: Vec<bool> = (0..test_pairs.len()).map(|i| i < split.removed.len()).collect();
    let feats = hadamard(x, &test_pairs);
    let scores: Vec<f64> = (0..feats.rows()).map(|r| model.decision(feats.row(r))).collect();
    Ok(LpRun {
        seed,
        auc: auc(&scores, &ytest)?,
        ap: average_precision(&scores, &ytest)?,
    })
}

pub fn summarize(view: usize, runs: Vec<LpRun>) -> LpReport {
    let a: Vec<f64> = runs.iter().map(|r| r.auc).collect();
    let p: Vec<f64> = runs.iter().map(|r| r.ap).collect();
    LpReport {
        view,
        auc: mean_std(&a),
        ap: mean_std(&p),
        runs,
    }
}

/// Scores one fixed split with several classifier seeds. The full protocol
/// (fresh split and retrained embedding per seed) is driven by the caller.
pub fn link_prediction(
    x: &DenseMatrix,
    g: &MultiViewGraph,
    split: &LinkSplit,
    seeds: &[u64],
    opts: &FitOptions,
    exec: Exec,
) -> Result<LpReport> {
    if seeds.is_empty() {
        return Err(Error::Argument("no seeds given".into()));
    }
    let runs = par::map(exec, seeds, |&s| link_prediction_run(x, g, split, s, opts))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(split.view, runs))
}
