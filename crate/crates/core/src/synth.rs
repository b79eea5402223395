//! Seeded stochastic-block-model generators with per-view informativeness
//! masks and tunable cross-view edge correlation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MultiViewGraph;
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub p_in: f64,
    pub p_out: f64,
    /// Per community: whether this view carries its intra-community density.
    /// Empty means every community.
    pub informative: Vec<bool>,
}

impl ViewSpec {
    pub fn uniform(p_in: f64, p_out: f64) -> Self {
        ViewSpec {
            p_in,
            p_out,
            informative: Vec::new(),
        }
    }

    fn is_informative(&self, community: usize) -> bool {
        self.informative.get(community).copied().unwrap_or(self.informative.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SbmSpec {
    pub n: usize,
    pub communities: usize,
    /// Community of each node.
    pub assignment: Vec<usize>,
    pub views: Vec<ViewSpec>,
    /// Probability that view `l > 0` reuses view 0's uniform draw for a pair.
    /// Per-view marginal edge probabilities are unchanged.
    pub correlation: f64,
    /// Extra preferential-attachment edges added to each view.
    pub pa_noise_edges: usize,
    pub seed: u64,
}

impl SbmSpec {
    /// Contiguous, equally sized blocks (`node * c / n`).
    pub fn blocks(n: usize, communities: usize) -> Vec<usize> {
        (0..n).map(|i| i * communities / n.max(1)).collect()
    }

    /// `k` views sharing the same `(p_in, p_out)` and every community.
    pub fn uniform(n: usize, communities: usize, k: usize, p_in: f64, p_out: f64, correlation: f64, seed: u64) -> Self {
        SbmSpec {
            n,
            communities,
            assignment: Self::blocks(n, communities),
            views: vec![ViewSpec::uniform(p_in, p_out); k],
            correlation,
            pa_noise_edges: 0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Argument(format!("n = {} is too small", self.n)));
        }
        if self.communities == 0 {
            return Err(Error::Argument("need at least one community".into()));
        }
        if self.assignment.len() != self.n {
            return Err(Error::Argument(format!(
                "assignment covers {} of {} nodes",
                self.assignment.len(),
                self.n
            )));
        }
        if let Some(&c) = self.assignment.iter().find(|&&c| c >= self.communities) {
            return Err(Error::Argument(format!("community {c} out of range")));
        }
        if self.views.is_empty() {
            return Err(Error::Argument("need at least one view".into()));
        }
        for (l, v) in self.views.iter().enumerate() {
            if !(0.0 <= v.p_out && v.p_out <= v.p_in && v.p_in <= 1.0) {
                return Err(Error::Argument(format!(
                    "view {l}: need 0 <= p_out <= p_in <= 1, got p_in={} p_out={}",
                    v.p_in, v.p_out
                )));
            }
            if !v.informative.is_empty() && v.informative.len() != self.communities {
                return Err(Error::Argument(format!("view {l}: mask length != community count")));
            }
        }
        if !(0.0..=1.0).contains(&self.correlation) {
            return Err(Error::Argument(format!("correlation {} not in [0, 1]", self.correlation)));
        }
        Ok(())
    }

    /// Edge probability of `(i, j)` in view `l`.
    pub fn edge_probability(&self, l: usize, i: usize, j: usize) -> f64 {
        let v = &self.views[l];
        let (ci, cj) = (self.assignment[i], self.assignment[j]);
        if ci == cj && v.is_informative(ci) {
            v.p_in
        } else {
            v.p_out
        }
    }
}

pub fn generate(spec: &SbmSpec) -> Result<MultiViewGraph> {
    spec.validate()?;
    let mut rng = rng::derive(spec.seed, "synth", 0);
    let k = spec.views.len();
    let mut views = vec![Vec::new(); k];
    let mut draws = vec![0.0f64; k];
    for i in 0..spec.n {
        for j in i + 1..spec.n {
            let shared: f64 = rng.random();
            for (l, d) in draws.iter_mut().enumerate() {
                let own: f64 = rng.random();
                let reuse = l == 0 || rng.random::<f64>() < spec.correlation;
                *d = if reuse { shared } else { own };
            }
            for (l, edges) in views.iter_mut().enumerate() {
                if draws[l] < spec.edge_probability(l, i, j) {
                    edges.push((i, j));
                }
            }
        }
    }
    if spec.pa_noise_edges > 0 {
        let mut noise = rng::derive(spec.seed, "synth-pa", 0);
        for edges in views.iter_mut() {
            add_preferential_noise(spec.n, edges, spec.pa_noise_edges, &mut noise);
        }
    }
    let labels = spec.assignment.iter().map(|&c| Some(c as u32)).collect();
    MultiViewGraph::new(spec.n, views, Some(labels))
}

/// Append `extra` edges whose second endpoint is drawn with probability
/// proportional to `degree + 1`.
fn add_preferential_noise<R: Rng + ?Sized>(n: usize, edges: &mut Vec<(usize, usize)>, extra: usize, rng: &mut R) {
    let mut urn: Vec<usize> = (0..n).collect();
    for &(a, b) in edges.iter() {
        urn.push(a);
        urn.push(b);
    }
    let mut present: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
    let mut added = 0;
    let mut attempts = 0;
    while added < extra && attempts < extra * 50 {
        attempts += 1;
        let a = rng.random_range(0..n);
        let b = urn[rng.random_range(0..urn.len())];
        let e = (a.min(b), a.max(b));
        if a == b || !present.insert(e) {
            continue;
        }
        edges.push(e);
        urn.push(a);
        urn.push(b);
        added += 1;
    }
}

pub const COMPLEMENTARY_P_IN: f64 = 0.3;
pub const COMPLEMENTARY_P_OUT: f64 = 0.02;

pub fn complementary_spec(n: usize, seed: u64) -> Result<SbmSpec> {
    if n < 120 || !n.is_multiple_of(4) {
        return Err(Error::Argument(format!("complementary preset needs n >= 120 divisible by 4, got {n}")));
    }
    let view = |mask: [bool; 4]| ViewSpec {
        p_in: COMPLEMENTARY_P_IN,
        p_out: COMPLEMENTARY_P_OUT,
        informative: mask.to_vec(),
    };
    Ok(SbmSpec {
        n,
        communities: 4,
        assignment: SbmSpec::blocks(n, 4),
        views: vec![view([true, true, false, false]), view([false, false, true, true])],
        correlation: 0.0,
        pa_noise_edges: 0,
        seed,
    })
}

/// Four planted communities over two views: view 0 only carries communities
/// {0, 1}, view 1 only {2, 3}. Neither view alone separates all four.
pub fn complementary_preset(n: usize, seed: u64) -> Result<MultiViewGraph> {
    generate(&complementary_spec(n, seed)?)
}
