//! Multi-view graph model: `n` dense node ids shared by `k` undirected edge
//! sets ("views"), optional single labels per node, and the union
//! neighborhood index used to restrict negative sampling.

mod io;

pub use io::{load_graph, load_graph_with_ids, read_labels, save_graph, write_edges, write_labels};

use rand::Rng;

use crate::error::{Error, Result};

/// Length-`k` edge indicator vector of a node pair across all views.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConnectivityPattern {
    pub bits: Vec<bool>,
}

impl ConnectivityPattern {
    pub fn new(bits: Vec<bool>) -> Self {
        ConnectivityPattern { bits }
    }

    pub fn zeros(k: usize) -> Self {
        ConnectivityPattern { bits: vec![false; k] }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        ConnectivityPattern {
            bits: bits.iter().map(|&b| b != 0).collect(),
        }
    }

    /// The pattern whose bit `l` is bit `l` of `code`.
    pub fn from_code(code: u64, k: usize) -> Self {
        ConnectivityPattern {
            bits: (0..k).map(|l| (code >> l) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }
}

/// Sorted union neighborhoods: `j ∈ N(i)` iff `(i, j)` is an edge in at least
/// one view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborIndex {
    adj: Vec<Vec<usize>>,
}

impl NeighborIndex {
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search(&j).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiViewGraph {
    n: usize,
    /// Canonical `(min, max)` edges per view, sorted and unique.
    views: Vec<Vec<(usize, usize)>>,
    /// Per view, per node: sorted adjacent nodes.
    adj: Vec<Vec<Vec<usize>>>,
    union: Vec<(usize, usize)>,
    labels: Option<Vec<Option<u32>>>,
}

impl MultiViewGraph {
    /// Build a graph from raw per-view edge lists. Edges are canonicalized
    /// and deduplicated; self-loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, views: Vec<Vec<(usize, usize)>>, labels: Option<Vec<Option<u32>>>) -> Result<Self> {
        if views.is_empty() {
            return Err(Error::Argument("a graph needs at least one view".into()));
        }
        let mut canon = Vec::with_capacity(views.len());
        for edges in views {
            let mut v = Vec::with_capacity(edges.len());
            for (a, b) in edges {
                if a >= n {
                    return Err(Error::NodeOutOfBounds { node: a, n });
                }
                if b >= n {
                    return Err(Error::NodeOutOfBounds { node: b, n });
                }
                if a == b {
                    return Err(Error::InvalidPair(a));
                }
                v.push((a.min(b), a.max(b)));
            }
            v.sort_unstable();
            v.dedup();
            canon.push(v);
        }
        if canon.iter().all(Vec::is_empty) {
            return Err(Error::EmptyGraph);
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::Shape(format!("{} labels for {n} nodes", l.len())));
            }
        }
        let adj = canon
            .iter()
            .map(|edges| {
                let mut a = vec![Vec::new(); n];
                for &(i, j) in edges {
                    a[i].push(j);
                    a[j].push(i);
                }
                a.iter_mut().for_each(|x| x.sort_unstable());
                a
            })
            .collect();
        let mut union: Vec<(usize, usize)> = canon.iter().flatten().copied().collect();
        union.sort_unstable();
        union.dedup();
        Ok(MultiViewGraph {
            n,
            views: canon,
            adj,
            union,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.views.len()
    }

    pub fn view_edges(&self, l: usize) -> &[(usize, usize)] {
        &self.views[l]
    }

    /// Canonical edges present in at least one view.
    pub fn union_edges(&self) -> &[(usize, usize)] {
        &self.union
    }

    pub fn total_edges(&self) -> usize {
        self.views.iter().map(Vec::len).sum()
    }

    pub fn labels(&self) -> Option<&[Option<u32>]> {
        self.labels.as_deref()
    }

    /// Number of distinct label values.
    pub fn label_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut v: Vec<u32> = l.iter().flatten().copied().collect();
            v.sort_unstable();
            v.dedup();
            v.len()
        })
    }

    pub fn with_labels(mut self, labels: Option<Vec<Option<u32>>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.n {
                return Err(Error::Shape(format!("{} labels for {} nodes", l.len(), self.n)));
            }
        }
        self.labels = labels;
        Ok(self)
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n {
            Err(Error::NodeOutOfBounds { node: i, n: self.n })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub fn has_edge(&self, l: usize, i: usize, j: usize) -> bool {
        self.adj[l][i].binary_search(&j).is_ok()
    }

    /// True if `(i, j)` is an edge in any view.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        (0..self.k()).any(|l| self.has_edge(l, i, j))
    }

    pub fn connectivity(&self, i: usize, j: usize) -> Result<ConnectivityPattern> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::InvalidPair(i));
        }
        Ok(ConnectivityPattern {
            bits: (0..self.k()).map(|l| self.has_edge(l, i, j)).collect(),
        })
    }

    pub fn neighbor_union(&self) -> NeighborIndex {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.union {
            adj[i].push(j);
            adj[j].push(i);
        }
        adj.iter_mut().for_each(|a| a.sort_unstable());
        NeighborIndex { adj }
    }

    /// Draw `count` pairs uniformly (with replacement) from the union edge
    /// set. Each pair is returned in a random orientation.
    pub fn sample_positive_pairs<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Result<Vec<(usize, usize)>> {
        if count == 0 {
            return Err(Error::Argument("positive pair count must be positive".into()));
        }
        if self.union.is_empty() {
            return Err(Error::EmptyGraph);
        }
        Ok((0..count)
            .map(|_| {
                let (a, b) = self.union[rng.random_range(0..self.union.len())];
                if rng.random_bool(0.5) {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect())
    }

    /// Uniform random pair `i != j` that is not an edge in any view.
    pub fn sample_non_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize)> {
        let max_pairs = self.n * (self.n.saturating_sub(1)) / 2;
        if self.union.len() >= max_pairs {
            return Err(Error::CannotSample("graph is complete".into()));
        }
        loop {
            let i = rng.random_range(0..self.n);
            let j = rng.random_range(0..self.n);
            if i != j && !self.adjacent(i, j) {
                return Ok((i, j));
            }
        }
    }

    /// Copy of this graph with view `l` replaced by `edges`.
    pub fn with_view_edges(&self, l: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if l >= self.k() {
            return Err(Error::Argument(format!("view {l} out of range (k = {})", self.k())));
        }
        let mut views = self.views.clone();
        views[l] = edges;
        MultiViewGraph::new(self.n, views, self.labels.clone())
    }

    /// Single-view graph holding only view `l`.
    pub fn single_view(&self, l: usize) -> Result<Self> {
        if l >= self.k() {
            return Err(Error::Argument(format!("view {l} out of range (k = {})", self.k())));
        }
        MultiViewGraph::new(self.n, vec![self.views[l].clone()], self.labels.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand::Rng;

    pub(crate) fn toy() -> MultiViewGraph {
        MultiViewGraph::new(3, vec![vec![(0, 1)], vec![(0, 1), (1, 2)]], None).unwrap()
    }

    #[test]
    fn toy_connectivity() {
        let g = toy();
        assert_eq!(g.connectivity(0, 1).unwrap().bits, vec![true, true]);
        assert_eq!(g.connectivity(1, 2).unwrap().bits, vec![false, true]);
        assert_eq!(g.connectivity(0, 2).unwrap().bits, vec![false, false]);
        assert!(matches!(g.connectivity(0, 0), Err(Error::InvalidPair(0))));
        assert!(matches!(g.connectivity(0, 3), Err(Error::NodeOutOfBounds { node: 3, n: 3 })));
    }

    #[test]
    fn toy_neighbors() {
        let idx = toy().neighbor_union();
        assert_eq!(idx.neighbors(0), &[1]);
        assert_eq!(idx.neighbors(1), &[0, 2]);
        assert_eq!(idx.neighbors(2), &[1]);
        let g = MultiViewGraph::new(4, vec![vec![(0, 1)], vec![(1, 2)]], None).unwrap();
        assert!(g.neighbor_union().neighbors(3).is_empty());
    }

    #[test]
    fn invariants_enforced_at_construction() {
        assert!(matches!(MultiViewGraph::new(3, vec![vec![(1, 1)]], None), Err(Error::InvalidPair(1))));
        assert!(matches!(
            MultiViewGraph::new(3, vec![vec![(0, 5)]], None),
            Err(Error::NodeOutOfBounds { node: 5, .. })
        ));
        assert!(matches!(MultiViewGraph::new(3, vec![vec![], vec![]], None), Err(Error::EmptyGraph)));
        let g = MultiViewGraph::new(3, vec![vec![(1, 0), (0, 1), (2, 1)]], None).unwrap();
        assert_eq!(g.view_edges(0), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn positive_pairs_cover_union_only() {
        let g = toy();
        let mut rng = seeded(5);
        let pairs = g.sample_positive_pairs(1000, &mut rng).unwrap();
        for (a, b) in pairs {
            let e = (a.min(b), a.max(b));
            assert!(e == (0, 1) || e == (1, 2));
        }
        assert!(matches!(g.sample_positive_pairs(0, &mut rng), Err(Error::Argument(_))));
    }

    #[test]
    fn positive_pairs_are_seed_deterministic() {
        let g = toy();
        let a = g.sample_positive_pairs(50, &mut seeded(9)).unwrap();
        let b = g.sample_positive_pairs(50, &mut seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn positive_pair_frequencies_are_uniform() {
        // two union edges: P[(0,1)] = 1/2, binomial sd at 1e5 draws ≈ 0.0016
        let g = toy();
        let pairs = g.sample_positive_pairs(100_000, &mut seeded(1)).unwrap();
        let hits = pairs.iter().filter(|&&(a, b)| a.min(b) == 0).count();
        let freq = hits as f64 / 1e5;
        assert!((freq - 0.5).abs() <= 0.01, "{freq}");
    }

    fn random_graph(seed: u64, n: usize, k: usize, p: f64) -> MultiViewGraph {
        let mut rng = seeded(seed);
        let mut views = vec![Vec::new(); k];
        for v in views.iter_mut() {
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random_bool(p) {
                        v.push((i, j));
                    }
                }
            }
        }
        views[0].push((0, 1));
        MultiViewGraph::new(n, views, None).unwrap()
    }

    #[test]
    fn neighbor_index_matches_brute_force_scan() {
        for seed in 0..20 {
            let g = random_graph(seed, 25, 3, 0.1);
            let idx = g.neighbor_union();
            for i in 0..g.n() {
                let brute: Vec<usize> = (0..g.n())
                    .filter(|&j| {
                        (0..g.k()).any(|l| g.view_edges(l).iter().any(|&(a, b)| (a, b) == (i, j) || (b, a) == (i, j)))
                    })
                    .collect();
                assert_eq!(idx.neighbors(i), brute.as_slice());
            }
        }
    }

    proptest! {
        #[test]
        fn connectivity_is_symmetric_and_matches_neighbors(seed in 0u64..500, i in 0usize..15, j in 0usize..15) {
            prop_assume!(i != j);
            let g = random_graph(seed, 15, 3, 0.2);
            let idx = g.neighbor_union();
            let a = g.connectivity(i, j).unwrap();
            prop_assert_eq!(&a, &g.connectivity(j, i).unwrap());
            prop_assert_eq!(idx.contains(i, j), a.any());
            prop_assert_eq!(idx.contains(i, j), idx.contains(j, i));
        }
    }
}
