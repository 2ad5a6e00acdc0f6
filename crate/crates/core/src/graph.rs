use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

/// Undirected node pair, stored with `u < v`.
pub type Edge = (usize, usize);

#[inline]
pub fn canonical(u: usize, v: usize) -> Edge {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Simple undirected graph with a dense node feature matrix and optional labels.
///
/// Features are reference counted: attacked copies of a graph share the
/// feature buffer with the original.
#[derive(Clone, Debug)]
pub struct Graph {
    adj: Vec<BTreeSet<usize>>,
    num_edges: usize,
    features: Arc<Matrix>,
    labels: Option<Arc<Vec<usize>>>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.adj == other.adj
            && *self.features == *other.features
            && self.labels.as_deref() == other.labels.as_deref()
    }
}

impl Graph {
    /// `n` isolated nodes with zero-width features.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![BTreeSet::new(); n],
            num_edges: 0,
            features: Arc::new(Matrix::zeros(n, 0)),
            labels: None,
        }
    }

    /// Builds a graph from undirected pairs; self-loops, repeated pairs (in
    /// either orientation) and out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[Edge]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (i, &(u, v)) in edges.iter().enumerate() {
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop ({u},{v}) at edge {i}")));
            }
            if u >= n || v >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({u},{v}) out of range for {n} nodes"
                )));
            }
            if !g.add_edge(u, v)? {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v}) at edge {i}")));
            }
        }
        Ok(g)
    }

    pub fn with_features(mut self, features: Matrix) -> Result<Self> {
        self.set_features(Arc::new(features))?;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::Shape(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n()
            )));
        }
        self.labels = Some(Arc::new(labels));
        Ok(self)
    }

    pub fn set_features(&mut self, features: Arc<Matrix>) -> Result<()> {
        if features.rows() != self.n() {
            return Err(Error::Shape(format!(
                "feature matrix has {} rows for {} nodes",
                features.rows(),
                self.n()
            )));
        }
        self.features = features;
        Ok(())
    }

    /// Same node set, features, and labels; no edges.
    pub fn without_edges(&self) -> Graph {
        Graph {
            adj: vec![BTreeSet::new(); self.n()],
            num_edges: 0,
            features: Arc::clone(&self.features),
            labels: self.labels.clone(),
        }
    }

    /// Same node data with a different edge set.
    pub fn with_edge_list(&self, edges: &[Edge]) -> Result<Graph> {
        let mut g = self.without_edges();
        for &(u, v) in edges {
            if !g.add_edge(u, v)? {
                return Err(Error::InvalidGraph(format!("duplicate edge ({u},{v})")));
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn feature_dim(&self) -> usize {
        self.features.cols()
    }

    pub fn has_features(&self) -> bool {
        self.features.cols() > 0
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn features_arc(&self) -> &Arc<Matrix> {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref().map(Vec::as_slice)
    }

    pub fn num_classes(&self) -> usize {
        self.labels()
            .and_then(|l| l.iter().max())
            .map_or(0, |m| m + 1)
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &BTreeSet<usize> {
        &self.adj[u]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && self.adj[u].contains(&v)
    }

    fn check_pair(&self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop ({u},{v})")));
        }
        if u >= self.n() || v >= self.n() {
            return Err(Error::InvalidGraph(format!(
                "pair ({u},{v}) out of range for {} nodes",
                self.n()
            )));
        }
        Ok(())
    }

    /// Returns `false` if the edge was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        if self.adj[u].insert(v) {
            self.adj[v].insert(u);
            self.num_edges += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Returns `false` if the edge was absent.
    pub fn remove_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        self.check_pair(u, v)?;
        if self.adj[u].remove(&v) {
            self.adj[v].remove(&u);
            self.num_edges -= 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// Flips the pair and returns whether it is an edge afterwards.
    pub fn toggle_edge(&mut self, u: usize, v: usize) -> Result<bool> {
        if self.has_edge(u, v) {
            self.remove_edge(u, v)?;
            Ok(false)
        } else {
            self.add_edge(u, v)?;
            Ok(true)
        }
    }

    /// Edges in ascending canonical order.
    pub fn edges(&self) -> Vec<Edge> {
        let mut out = Vec::with_capacity(self.num_edges);
        for (u, nb) in self.adj.iter().enumerate() {
            out.extend(nb.range(u + 1..).map(|&v| (u, v)));
        }
        out
    }

    pub fn same_edges(&self, other: &Graph) -> bool {
        self.adj == other.adj
    }

    pub fn num_non_edges(&self) -> usize {
        let n = self.n();
        n * n.saturating_sub(1) / 2 - self.num_edges
    }

    /// Relabels nodes: node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Graph> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::Shape("permutation length".into()));
        }
        let edges: Vec<Edge> = self
            .edges()
            .into_iter()
            .map(|(u, v)| canonical(perm[u], perm[v]))
            .collect();
        let mut g = Graph::from_edges(n, &edges)?;
        let k = self.feature_dim();
        let mut feats = Matrix::zeros(n, k);
        for i in 0..n {
            feats.row_mut(perm[i]).copy_from_slice(self.features.row(i));
        }
        g = g.with_features(feats)?;
        if let Some(l) = self.labels() {
            let mut nl = vec![0; n];
            for i in 0..n {
                nl[perm[i]] = l[i];
            }
            g = g.with_labels(nl)?;
        }
        Ok(g)
    }
}

/// Original graph together with its attacked counterpart.
#[derive(Clone, Debug)]
pub struct AttackPair {
    pub original: Graph,
    pub attacked: Graph,
}

/// Edge bookkeeping for an [`AttackPair`]: `union` is sorted and
/// `labels[i]` iff `union[i]` is an original edge.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSets {
    pub original: Vec<Edge>,
    pub attacked: Vec<Edge>,
    pub union: Vec<Edge>,
    pub labels: Vec<bool>,
}

impl EdgeSets {
    pub fn num_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

impl AttackPair {
    pub fn new(original: Graph, attacked: Graph) -> Result<Self> {
        if original.n() != attacked.n() {
            return Err(Error::InvalidGraph(format!(
                "node sets differ: {} vs {} nodes",
                original.n(),
                attacked.n()
            )));
        }
        Ok(AttackPair { original, attacked })
    }

    pub fn edge_sets(&self) -> EdgeSets {
        let original = self.original.edges();
        let attacked = self.attacked.edges();
        let mut union: Vec<Edge> = original.iter().chain(&attacked).copied().collect();
        union.sort_unstable();
        union.dedup();
        let labels = union
            .iter()
            .map(|&(u, v)| self.original.has_edge(u, v))
            .collect();
        EdgeSets {
            original,
            attacked,
            union,
            labels,
        }
    }
}
