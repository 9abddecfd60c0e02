//! Immutable undirected graphs with node features, labels and a
//! train/validation/test assignment.

mod homophily;
mod masks;
mod normalize;
mod propagation;
mod sbm;

pub use homophily::{edge_homophily, node_homophily, NodeHomophily};
pub use masks::{make_masks, MaskRatios};
pub use normalize::{normalized_adjacency, normalized_adjacency_dense};
pub use propagation::{label_propagation, LabelDistribution};
pub use sbm::{sbm_generate, SbmParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// Which supervision split a node belongs to. A single value per node keeps
/// the three masks disjoint by construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
    None,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
            Split::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            "none" => Some(Split::None),
            _ => None,
        }
    }
}

/// Counts reported when an edge list is cleaned up.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeCleanup {
    pub self_loops: usize,
    pub duplicates: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: DenseMatrix,
    labels: Vec<usize>,
    num_classes: usize,
    split: Vec<Split>,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Self-loops and repeated
    /// edges (in either orientation) are dropped; use
    /// [`Graph::from_edges_with_report`] to see how many.
    pub fn from_edges(
        edges: &[(usize, usize)],
        features: DenseMatrix,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        Self::from_edges_with_report(edges, features, labels, num_classes).map(|(g, _)| g)
    }

    pub fn from_edges_with_report(
        edges: &[(usize, usize)],
        features: DenseMatrix,
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<(Self, EdgeCleanup)> {
        let n = labels.len();
        if features.rows() != n {
            return Err(Error::shape(
                "Graph::from_edges",
                format!("{n} feature rows"),
                features.rows(),
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        let mut report = EdgeCleanup::default();
        let mut arcs: Vec<(usize, usize)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                report.self_loops += 1;
                continue;
            }
            arcs.push((u, v));
            arcs.push((v, u));
        }
        arcs.sort_unstable();
        let before = arcs.len();
        arcs.dedup();
        report.duplicates = (before - arcs.len()) / 2;

        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in &arcs {
            offsets[u + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = arcs.into_iter().map(|(_, v)| v).collect();
        Ok((
            Self {
                offsets,
                neighbors,
                features,
                labels,
                num_classes,
                split: vec![Split::None; n],
            },
            report,
        ))
    }

    #[inline]
    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges.
    #[inline]
    pub fn num_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn num_features(&self) -> usize {
        self.features.cols()
    }

    /// Sorted neighbor list of `u`.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges().collect()
    }

    #[inline]
    pub fn features(&self) -> &DenseMatrix {
        &self.features
    }

    #[inline]
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn split(&self) -> &[Split] {
        &self.split
    }

    /// Node indices assigned to `which`, ascending.
    pub fn nodes_in(&self, which: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == which)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count_in(&self, which: Split) -> usize {
        self.split.iter().filter(|&&s| s == which).count()
    }

    pub fn with_split(mut self, split: Vec<Split>) -> Result<Self> {
        if split.len() != self.num_nodes() {
            return Err(Error::shape("Graph::with_split", self.num_nodes(), split.len()));
        }
        self.split = split;
        Ok(self)
    }

    pub fn with_features(mut self, features: DenseMatrix) -> Result<Self> {
        if features.rows() != self.num_nodes() {
            return Err(Error::shape("Graph::with_features", self.num_nodes(), features.rows()));
        }
        self.features = features;
        Ok(self)
    }

    /// Same nodes, labels, features and split with a different edge set.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Self> {
        let g = Self::from_edges(edges, self.features.clone(), self.labels.clone(), self.num_classes)?;
        g.with_split(self.split.clone())
    }

    /// Subgraph induced by `nodes` (re-indexed in the given order). Edges
    /// leaving the node set are dropped.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Self> {
        let mut local = vec![usize::MAX; self.num_nodes()];
        for (i, &u) in nodes.iter().enumerate() {
            if u >= self.num_nodes() || local[u] != usize::MAX {
                return Err(Error::InvalidArgument(format!(
                    "induced_subgraph: node {u} is out of range or repeated"
                )));
            }
            local[u] = i;
        }
        let mut edges = Vec::new();
        for (i, &u) in nodes.iter().enumerate() {
            for &v in self.neighbors(u) {
                let j = local[v];
                if j != usize::MAX && i < j {
                    edges.push((i, j));
                }
            }
        }
        let features = self.features.select_rows(nodes);
        let labels = nodes.iter().map(|&u| self.labels[u]).collect();
        let split = nodes.iter().map(|&u| self.split[u]).collect();
        Self::from_edges(&edges, features, labels, self.num_classes)?.with_split(split)
    }

    /// Rows scaled to unit L1 norm; all-zero rows stay zero.
    pub fn with_row_normalized_features(self) -> Self {
        let mut features = self.features.clone();
        for i in 0..features.rows() {
            let row = features.row_mut(i);
            let total: f64 = row.iter().map(|v| v.abs()).sum();
            if total > 0.0 {
                row.iter_mut().for_each(|v| *v /= total);
            }
        }
        Self { features, ..self }
    }

    /// Per-class node counts.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for &y in &self.labels {
            counts[y] += 1;
        }
        counts
    }
}
