//! Monolithic road graph data model.
//!
//! A [`RoadGraph`] stores the undirected adjacency in CSR form together with
//! the dense node feature matrix and the per-edge feature matrix. Labels live
//! beside the graph in a [`LabelVector`]; train/valid/test partitions are a
//! [`Split`].

mod io;
mod labels;
mod split;
mod validate;

pub use io::{load_dataset, load_graph, read_split, save_dataset, write_split, Dataset};
pub use labels::{Label, LabelVector};
pub use split::{stratified_split, Split, SplitRatios};
pub use validate::{validate, ValidationReport, Violation};

use ndarray::Array2;

use crate::error::{Error, Result};

/// Node identifier inside the CSR arrays.
pub type NodeId = u32;

/// Immutable undirected graph with CSR adjacency and dense features.
///
/// Neighbor rows are strictly ascending, self-loops are never stored and each
/// undirected edge appears in both endpoint rows. `edges` lists every
/// undirected edge once as `[lo, hi]` (`lo < hi`), sorted, and row `e` of
/// `edge_features` belongs to `edges[e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    offsets: Vec<usize>,
    neighbors: Vec<NodeId>,
    edges: Vec<[NodeId; 2]>,
    node_features: Array2<f64>,
    edge_features: Array2<f64>,
}

/// What the edge-list builder had to clean up.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BuildStats {
    pub self_loops_dropped: usize,
    pub duplicate_edges_collapsed: usize,
}

impl BuildStats {
    pub fn warnings(&self) -> usize {
        self.self_loops_dropped + self.duplicate_edges_collapsed
    }
}

impl RoadGraph {
    /// Builds a graph from a (possibly directed, possibly redundant) edge list.
    ///
    /// Edges are symmetrized, self-loops dropped and duplicate undirected
    /// edges collapsed onto their first occurrence, whose feature row is kept.
    pub fn from_edge_list(
        num_nodes: usize,
        edge_list: &[(NodeId, NodeId)],
        node_features: Array2<f64>,
        edge_features: Option<Array2<f64>>,
    ) -> Result<(Self, BuildStats)> {
        if num_nodes > NodeId::MAX as usize {
            return Err(Error::InvalidGraph(format!("{num_nodes} nodes exceed the id range")));
        }
        if node_features.nrows() != num_nodes {
            return Err(Error::ShapeMismatch(format!(
                "node features have {} rows for {num_nodes} nodes",
                node_features.nrows()
            )));
        }
        let edge_features =
            edge_features.unwrap_or_else(|| Array2::zeros((edge_list.len(), 0)));
        if edge_features.nrows() != edge_list.len() {
            return Err(Error::ShapeMismatch(format!(
                "edge features have {} rows for {} edges",
                edge_features.nrows(),
                edge_list.len()
            )));
        }
        ensure_finite(&node_features, "node features")?;
        ensure_finite(&edge_features, "edge features")?;

        let mut stats = BuildStats::default();
        let mut keyed: Vec<([NodeId; 2], usize)> = Vec::with_capacity(edge_list.len());
        for (idx, &(u, v)) in edge_list.iter().enumerate() {
            for id in [u, v] {
                if id as usize >= num_nodes {
                    return Err(Error::NodeOutOfRange { id: id as usize, num_nodes });
                }
            }
            if u == v {
                stats.self_loops_dropped += 1;
                continue;
            }
            keyed.push(([u.min(v), u.max(v)], idx));
        }
        // stable: the first occurrence of each key survives dedup
        keyed.sort_by_key(|&(key, _)| key);
        let before = keyed.len();
        keyed.dedup_by_key(|&mut (key, _)| key);
        stats.duplicate_edges_collapsed = before - keyed.len();

        let edges: Vec<[NodeId; 2]> = keyed.iter().map(|&(key, _)| key).collect();
        let d2 = edge_features.ncols();
        let mut kept_features = Array2::zeros((edges.len(), d2));
        for (row, &(_, idx)) in keyed.iter().enumerate() {
            kept_features.row_mut(row).assign(&edge_features.row(idx));
        }

        let (offsets, neighbors) = build_csr(num_nodes, &edges);
        Ok((
            RoadGraph {
                offsets,
                neighbors,
                edges,
                node_features,
                edge_features: kept_features,
            },
            stats,
        ))
    }

    /// Assembles a graph from raw parts without checking any invariant.
    ///
    /// Use [`validate`] to inspect the result.
    pub fn from_raw_parts(
        offsets: Vec<usize>,
        neighbors: Vec<NodeId>,
        edges: Vec<[NodeId; 2]>,
        node_features: Array2<f64>,
        edge_features: Array2<f64>,
    ) -> Self {
        RoadGraph {
            offsets,
            neighbors,
            edges,
            node_features,
            edge_features,
        }
    }

    /// Replaces the node feature matrix.
    pub fn with_node_features(mut self, node_features: Array2<f64>) -> Result<Self> {
        if node_features.nrows() != self.num_nodes() {
            return Err(Error::ShapeMismatch(format!(
                "node features have {} rows for {} nodes",
                node_features.nrows(),
                self.num_nodes()
            )));
        }
        ensure_finite(&node_features, "node features")?;
        self.node_features = node_features;
        Ok(self)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_features.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn neighbor_ids(&self) -> &[NodeId] {
        &self.neighbors
    }

    pub fn edges(&self) -> &[[NodeId; 2]] {
        &self.edges
    }

    /// Sorted neighbor row of node `i`. Panics if `i` is out of range.
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[NodeId] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn node_features(&self) -> &Array2<f64> {
        &self.node_features
    }

    pub fn edge_features(&self) -> &Array2<f64> {
        &self.edge_features
    }

    pub fn node_feature_dim(&self) -> usize {
        self.node_features.ncols()
    }

    pub fn edge_feature_dim(&self) -> usize {
        self.edge_features.ncols()
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.num_nodes() {
            return Err(Error::NodeOutOfRange {
                id: i,
                num_nodes: self.num_nodes(),
            });
        }
        Ok(())
    }
}

fn build_csr(num_nodes: usize, edges: &[[NodeId; 2]]) -> (Vec<usize>, Vec<NodeId>) {
    let mut offsets = vec![0usize; num_nodes + 1];
    for &[u, v] in edges {
        offsets[u as usize + 1] += 1;
        offsets[v as usize + 1] += 1;
    }
    for i in 0..num_nodes {
        offsets[i + 1] += offsets[i];
    }
    let mut cursor = offsets.clone();
    let mut neighbors = vec![0 as NodeId; offsets[num_nodes]];
    for &[u, v] in edges {
        neighbors[cursor[u as usize]] = v;
        cursor[u as usize] += 1;
        neighbors[cursor[v as usize]] = u;
        cursor[v as usize] += 1;
    }
    for i in 0..num_nodes {
        neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
    }
    (offsets, neighbors)
}

fn ensure_finite(m: &Array2<f64>, what: &str) -> Result<()> {
    if let Some(((r, c), _)) = m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: format!("{what} at row {r}, column {c}"),
        });
    }
    Ok(())
}
