//! Weighted cell graph.
//!
//! The weight between two blocks is the size of a maximum set of
//! vertex-disjoint communication edges running between them, which is a
//! maximum matching of the bipartite cross-block graph (unit-capacity max-flow
//! from a virtual source on one block to a virtual sink on the other). The
//! realising node pairs are kept alongside the weights.

use std::fmt::Write as _;

use crate::comm_graph::CommGraph;
use crate::geometry::Deployment;
use crate::{BlockId, NodeId};

/// `(u, v)` with `u` in the lower-indexed block of the pair.
pub type NodePair = (NodeId, NodeId);

/// Maximum set of vertex-disjoint edges between alive nodes of `bi` and
/// alive nodes of `bj`, as `(u ∈ bi, v ∈ bj)` sorted by `u`.
///
/// Augmenting paths are searched from the nodes of `bi` in ascending id order,
/// scanning neighbours in ascending id order, so the chosen matching is
/// reproducible. `alive` is indexed by node id.
pub fn disjoint_edges(g: &CommGraph, dep: &Deployment, bi: BlockId, bj: BlockId, alive: &[bool]) -> Vec<NodePair> {
    assert_ne!(bi, bj, "disjoint_edges needs two distinct blocks");
    let left: Vec<NodeId> = dep
        .nodes
        .iter()
        .filter(|n| n.block == bi && alive[n.id])
        .map(|n| n.id)
        .collect();
    let right_of = |u: NodeId| {
        g.neighbors(u)
            .iter()
            .copied()
            .filter(move |&v| alive[v] && dep.nodes[v].block == bj)
    };

    let n = dep.n();
    let mut mate_of_right: Vec<Option<NodeId>> = vec![None; n];
    let mut visited = vec![false; n];

    fn augment<I: Iterator<Item = NodeId>>(
        u: NodeId,
        right_of: &impl Fn(NodeId) -> I,
        mate_of_right: &mut [Option<NodeId>],
        visited: &mut [bool],
    ) -> bool {
        for v in right_of(u) {
            if visited[v] {
                continue;
            }
            visited[v] = true;
            let free = match mate_of_right[v] {
                None => true,
                Some(w) => augment(w, right_of, mate_of_right, visited),
            };
            if free {
                mate_of_right[v] = Some(u);
                return true;
            }
        }
        false
    }

    for &u in &left {
        visited.iter_mut().for_each(|s| *s = false);
        augment(u, &right_of, &mut mate_of_right, &mut visited);
    }

    let mut pairs: Vec<NodePair> = mate_of_right
        .iter()
        .enumerate()
        .filter_map(|(v, m)| m.map(|u| (u, v)))
        .collect();
    pairs.sort_unstable();
    pairs
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedCellGraph {
    m: usize,
    /// Row-major `m × m`; only `i < j` entries are populated.
    pairs: Vec<Vec<NodePair>>,
}

impl WeightedCellGraph {
    pub fn m(&self) -> usize {
        self.m
    }

    fn slot(&self, i: BlockId, j: BlockId) -> usize {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        a * self.m + b
    }

    pub fn weight(&self, i: BlockId, j: BlockId) -> usize {
        if i == j {
            0
        } else {
            self.pairs[self.slot(i, j)].len()
        }
    }

    /// Realising pairs of the unordered block pair, oriented so the first
    /// node lies in `min(i, j)`.
    pub fn pairs(&self, i: BlockId, j: BlockId) -> &[NodePair] {
        if i == j {
            &[]
        } else {
            &self.pairs[self.slot(i, j)]
        }
    }

    /// Symmetric weight matrix with zero diagonal.
    pub fn weights(&self) -> Vec<Vec<usize>> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.weight(i, j)).collect())
            .collect()
    }

    /// True iff the positive-weight edges connect all blocks.
    pub fn is_connected(&self) -> bool {
        if self.m == 0 {
            return true;
        }
        let mut seen = vec![false; self.m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, s) in seen.iter_mut().enumerate() {
                if !*s && self.weight(i, j) > 0 {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    /// `pair <i> <j> w=<k>` followed by `  <u> <v>` lines, for every pair with
    /// positive weight.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                let list = self.pairs(i, j);
                if list.is_empty() {
                    continue;
                }
                let _ = writeln!(out, "pair {i} {j} w={}", list.len());
                for (u, v) in list {
                    let _ = writeln!(out, "  {u} {v}");
                }
            }
        }
        out
    }
}

/// Cell graph over every unordered block pair, not only geometric neighbours.
pub fn build_weighted_cell_graph(g: &CommGraph, dep: &Deployment, alive: &[bool]) -> WeightedCellGraph {
    let m = dep.grid.m();
    let mut pairs = vec![Vec::new(); m * m];
    for i in 0..m {
        for j in (i + 1)..m {
            pairs[i * m + j] = disjoint_edges(g, dep, i, j, alive);
        }
    }
    WeightedCellGraph { m, pairs }
}

/// Updates `w` after `removed` left the network. Every pair touching a block
/// that lost a node is recomputed over `alive`; other pairs are kept as is.
pub fn remove_nodes(
    w: &WeightedCellGraph,
    g: &CommGraph,
    dep: &Deployment,
    removed: &[NodeId],
    alive: &[bool],
) -> WeightedCellGraph {
    debug_assert!(removed.iter().all(|&u| !alive[u]));
    let m = w.m;
    let mut touched = vec![false; m];
    for &u in removed {
        touched[dep.block_of(u)] = true;
    }
    let mut out = w.clone();
    for i in 0..m {
        for j in (i + 1)..m {
            if touched[i] || touched[j] {
                out.pairs[i * m + j] = disjoint_edges(g, dep, i, j, alive);
            }
        }
    }
    out
}
