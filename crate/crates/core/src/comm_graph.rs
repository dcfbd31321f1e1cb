//! Communication graph: an edge joins two nodes within transmission range.
//!
//! A graph keeps the id space of the deployment it was built from, so an
//! induced subgraph still speaks in the original node ids; absent vertices
//! simply have no adjacency.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::geometry::Deployment;
use crate::{Error, NodeId, NodeSet, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommGraph {
    present: Vec<bool>,
    adj: Vec<Vec<NodeId>>,
}

impl CommGraph {
    /// Edge `(u, v)` iff `u ≠ v` and `d(u, v) ≤ T`, compared on squared
    /// distances.
    pub fn build(dep: &Deployment) -> CommGraph {
        let n = dep.n();
        let t2 = dep.transmission_range * dep.transmission_range;
        let mut adj = vec![Vec::new(); n];
        for u in 0..n {
            let a = &dep.nodes[u];
            for v in (u + 1)..n {
                let b = &dep.nodes[v];
                let (dx, dy) = (a.x - b.x, a.y - b.y);
                if dx * dx + dy * dy <= t2 {
                    adj[u].push(v);
                    adj[v].push(u);
                }
            }
        }
        CommGraph {
            present: vec![true; n],
            adj,
        }
    }

    /// Graph over `0..n` from an explicit edge list.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<CommGraph> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n || u == v {
                return Err(Error::invalid(format!("bad edge ({u}, {v}) for {n} vertices")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(CommGraph {
            present: vec![true; n],
            adj,
        })
    }

    /// Number of vertices present.
    pub fn n(&self) -> usize {
        self.present.iter().filter(|&&p| p).count()
    }

    /// Size of the underlying id space.
    pub fn id_space(&self) -> usize {
        self.present.len()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.present.get(u).copied().unwrap_or(false)
    }

    pub fn vertices(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.present.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i)
    }

    /// Sorted neighbour list.
    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.adj[u]
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.adj[u].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adj.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn mean_degree(&self) -> f64 {
        let n = self.n();
        if n == 0 {
            return 0.0;
        }
        self.vertices().map(|u| self.degree(u)).sum::<usize>() as f64 / n as f64
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Undirected edges as `(u, v)` with `u < v`, sorted.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut out = Vec::new();
        for (u, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&v| u < v).map(|&v| (u, v)));
        }
        out
    }

    /// `edge <u> <v>` lines, `u < v`, sorted.
    pub fn edge_list_text(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            let _ = writeln!(out, "edge {u} {v}");
        }
        out
    }

    pub fn induced_subgraph(&self, members: &NodeSet) -> Result<CommGraph> {
        if let Some(&bad) = members.iter().find(|&&u| !self.contains(u)) {
            return Err(Error::invalid(format!("node {bad} is not in the graph")));
        }
        let mut present = vec![false; self.present.len()];
        for &u in members {
            present[u] = true;
        }
        let adj = self
            .adj
            .iter()
            .enumerate()
            .map(|(u, list)| {
                if present[u] {
                    list.iter().copied().filter(|&v| present[v]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        Ok(CommGraph { present, adj })
    }

    /// True iff the present vertices form at most one component; the empty
    /// graph counts as connected.
    pub fn is_connected(&self) -> bool {
        let Some(start) = self.vertices().next() else {
            return true;
        };
        let mut seen = vec![false; self.present.len()];
        seen[start] = true;
        let mut reached = 1;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    reached += 1;
                    queue.push_back(v);
                }
            }
        }
        reached == self.n()
    }
}

pub fn build_comm_graph(dep: &Deployment) -> CommGraph {
    CommGraph::build(dep)
}

/// True iff `members` occupies every block and induces a connected subgraph.
/// Unknown ids make the answer false.
pub fn is_connected_cover(dep: &Deployment, g: &CommGraph, members: &NodeSet) -> bool {
    let mut covered = vec![false; dep.grid.m()];
    for &u in members {
        match dep.nodes.get(u) {
            Some(node) => covered[node.block] = true,
            None => return false,
        }
    }
    if !covered.iter().all(|&c| c) {
        return false;
    }
    g.induced_subgraph(members)
        .map(|sub| sub.is_connected())
        .unwrap_or(false)
}
