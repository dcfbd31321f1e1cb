//! Centralized partitioning: repeatedly take a maximum spanning tree of the
//! weighted cell graph, realise each tree edge by one of its disjoint node
//! pairs, retire the chosen nodes and refresh the weights, until no spanning
//! tree is left.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use crate::cellgraph::{build_weighted_cell_graph, remove_nodes, NodePair, WeightedCellGraph};
use crate::comm_graph::CommGraph;
use crate::geometry::Deployment;
use crate::{BlockId, Error, NodeId, NodeSet, Result};

/// Tree edge `(parent, child)` in Prim insertion order.
pub type TreeEdge = (BlockId, BlockId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedEdge {
    pub blocks: TreeEdge,
    pub pair: NodePair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub id: usize,
    pub members: NodeSet,
    pub realizing_edges: Vec<RealizedEdge>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CcspResult {
    pub partitions: Vec<Partition>,
    pub free_nodes: NodeSet,
    /// Spanning-tree extractions attempted, including the final failing one.
    pub iterations: usize,
}

impl CcspResult {
    pub fn partition_sets(&self) -> Vec<NodeSet> {
        self.partitions.iter().map(|p| p.members.clone()).collect()
    }

    pub fn report(&self) -> String {
        partition_report(self.partitions.iter().map(|p| (p.id, &p.members)), &self.free_nodes)
    }
}

/// Maximum-weight spanning tree over the positive-weight edges, grown by Prim
/// from block 0. The next block is the one with the heaviest connection to the
/// tree, ties to the lower block index; its parent is the lowest-indexed tree
/// block achieving that weight. `None` when the positive edges do not span.
pub fn maximum_spanning_tree(w: &WeightedCellGraph) -> Option<Vec<TreeEdge>> {
    let m = w.m();
    if m == 0 {
        return None;
    }
    let mut in_tree = vec![false; m];
    in_tree[0] = true;
    // (weight, parent) of the best link from the tree to each block.
    let mut best: Vec<(usize, BlockId)> = (0..m).map(|j| (w.weight(0, j), 0)).collect();
    let mut tree = Vec::with_capacity(m.saturating_sub(1));
    for _ in 1..m {
        let next = (0..m)
            .filter(|&j| !in_tree[j] && best[j].0 > 0)
            .max_by(|&a, &b| best[a].0.cmp(&best[b].0).then(b.cmp(&a)))?;
        in_tree[next] = true;
        tree.push((best[next].1, next));
        for k in 0..m {
            if in_tree[k] {
                continue;
            }
            let wk = w.weight(next, k);
            if wk > best[k].0 || (wk == best[k].0 && wk > 0 && next < best[k].1) {
                best[k] = (wk, next);
            }
        }
    }
    Some(tree)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Realization {
    pub members: NodeSet,
    pub edges: Vec<RealizedEdge>,
}

/// Picks one node pair per tree edge, in tree order. A pair adding the fewest
/// nodes not already picked for this partition wins; ties go to the
/// lexicographically smallest pair. With a single block the realisation is the
/// lowest-id alive node of that block.
pub fn realize_tree(tree: &[TreeEdge], w: &WeightedCellGraph, dep: &Deployment, alive: &[bool]) -> Realization {
    let mut members = NodeSet::new();
    let mut edges = Vec::with_capacity(tree.len());
    if w.m() == 1 {
        if let Some(u) = (0..dep.n()).find(|&u| alive[u] && dep.block_of(u) == 0) {
            members.insert(u);
        }
        return Realization { members, edges };
    }
    for &(a, b) in tree {
        let new_nodes = |&(u, v): &NodePair| usize::from(!members.contains(&u)) + usize::from(!members.contains(&v));
        let &pair = w
            .pairs(a, b)
            .iter()
            .min_by_key(|p| (new_nodes(p), **p))
            .expect("tree edges carry positive weight");
        members.insert(pair.0);
        members.insert(pair.1);
        edges.push(RealizedEdge { blocks: (a, b), pair });
    }
    Realization { members, edges }
}

/// Nodes to add so that `members` becomes connected, routing through alive
/// nodes outside `members` along shortest paths. Only needed when same-block
/// nodes are not guaranteed adjacent. `None` when no such routing exists.
pub fn bridge_components(g: &CommGraph, members: &NodeSet, alive: &[bool]) -> Option<Vec<NodeId>> {
    let mut joined: NodeSet = members.clone();
    let mut added = Vec::new();
    loop {
        let sub = g.induced_subgraph(&joined).ok()?;
        if sub.is_connected() {
            return Some(added);
        }
        // Component of the smallest member.
        let start = *joined.iter().next()?;
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in sub.neighbors(u) {
                if comp.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        // BFS out of the component through alive outsiders.
        let n = g.id_space();
        let mut prev: Vec<Option<NodeId>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue: VecDeque<NodeId> = comp.iter().copied().collect();
        for &u in &comp {
            seen[u] = true;
        }
        let mut hit = None;
        'bfs: while let Some(u) = queue.pop_front() {
            for &v in g.neighbors(u) {
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                prev[v] = Some(u);
                if joined.contains(&v) {
                    hit = Some(v);
                    break 'bfs;
                }
                if alive[v] {
                    queue.push_back(v);
                }
            }
        }
        let mut cur = prev[hit?]?;
        while !comp.contains(&cur) {
            joined.insert(cur);
            added.push(cur);
            cur = prev[cur]?;
        }
    }
}

pub fn ccsp_partition(g: &CommGraph, dep: &Deployment) -> CcspResult {
    let n = dep.n();
    let mut alive = vec![true; n];
    let mut w = build_weighted_cell_graph(g, dep, &alive);
    let mut partitions = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let Some(tree) = maximum_spanning_tree(&w) else {
            break;
        };
        let Realization { mut members, edges } = realize_tree(&tree, &w, dep, &alive);
        if members.is_empty() {
            break;
        }
        match bridge_components(g, &members, &alive) {
            Some(extra) => members.extend(extra),
            None => break,
        }
        let removed: Vec<NodeId> = members.iter().copied().collect();
        for &u in &removed {
            alive[u] = false;
        }
        w = remove_nodes(&w, g, dep, &removed, &alive);
        partitions.push(Partition {
            id: partitions.len() + 1,
            members,
            realizing_edges: edges,
        });
    }
    let free_nodes = (0..n).filter(|&u| alive[u]).collect();
    CcspResult {
        partitions,
        free_nodes,
        iterations,
    }
}

/// `partition <id>: <sorted ids>` lines followed by `free: <sorted ids>`.
pub fn partition_report<'a>(partitions: impl IntoIterator<Item = (usize, &'a NodeSet)>, free: &NodeSet) -> String {
    let join = |s: &NodeSet| s.iter().map(|u| u.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = String::new();
    for (id, members) in partitions {
        let _ = writeln!(out, "partition {id}: {}", join(members));
    }
    let _ = writeln!(out, "free: {}", join(free));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedReport {
    pub partitions: Vec<(usize, NodeSet)>,
    pub free: NodeSet,
}

/// Reads a report written by [`partition_report`].
pub fn parse_partition_report(text: &str) -> Result<ParsedReport> {
    let ids = |ln: usize, s: &str| -> Result<NodeSet> {
        s.split_whitespace()
            .map(|t| {
                t.parse::<NodeId>()
                    .map_err(|_| Error::parse(ln, format!("bad node id `{t}`")))
            })
            .collect()
    };
    let mut partitions = Vec::new();
    let mut free = None;
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("free:") {
            free = Some(ids(ln, rest)?);
        } else if let Some(rest) = line.strip_prefix("partition ") {
            let (id, members) = rest
                .split_once(':')
                .ok_or_else(|| Error::parse(ln, "expected `partition <id>: ...`"))?;
            let id = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(ln, format!("bad partition id `{id}`")))?;
            partitions.push((id, ids(ln, members)?));
        } else {
            return Err(Error::parse(ln, format!("unexpected line `{line}`")));
        }
    }
    let free = free.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing `free:` line"))?;
    Ok(ParsedReport { partitions, free })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellgraph::build_weighted_cell_graph;
    use crate::comm_graph::is_connected_cover;
    use crate::geometry::{deploy, deployment_from_points, make_grid_explicit};
    use proptest::prelude::*;

    /// Cell graph given directly by its weights: pair `(i, j)` gets `w` fresh
    /// nodes on each side, matched one to one.
    fn cell_graph_from_weights(m: usize, weights: &[(usize, usize, usize)]) -> WeightedCellGraph {
        let rows = 1;
        let grid = make_grid_explicit(10.0 * m as f64, 10.0, rows, m, 100.0, 100.0).unwrap();
        let mut pts = Vec::new();
        let mut edges = Vec::new();
        for &(i, j, w) in weights {
            for _ in 0..w {
                let u = pts.len();
                pts.push((10.0 * i as f64 + 5.0, 5.0));
                pts.push((10.0 * j as f64 + 5.0, 5.0));
                edges.push((u, u + 1));
            }
        }
        let dep = deployment_from_points(&grid, 100.0, 100.0, &pts).unwrap();
        let g = CommGraph::from_edges(pts.len(), &edges).unwrap();
        build_weighted_cell_graph(&g, &dep, &vec![true; pts.len()])
    }

    fn brute_force_max_tree(w: &WeightedCellGraph) -> Option<usize> {
        let m = w.m();
        if m == 1 {
            return Some(0);
        }
        let edges: Vec<(usize, usize, usize)> = (0..m)
            .flat_map(|i| ((i + 1)..m).map(move |j| (i, j)))
            .filter(|&(i, j)| w.weight(i, j) > 0)
            .map(|(i, j)| (i, j, w.weight(i, j)))
            .collect();
        let mut best = None;
        for mask in 0u32..(1 << edges.len()) {
            if mask.count_ones() as usize != m - 1 {
                continue;
            }
            let mut parent: Vec<usize> = (0..m).collect();
            fn find(p: &mut [usize], x: usize) -> usize {
                let mut x = x;
                while p[x] != x {
                    x = p[x];
                }
                x
            }
            let mut total = 0;
            let mut acyclic = true;
            for (k, &(i, j, wt)) in edges.iter().enumerate() {
                if mask & (1 << k) == 0 {
                    continue;
                }
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a == b {
                    acyclic = false;
                    break;
                }
                parent[a] = b;
                total += wt;
            }
            if acyclic {
                best = best.max(Some(total));
            }
        }
        best
    }

    #[test]
    fn single_block_tree_is_empty() {
        let w = cell_graph_from_weights(1, &[]);
        assert_eq!(maximum_spanning_tree(&w), Some(vec![]));
    }

    #[test]
    fn zero_weight_has_no_tree() {
        let w = cell_graph_from_weights(2, &[]);
        assert_eq!(maximum_spanning_tree(&w), None);
    }

    #[test]
    fn prim_prefers_heavy_edges_and_low_indices() {
        let w = cell_graph_from_weights(4, &[(0, 1, 1), (0, 2, 3), (1, 2, 2), (2, 3, 2), (1, 3, 2)]);
        assert_eq!(maximum_spanning_tree(&w), Some(vec![(0, 2), (2, 1), (1, 3)]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn tree_weight_equals_brute_force(m in 1usize..=6, raw in proptest::collection::vec(0usize..4, 15)) {
            let mut weights = Vec::new();
            let mut k = 0;
            for i in 0..m {
                for j in (i + 1)..m {
                    weights.push((i, j, raw[k]));
                    k += 1;
                }
            }
            let w = cell_graph_from_weights(m, &weights);
            let got = maximum_spanning_tree(&w).map(|t| t.iter().map(|&(a, b)| w.weight(a, b)).sum::<usize>());
            prop_assert_eq!(got, brute_force_max_tree(&w));
        }
    }

    /// Three blocks in a row, two nodes each.
    fn three_block_fixture() -> (CommGraph, Deployment) {
        let grid = make_grid_explicit(30.0, 10.0, 1, 3, 100.0, 100.0).unwrap();
        let pts = [
            (5.0, 5.0),
            (5.0, 6.0),
            (15.0, 5.0),
            (15.0, 6.0),
            (25.0, 5.0),
            (25.0, 6.0),
        ];
        let dep = deployment_from_points(&grid, 100.0, 100.0, &pts).unwrap();
        let edges = [(0, 1), (2, 3), (4, 5), (0, 3), (1, 2), (2, 4), (3, 5)];
        (CommGraph::from_edges(6, &edges).unwrap(), dep)
    }

    #[test]
    fn realisation_reuses_shared_nodes() {
        let (g, dep) = three_block_fixture();
        let alive = vec![true; 6];
        let w = build_weighted_cell_graph(&g, &dep, &alive);
        assert_eq!(w.pairs(0, 1), &[(0, 3), (1, 2)]);
        assert_eq!(w.pairs(1, 2), &[(2, 4), (3, 5)]);
        let tree = maximum_spanning_tree(&w).unwrap();
        assert_eq!(tree, vec![(0, 1), (1, 2)]);
        // (0,3) first; then (3,5) reuses node 3 even though (2,4) sorts lower.
        let r = realize_tree(&tree, &w, &dep, &alive);
        assert_eq!(r.members, NodeSet::from([0, 3, 5]));
        assert_eq!(r.edges[1].pair, (3, 5));

        let res = ccsp_partition(&g, &dep);
        assert_eq!(
            res.partition_sets(),
            vec![NodeSet::from([0, 3, 5]), NodeSet::from([1, 2, 4])]
        );
    }

    #[test]
    fn single_block_realisation_is_lowest_alive_node() {
        let grid = make_grid_explicit(10.0, 10.0, 1, 1, 100.0, 100.0).unwrap();
        let dep = deploy(5, &grid, 100.0, 100.0, 1);
        let g = CommGraph::build(&dep);
        let mut alive = vec![true; 5];
        alive[0] = false;
        let w = build_weighted_cell_graph(&g, &dep, &alive);
        let r = realize_tree(&[], &w, &dep, &alive);
        assert_eq!(r.members, NodeSet::from([1]));
        let res = ccsp_partition(&g, &dep);
        assert_eq!(res.partitions.len(), 5);
        assert!(res.partitions.iter().all(|p| p.members.len() == 1));
    }

    #[test]
    fn two_disjoint_quadruples() {
        let grid = make_grid_explicit(50.0, 50.0, 2, 2, 36.0, 36.0).unwrap();
        let pts = [
            (10.0, 10.0),
            (40.0, 10.0),
            (10.0, 40.0),
            (40.0, 40.0),
            (20.0, 20.0),
            (30.0, 20.0),
            (20.0, 30.0),
            (30.0, 30.0),
        ];
        let dep = deployment_from_points(&grid, 36.0, 36.0, &pts).unwrap();
        let g = CommGraph::build(&dep);
        let res = ccsp_partition(&g, &dep);
        assert_eq!(res.partitions.len(), 2);
        assert!(res.free_nodes.is_empty());
        for p in &res.partitions {
            assert!(is_connected_cover(&dep, &g, &p.members));
        }
    }

    #[test]
    fn forced_pairs() {
        let grid = make_grid_explicit(20.0, 10.0, 1, 2, 100.0, 100.0).unwrap();
        let pts = [(2.0, 2.0), (3.0, 3.0), (12.0, 2.0), (13.0, 3.0)];
        let dep = deployment_from_points(&grid, 100.0, 100.0, &pts).unwrap();
        let g = CommGraph::from_edges(4, &[(0, 1), (2, 3), (0, 2), (1, 3)]).unwrap();
        let res = ccsp_partition(&g, &dep);
        assert_eq!(res.partition_sets(), vec![NodeSet::from([0, 2]), NodeSet::from([1, 3])]);
        assert_eq!(res.report(), "partition 1: 0 2\npartition 2: 1 3\nfree: \n");
    }

    #[test]
    fn empty_block_yields_nothing() {
        let grid = make_grid_explicit(50.0, 50.0, 2, 2, 36.0, 36.0).unwrap();
        let pts = [(10.0, 10.0), (40.0, 10.0), (10.0, 40.0), (12.0, 12.0)];
        let dep = deployment_from_points(&grid, 36.0, 36.0, &pts).unwrap();
        let g = CommGraph::build(&dep);
        let res = ccsp_partition(&g, &dep);
        assert!(res.partitions.is_empty());
        assert_eq!(res.free_nodes.len(), 4);
    }

    #[test]
    fn bridging_repairs_split_block() {
        // Nodes 0 and 1 cannot talk directly; node 2 relays.
        let g = CommGraph::from_edges(3, &[(0, 2), (1, 2)]).unwrap();
        let members = NodeSet::from([0, 1]);
        assert_eq!(bridge_components(&g, &members, &[true; 3]), Some(vec![2]));
        assert_eq!(bridge_components(&g, &members, &[true, true, false]), None);
    }

    #[test]
    fn report_round_trips() {
        let text = "partition 1: 0 3 5\npartition 2: 1 2\nfree: 4\n";
        let parsed = parse_partition_report(text).unwrap();
        assert_eq!(parsed.partitions[0], (1, NodeSet::from([0, 3, 5])));
        assert_eq!(parsed.free, NodeSet::from([4]));
        let again = partition_report(parsed.partitions.iter().map(|(i, s)| (*i, s)), &parsed.free);
        assert_eq!(again, text);
        assert!(parse_partition_report("partition 1: 0\n").is_err());
        assert!(parse_partition_report("bogus\nfree: \n").is_err());
    }
}
