//! Brute-force reference implementations shared by the integration tests.
//! They are deliberately naive: exhaustive enumeration over tiny inputs.

#![allow(dead_code)]

use cspart::cellgraph::WeightedCellGraph;
use cspart::comm_graph::{is_connected_cover, CommGraph};
use cspart::geometry::Deployment;
use cspart::NodeSet;

/// Largest set of pairwise vertex-disjoint edges, by trying every subset.
pub fn max_matching_exhaustive(edges: &[(usize, usize)]) -> usize {
    assert!(edges.len() <= 20, "exhaustive matching is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << edges.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let mut used = std::collections::BTreeSet::new();
        let ok = edges
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .all(|(_, &(u, v))| used.insert((0, u)) && used.insert((1, v)));
        if ok {
            best = size;
        }
    }
    best
}

fn spans(m: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            x = p[x];
        }
        x
    }
    let mut parts = m;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            parts -= 1;
        }
    }
    parts == 1
}

/// Heaviest spanning tree over positive-weight block pairs, by enumerating
/// every (m−1)-subset of them. `None` when no subset spans.
pub fn max_spanning_weight_exhaustive(w: &WeightedCellGraph) -> Option<usize> {
    let m = w.m();
    if m == 0 {
        return None;
    }
    if m == 1 {
        return Some(0);
    }
    let mut pairs = Vec::new();
    for i in 0..m {
        for j in (i + 1)..m {
            if w.weight(i, j) > 0 {
                pairs.push((i, j));
            }
        }
    }
    let mut best = None;
    let mut chosen = Vec::new();
    fn rec(
        pairs: &[(usize, usize)],
        start: usize,
        need: usize,
        m: usize,
        chosen: &mut Vec<(usize, usize)>,
        w: &WeightedCellGraph,
        best: &mut Option<usize>,
    ) {
        if chosen.len() == need {
            if spans(m, chosen) {
                let total = chosen.iter().map(|&(i, j)| w.weight(i, j)).sum();
                *best = Some(best.map_or(total, |b: usize| b.max(total)));
            }
            return;
        }
        for k in start..pairs.len() {
            chosen.push(pairs[k]);
            rec(pairs, k + 1, need, m, chosen, w, best);
            chosen.pop();
        }
    }
    rec(&pairs, 0, m - 1, m, &mut chosen, w, &mut best);
    best
}

/// Connected covers that contain no smaller connected cover.
pub fn minimal_covers(dep: &Deployment, g: &CommGraph) -> Vec<u32> {
    let n = dep.n();
    assert!(n <= 20, "exhaustive cover search is exponential");
    let mut covers: Vec<u32> = Vec::new();
    let mut masks: Vec<u32> = (1u32..(1 << n)).collect();
    masks.sort_by_key(|m| m.count_ones());
    for mask in masks {
        if covers.iter().any(|&c| c & !mask == 0) {
            continue;
        }
        let members: NodeSet = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        if is_connected_cover(dep, g, &members) {
            covers.push(mask);
        }
    }
    covers
}

/// Maximum number of pairwise disjoint connected covers.
pub fn optimal_partition_count(dep: &Deployment, g: &CommGraph) -> usize {
    let covers = minimal_covers(dep, g);
    fn best(covers: &[u32], used: u32, from: usize, count: usize, top: &mut usize) {
        *top = (*top).max(count);
        for k in from..covers.len() {
            if covers[k] & used == 0 {
                best(covers, used | covers[k], k + 1, count + 1, top);
            }
        }
    }
    let mut top = 0;
    best(&covers, 0, 0, 0, &mut top);
    top
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return if vx == vy { 1.0 } else { 0.0 };
    }
    cov / (vx * vy).sqrt()
}
