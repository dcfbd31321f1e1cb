//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported function builds a deployment from its arguments, runs one
//! algorithm and returns a JSON document for the page to draw. The plain
//! `*_json` functions hold the logic so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use cspart::ccsp::ccsp_partition;
use cspart::comm_graph::CommGraph;
use cspart::dcsp::{lifetime_simulation, EnergyConfig, SimState};
use cspart::geometry::{deploy, make_grid_explicit, Deployment};
use cspart::harness::election_seed;

#[derive(Debug, Clone, Copy)]
pub struct Field {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    pub range: f64,
    pub seed: u64,
}

/// Demo region side; matches the experiment campaign.
const REGION: f64 = 50.0;
/// Keeps the page responsive.
const MAX_NODES: usize = 2000;

#[derive(Serialize)]
struct NodeView {
    id: usize,
    x: f64,
    y: f64,
    block: usize,
}

#[derive(Serialize)]
struct GridView {
    width: f64,
    height: f64,
    rows: usize,
    cols: usize,
    block_side: f64,
    guarantee_ok: bool,
}

#[derive(Serialize)]
struct PartitionView {
    id: usize,
    members: Vec<usize>,
    /// `[child, parent]` links for tree-shaped partitions.
    links: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct PartitionResult {
    grid: GridView,
    nodes: Vec<NodeView>,
    density: f64,
    partitions: Vec<PartitionView>,
    free: Vec<usize>,
    transmissions: u64,
    rounds: u64,
    dismantled: usize,
}

#[derive(Serialize)]
struct LifetimeResult {
    lifetime_rounds: u64,
    initial_partitions: usize,
    messages: u64,
    repairs: usize,
    dismantles: usize,
    service_rounds: Vec<[u64; 2]>,
}

fn field(f: Field) -> Result<(Deployment, CommGraph), String> {
    if f.n > MAX_NODES {
        return Err(format!("at most {MAX_NODES} nodes are supported in the demo"));
    }
    let grid = make_grid_explicit(REGION, REGION, f.rows, f.cols, f.range, f.range).map_err(|e| e.to_string())?;
    let dep = deploy(f.n, &grid, f.range, f.range, f.seed);
    let g = CommGraph::build(&dep);
    Ok((dep, g))
}

fn base_view(dep: &Deployment, g: &CommGraph) -> PartitionResult {
    let grid = &dep.grid;
    PartitionResult {
        grid: GridView {
            width: grid.region_width,
            height: grid.region_height,
            rows: grid.rows,
            cols: grid.cols,
            block_side: grid.block_side,
            guarantee_ok: grid.guarantee_ok,
        },
        nodes: dep
            .nodes
            .iter()
            .map(|n| NodeView {
                id: n.id,
                x: n.x,
                y: n.y,
                block: n.block,
            })
            .collect(),
        density: g.mean_degree(),
        partitions: Vec::new(),
        free: Vec::new(),
        transmissions: 0,
        rounds: 0,
        dismantled: 0,
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

pub fn ccsp_json(f: Field) -> Result<String, String> {
    let (dep, g) = field(f)?;
    let res = ccsp_partition(&g, &dep);
    let mut view = base_view(&dep, &g);
    view.partitions = res
        .partitions
        .iter()
        .map(|p| PartitionView {
            id: p.id,
            members: p.members.iter().copied().collect(),
            links: p.realizing_edges.iter().map(|e| [e.pair.0, e.pair.1]).collect(),
        })
        .collect();
    view.free = res.free_nodes.into_iter().collect();
    to_json(&view)
}

pub fn dcsp_json(f: Field, lp: f64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&lp) {
        return Err(format!("leader probability {lp} is not in [0, 1]"));
    }
    let (dep, g) = field(f)?;
    let out = SimState::new(&g, &dep).run(lp, election_seed(f.seed));
    let mut view = base_view(&dep, &g);
    view.partitions = out
        .partitions
        .iter()
        .map(|p| PartitionView {
            id: p.id,
            members: p.members.iter().copied().collect(),
            links: p.parent.iter().map(|(&c, &q)| [c, q]).collect(),
        })
        .collect();
    view.free = out.free_nodes.into_iter().collect();
    view.transmissions = out.tx_total;
    view.rounds = out.rounds;
    view.dismantled = out.failed_partition_count;
    to_json(&view)
}

pub fn lifetime_json(f: Field, lp: f64, energy: EnergyConfig) -> Result<String, String> {
    let (dep, g) = field(f)?;
    let rep = lifetime_simulation(&g, &dep, lp, &energy, election_seed(f.seed)).map_err(|e| e.to_string())?;
    to_json(&LifetimeResult {
        lifetime_rounds: rep.lifetime_rounds,
        initial_partitions: rep.initial_partitions,
        messages: rep.messages,
        repairs: rep.repairs,
        dismantles: rep.dismantles,
        service_rounds: rep.service_rounds.iter().map(|(&id, &r)| [id as u64, r]).collect(),
    })
}

fn js(r: Result<String, String>) -> Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e))
}

/// Centralized partitioning; `links` are the node pairs realizing each
/// spanning-tree edge.
#[wasm_bindgen]
pub fn run_ccsp(n: usize, rows: usize, cols: usize, range: f64, seed: u32) -> Result<String, JsValue> {
    js(ccsp_json(Field {
        n,
        rows,
        cols,
        range,
        seed: seed.into(),
    }))
}

/// Distributed protocol; `links` are the partition trees.
#[wasm_bindgen]
pub fn run_dcsp(n: usize, rows: usize, cols: usize, range: f64, lp: f64, seed: u32) -> Result<String, JsValue> {
    js(dcsp_json(
        Field {
            n,
            rows,
            cols,
            range,
            seed: seed.into(),
        },
        lp,
    ))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn run_lifetime(
    n: usize,
    rows: usize,
    cols: usize,
    range: f64,
    lp: f64,
    seed: u32,
    initial_energy: f64,
    tx_cost: f64,
) -> Result<String, JsValue> {
    let energy = EnergyConfig {
        initial_energy,
        tx_cost,
        ..EnergyConfig::default()
    };
    js(lifetime_json(
        Field {
            n,
            rows,
            cols,
            range,
            seed: seed.into(),
        },
        lp,
        energy,
    ))
}
