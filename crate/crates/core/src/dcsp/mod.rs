//! Round-based simulation of the distributed partitioning protocol.
//!
//! Nodes elect themselves leaders with probability `L_P`. Every leader grows
//! a tree-shaped partition one node per iteration:
//!
//! 1. `SelectReq` convergecast: each non-leader member, once it has heard from
//!    all of its children, forwards its preferred free candidate to its parent.
//! 2. The leader picks a candidate and floods `Include` down the tree; the
//!    proposing member's transmission also reaches the candidate.
//! 3. The candidate answers with `Confirm` (choosing among simultaneous
//!    invitations) and the confirmation is relayed through the partition.
//!
//! With `k` members an iteration costs `(k − 1) + k + k = 3k − 1` transmissions
//! when nothing contends. A leader that runs out of candidates broadcasts
//! `Failed` and its partition dismantles; one whose partition occupies every
//! block broadcasts `Successful` and freezes.
//!
//! Timing is lockstep: a transmission made in round `r` is acted upon in round
//! `r + 1`. Within a partition the member set, depths and covered blocks are
//! treated as shared knowledge once a confirmation has been relayed.

mod engine;
mod lifetime;
mod recovery;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::comm_graph::CommGraph;
use crate::geometry::Deployment;
use crate::{BlockId, NodeId, NodeSet};

pub use engine::SimState;
pub use lifetime::{lifetime_simulation, EnergyConfig, LifetimeReport};
pub use recovery::{RecoveryOutcome, REPAIR_MESSAGE_FACTOR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MessageKind {
    SelectReq,
    Include,
    Confirm,
    Failed,
    Successful,
}

impl MessageKind {
    pub const ALL: [MessageKind; 5] = [
        MessageKind::SelectReq,
        MessageKind::Include,
        MessageKind::Confirm,
        MessageKind::Failed,
        MessageKind::Successful,
    ];

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MessageKind::SelectReq => "SelectReq",
            MessageKind::Include => "Include",
            MessageKind::Confirm => "Confirm",
            MessageKind::Failed => "Failed",
            MessageKind::Successful => "Successful",
        };
        f.write_str(s)
    }
}

/// One radio transmission.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub kind: MessageKind,
    pub leader: NodeId,
    pub origin: NodeId,
    /// `None` for a local broadcast.
    pub target: Option<NodeId>,
    /// The proposed node; absent for "no candidate" and for a declined
    /// confirmation.
    pub candidate: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub round: u64,
    pub message: Message,
}

impl fmt::Display for TraceEvent {
    /// `round <r> tx <kind> <from>-><to> L=<leader> k=<candidate>`; `*` marks
    /// a broadcast and `-` a missing candidate.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.message;
        let to = m.target.map_or_else(|| "*".to_string(), |t| t.to_string());
        let k = m.candidate.map_or_else(|| "-".to_string(), |c| c.to_string());
        write!(
            f,
            "round {} tx {} {}->{} L={} k={}",
            self.round, m.kind, m.origin, to, m.leader, k
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub id: NodeId,
    pub block: BlockId,
    /// Assigned to a partition.
    pub flag: bool,
    pub is_leader: bool,
    pub leader_id: Option<NodeId>,
    pub parent: Option<NodeId>,
    pub children: BTreeSet<NodeId>,
    pub block_status: bool,
    /// Blocks the node's partition is known to occupy.
    pub covered_blocks: BTreeSet<BlockId>,
    /// Alive, unassigned neighbours.
    pub free_degree: usize,
    pub energy: f64,
    pub alive: bool,
}

impl NodeState {
    fn fresh(id: NodeId, block: BlockId, degree: usize) -> Self {
        NodeState {
            id,
            block,
            flag: false,
            is_leader: false,
            leader_id: None,
            parent: None,
            children: BTreeSet::new(),
            block_status: false,
            covered_blocks: BTreeSet::new(),
            free_degree: degree,
            energy: 0.0,
            alive: true,
        }
    }

    pub fn is_free(&self) -> bool {
        self.alive && !self.flag
    }

    /// Checks the per-node state invariants.
    pub fn is_consistent(&self) -> bool {
        let unassigned_ok =
            self.flag || (self.parent.is_none() && self.leader_id.is_none() && self.children.is_empty());
        let leader_ok = !self.is_leader || (self.flag && self.parent.is_none());
        let status_ok = !self.block_status || self.flag;
        unassigned_ok && leader_ok && status_ok
    }
}

/// A node offered for inclusion, with the member that can reach it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub node: NodeId,
    pub block: BlockId,
    pub degree: usize,
    pub proposer: NodeId,
}

/// Chooses among the member's own free neighbours and its children's
/// proposals. Candidates in blocks the partition does not occupy yet win;
/// within the winning class the lowest free degree is taken, then the lowest
/// node id, then the lowest proposer id.
pub fn select_candidate(
    state: &NodeState,
    own_neighbors: &[Candidate],
    child_proposals: &[Candidate],
) -> Option<Candidate> {
    own_neighbors
        .iter()
        .chain(child_proposals)
        .min_by_key(|c| (state.covered_blocks.contains(&c.block), c.degree, c.node, c.proposer))
        .copied()
}

/// Each node draws `R ~ U[0,1)` in id order and leads when `R < L_P`.
pub fn leader_election(dep: &Deployment, lp: f64, seed: u64) -> Vec<NodeId> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dep.n()).filter(|_| rng.gen::<f64>() < lp).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionStatus {
    Growing,
    /// Occupies every block; this is the only status that counts as a cover.
    Active,
    Dismantled,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcspPartition {
    pub id: usize,
    pub leader: NodeId,
    pub members: NodeSet,
    /// Tree links `child -> parent`.
    pub parent: BTreeMap<NodeId, NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DcspOutcome {
    pub partitions: Vec<DcspPartition>,
    pub failed_partition_count: usize,
    pub free_nodes: NodeSet,
    pub rounds: u64,
    pub tx_per_node: Vec<u64>,
    pub tx_total: u64,
    pub tx_by_kind: BTreeMap<MessageKind, u64>,
}

impl DcspOutcome {
    /// Transmissions spent growing partitions: `SelectReq`, `Include` and
    /// `Confirm`.
    pub fn growth_tx(&self) -> u64 {
        [MessageKind::SelectReq, MessageKind::Include, MessageKind::Confirm]
            .iter()
            .map(|k| self.tx_by_kind.get(k).copied().unwrap_or(0))
            .sum()
    }

    pub fn partition_sets(&self) -> Vec<NodeSet> {
        self.partitions.iter().map(|p| p.members.clone()).collect()
    }

    pub fn report(&self) -> String {
        crate::ccsp::partition_report(self.partitions.iter().map(|p| (p.id, &p.members)), &self.free_nodes)
    }
}

/// Transmissions for one leader growing alone from 1 to `size` members.
pub fn isolated_growth_cost(size: usize) -> u64 {
    (1..size as u64).map(|k| 3 * k - 1).sum()
}

/// Elects leaders and runs the protocol to quiescence.
pub fn run_dcsp(g: &CommGraph, dep: &Deployment, lp: f64, seed: u64) -> DcspOutcome {
    let mut sim = SimState::new(g, dep);
    sim.run(lp, seed)
}
