use std::collections::{BTreeMap, BTreeSet, VecDeque};

use super::{
    leader_election, select_candidate, Candidate, DcspOutcome, DcspPartition, Message, MessageKind, NodeState,
    PartitionStatus, TraceEvent,
};
use crate::comm_graph::CommGraph;
use crate::geometry::Deployment;
use crate::{BlockId, NodeId, NodeSet};

#[derive(Debug, Clone)]
pub(crate) struct PartitionRecord {
    pub leader: NodeId,
    pub status: PartitionStatus,
    pub members: NodeSet,
}

#[derive(Debug)]
enum Phase {
    Select {
        start: u64,
        heights: BTreeMap<NodeId, usize>,
        proposals: BTreeMap<NodeId, Option<Candidate>>,
    },
    Include {
        candidate: Candidate,
        arrival: u64,
    },
    Confirm {
        joined: Option<NodeId>,
        leader_arrival: u64,
    },
    Idle,
}

/// One tree being grown: a fresh partition rooted at its leader, or a repair
/// rooted at the parent of a failed node.
#[derive(Debug)]
pub(crate) struct Growth {
    pid: usize,
    leader: NodeId,
    root: NodeId,
    depth: BTreeMap<NodeId, usize>,
    kids: BTreeMap<NodeId, Vec<NodeId>>,
    covered: BTreeSet<BlockId>,
    phase: Phase,
    /// `Some(true)` once successful, `Some(false)` once dismantled.
    pub done: Option<bool>,
    iterations: usize,
    max_iterations: Option<usize>,
    scheduled: BTreeMap<u64, Vec<Message>>,
    pub added: Vec<NodeId>,
}

impl Growth {
    pub fn new(
        pid: usize,
        leader: NodeId,
        root: NodeId,
        covered: BTreeSet<BlockId>,
        max_iterations: Option<usize>,
    ) -> Self {
        Growth {
            pid,
            leader,
            root,
            depth: BTreeMap::from([(root, 0)]),
            kids: BTreeMap::from([(root, Vec::new())]),
            covered,
            phase: Phase::Idle,
            done: None,
            iterations: 0,
            max_iterations,
            scheduled: BTreeMap::new(),
            added: Vec::new(),
        }
    }

    fn schedule(&mut self, round: u64, msg: Message) {
        self.scheduled.entry(round).or_default().push(msg);
    }

    fn heights(&self) -> BTreeMap<NodeId, usize> {
        fn walk(g: &Growth, u: NodeId, out: &mut BTreeMap<NodeId, usize>) -> usize {
            let h = g.kids[&u].iter().map(|&c| walk(g, c, out) + 1).max().unwrap_or(0);
            out.insert(u, h);
            h
        }
        let mut out = BTreeMap::new();
        walk(self, self.root, &mut out);
        out
    }
}

/// Protocol state shared by initial partitioning, fault recovery and the
/// lifetime model.
#[derive(Debug, Clone)]
pub struct SimState<'a> {
    g: &'a CommGraph,
    dep: &'a Deployment,
    pub(crate) nodes: Vec<NodeState>,
    pub(crate) partitions: Vec<PartitionRecord>,
    pub(crate) round: u64,
    tx_per_node: Vec<u64>,
    tx_by_kind: [u64; 5],
    trace: Option<Vec<TraceEvent>>,
    check_each_round: bool,
}

impl<'a> SimState<'a> {
    pub fn new(g: &'a CommGraph, dep: &'a Deployment) -> Self {
        let nodes = dep
            .nodes
            .iter()
            .map(|n| NodeState::fresh(n.id, n.block, g.degree(n.id)))
            .collect();
        SimState {
            g,
            dep,
            nodes,
            partitions: Vec::new(),
            round: 0,
            tx_per_node: vec![0; dep.n()],
            tx_by_kind: [0; 5],
            trace: None,
            check_each_round: false,
        }
    }

    /// Records every transmission as a [`TraceEvent`].
    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    /// Runs [`SimState::check_invariants`] after every round and panics on a
    /// violation. Meant for tests.
    pub fn with_invariant_checks(mut self) -> Self {
        self.check_each_round = true;
        self
    }

    pub fn graph(&self) -> &'a CommGraph {
        self.g
    }

    pub fn deployment(&self) -> &'a Deployment {
        self.dep
    }

    pub fn node(&self, u: NodeId) -> &NodeState {
        &self.nodes[u]
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn trace_text(&self) -> String {
        self.trace().iter().map(|e| format!("{e}\n")).collect()
    }

    pub fn tx_total(&self) -> u64 {
        self.tx_by_kind.iter().sum()
    }

    pub fn tx_per_node(&self) -> &[u64] {
        &self.tx_per_node
    }

    /// Stable id (`1 + index`) of the active or growing partition holding `u`.
    pub fn partition_of(&self, u: NodeId) -> Option<usize> {
        self.partitions
            .iter()
            .position(|p| p.status != PartitionStatus::Dismantled && p.members.contains(&u))
            .map(|i| i + 1)
    }

    pub fn partition_members(&self, id: usize) -> Option<&NodeSet> {
        self.partitions.get(id.checked_sub(1)?).map(|p| &p.members)
    }

    pub fn partition_status(&self, id: usize) -> Option<PartitionStatus> {
        self.partitions.get(id.checked_sub(1)?).map(|p| p.status)
    }

    /// Ids of partitions currently providing a cover.
    pub fn active_partitions(&self) -> Vec<usize> {
        self.partitions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.status == PartitionStatus::Active)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Elects leaders and grows their partitions until every one has either
    /// covered all blocks or dismantled.
    pub fn run(&mut self, lp: f64, seed: u64) -> DcspOutcome {
        let leaders = leader_election(self.dep, lp, seed);
        self.run_with_leaders(&leaders)
    }

    /// Same as [`SimState::run`] with a fixed leader set, which must be
    /// sorted, duplicate free and not yet assigned.
    pub fn run_with_leaders(&mut self, leaders: &[NodeId]) -> DcspOutcome {
        let mut growths = Vec::with_capacity(leaders.len());
        for &l in leaders {
            let block = self.nodes[l].block;
            let covered = BTreeSet::from([block]);
            self.assign(l, l, None, &covered);
            self.nodes[l].is_leader = true;
            let pid = self.partitions.len();
            self.partitions.push(PartitionRecord {
                leader: l,
                status: PartitionStatus::Growing,
                members: NodeSet::from([l]),
            });
            growths.push(Growth::new(pid, l, l, covered, None));
        }
        for gr in &mut growths {
            self.start_growth(gr);
        }
        self.run_growths(&mut growths);
        self.outcome()
    }

    pub fn outcome(&self) -> DcspOutcome {
        let partitions = self
            .partitions
            .iter()
            .enumerate()
            .filter(|(_, p)| p.status == PartitionStatus::Active)
            .map(|(i, p)| DcspPartition {
                id: i + 1,
                leader: p.leader,
                members: p.members.clone(),
                parent: p
                    .members
                    .iter()
                    .filter_map(|&u| self.nodes[u].parent.map(|q| (u, q)))
                    .collect(),
            })
            .collect();
        DcspOutcome {
            partitions,
            failed_partition_count: self
                .partitions
                .iter()
                .filter(|p| p.status == PartitionStatus::Dismantled)
                .count(),
            free_nodes: self.nodes.iter().filter(|s| s.is_free()).map(|s| s.id).collect(),
            rounds: self.round,
            tx_per_node: self.tx_per_node.clone(),
            tx_total: self.tx_total(),
            tx_by_kind: MessageKind::ALL
                .iter()
                .map(|&k| (k, self.tx_by_kind[k.index()]))
                .collect(),
        }
    }

    pub(crate) fn transmit(&mut self, round: u64, msg: Message) {
        self.tx_per_node[msg.origin] += 1;
        self.tx_by_kind[msg.kind.index()] += 1;
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent { round, message: msg });
        }
    }

    /// Applies `f` to node `u`, keeping neighbours' free degrees in step.
    fn update_node(&mut self, u: NodeId, f: impl FnOnce(&mut NodeState)) {
        let before = self.nodes[u].is_free();
        f(&mut self.nodes[u]);
        let after = self.nodes[u].is_free();
        if before != after {
            for &v in self.g.neighbors(u) {
                let d = &mut self.nodes[v].free_degree;
                if after {
                    *d += 1;
                } else {
                    *d -= 1;
                }
            }
        }
    }

    fn assign(&mut self, u: NodeId, leader: NodeId, parent: Option<NodeId>, covered: &BTreeSet<BlockId>) {
        self.update_node(u, |s| {
            s.flag = true;
            s.block_status = true;
            s.leader_id = Some(leader);
            s.parent = parent;
            s.covered_blocks = covered.clone();
            s.covered_blocks.insert(s.block);
        });
        if let Some(p) = parent {
            self.nodes[p].children.insert(u);
        }
    }

    /// Returns `u` to the free pool (or leaves it dead), dropping all links.
    pub(crate) fn release(&mut self, u: NodeId) {
        if let Some(p) = self.nodes[u].parent {
            self.nodes[p].children.remove(&u);
        }
        self.update_node(u, |s| {
            s.flag = false;
            s.is_leader = false;
            s.block_status = false;
            s.leader_id = None;
            s.parent = None;
            s.children.clear();
            s.covered_blocks.clear();
        });
    }

    pub fn mark_dead(&mut self, u: NodeId) {
        self.update_node(u, |s| s.alive = false);
    }

    fn free_candidates(&self, u: NodeId) -> Vec<Candidate> {
        self.g
            .neighbors(u)
            .iter()
            .filter(|&&v| self.nodes[v].is_free())
            .map(|&v| Candidate {
                node: v,
                block: self.nodes[v].block,
                degree: self.nodes[v].free_degree,
                proposer: u,
            })
            .collect()
    }

    /// Tree distance from `from` to every node reachable over parent/child
    /// links, in BFS order.
    pub(crate) fn tree_distances(&self, from: NodeId) -> Vec<(NodeId, u64)> {
        let mut seen = BTreeSet::from([from]);
        let mut out = vec![(from, 0)];
        let mut queue = VecDeque::from([(from, 0u64)]);
        while let Some((u, d)) = queue.pop_front() {
            let s = &self.nodes[u];
            for v in s.parent.iter().chain(s.children.iter()) {
                if seen.insert(*v) {
                    out.push((*v, d + 1));
                    queue.push_back((*v, d + 1));
                }
            }
        }
        out
    }

    pub(crate) fn set_covered_blocks(&mut self, pid: usize, covered: &BTreeSet<BlockId>) {
        let members: Vec<NodeId> = self.partitions[pid].members.iter().copied().collect();
        for u in members {
            self.nodes[u].covered_blocks = covered.clone();
        }
    }

    pub(crate) fn start_growth(&mut self, gr: &mut Growth) {
        let r = self.round + 1;
        if gr.covered.len() == self.dep.grid.m() {
            gr.schedule(r, self.broadcast(MessageKind::Successful, gr.root, gr.leader));
            self.partitions[gr.pid].status = PartitionStatus::Active;
            gr.done = Some(true);
        } else {
            self.begin_iteration(gr, r, r);
        }
    }

    fn broadcast(&self, kind: MessageKind, origin: NodeId, leader: NodeId) -> Message {
        Message {
            kind,
            leader,
            origin,
            target: None,
            candidate: None,
        }
    }

    fn begin_iteration(&mut self, gr: &mut Growth, start: u64, now: u64) {
        if gr.max_iterations.is_some_and(|max| gr.iterations >= max) {
            self.fail(gr, now);
            return;
        }
        gr.phase = Phase::Select {
            start,
            heights: gr.heights(),
            proposals: BTreeMap::new(),
        };
    }

    /// Root broadcasts `Failed`; the whole partition is released and the
    /// notice is relayed once by every other member.
    fn fail(&mut self, gr: &mut Growth, r: u64) {
        self.transmit(r, self.broadcast(MessageKind::Failed, gr.root, gr.leader));
        let relays: Vec<(NodeId, u64)> = self
            .tree_distances(gr.root)
            .into_iter()
            .skip(1)
            .filter(|&(u, _)| self.nodes[u].alive)
            .collect();
        for (u, d) in relays {
            gr.schedule(r + d, self.broadcast(MessageKind::Failed, u, gr.leader));
        }
        let members: Vec<NodeId> = self.partitions[gr.pid].members.iter().copied().collect();
        for u in members {
            self.release(u);
        }
        self.partitions[gr.pid].members.clear();
        self.partitions[gr.pid].status = PartitionStatus::Dismantled;
        gr.phase = Phase::Idle;
        gr.done = Some(false);
    }

    pub(crate) fn run_growths(&mut self, growths: &mut [Growth]) {
        loop {
            if growths.iter().all(|g| g.done.is_some() && g.scheduled.is_empty()) {
                break;
            }
            self.round += 1;
            let r = self.round;
            for gr in growths.iter_mut() {
                if gr.done.is_none() {
                    self.select_step(gr, r);
                }
            }
            for gr in growths.iter_mut() {
                if let Some(txs) = gr.scheduled.remove(&r) {
                    for msg in txs {
                        self.transmit(r, msg);
                    }
                }
            }
            self.resolve_includes(growths, r);
            for gr in growths.iter_mut() {
                self.commit_step(gr, r);
            }
            if self.check_each_round {
                if let Err(e) = self.check_invariants() {
                    panic!("round {r}: {e}");
                }
            }
        }
    }

    /// Members whose subtree has reported forward their `SelectReq`; the root
    /// decides once its own children have reported.
    fn select_step(&mut self, gr: &mut Growth, r: u64) {
        let Phase::Select {
            start,
            heights,
            proposals,
        } = &mut gr.phase
        else {
            return;
        };
        if r < *start {
            return;
        }
        let offset = (r - *start) as usize;
        let due: Vec<NodeId> = heights.iter().filter(|(_, &h)| h == offset).map(|(&u, _)| u).collect();
        let mut decision = None;
        for u in due {
            let from_kids: Vec<Candidate> = gr.kids[&u]
                .iter()
                .filter_map(|c| proposals.get(c).copied().flatten())
                .collect();
            let own = self.free_candidates(u);
            let pick = select_candidate(&self.nodes[u], &own, &from_kids);
            if u == gr.root {
                decision = Some(pick);
            } else {
                let parent = self.nodes[u].parent.expect("non-root member has a parent");
                self.transmit(
                    r,
                    Message {
                        kind: MessageKind::SelectReq,
                        leader: gr.leader,
                        origin: u,
                        target: Some(parent),
                        candidate: pick.map(|c| c.node),
                    },
                );
                proposals.insert(u, pick);
            }
        }
        match decision {
            None => {}
            Some(None) => self.fail(gr, r),
            Some(Some(c)) => {
                for (&u, &d) in &gr.depth {
                    let msg = Message {
                        kind: MessageKind::Include,
                        leader: gr.leader,
                        origin: u,
                        target: (u == c.proposer).then_some(c.node),
                        candidate: Some(c.node),
                    };
                    gr.scheduled.entry(r + d as u64).or_default().push(msg);
                }
                gr.phase = Phase::Include {
                    candidate: c,
                    arrival: r + gr.depth[&c.proposer] as u64 + 1,
                };
            }
        }
    }

    /// A free candidate joins the inviting proposer with the lowest free
    /// degree (then lower leader id, then lower proposer id) among the
    /// invitations delivered this round; every other inviter is declined.
    fn resolve_includes(&mut self, growths: &mut [Growth], r: u64) {
        let mut by_candidate: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
        for (i, gr) in growths.iter().enumerate() {
            if let Phase::Include { candidate, arrival } = &gr.phase {
                if *arrival == r && gr.done.is_none() {
                    by_candidate.entry(candidate.node).or_default().push(i);
                }
            }
        }
        for (c, inviters) in by_candidate {
            let inviters: Vec<(usize, NodeId)> = inviters
                .into_iter()
                .map(|i| match &growths[i].phase {
                    Phase::Include { candidate, .. } => (i, candidate.proposer),
                    _ => unreachable!("grouped by Include phase"),
                })
                .collect();
            let winner = if self.nodes[c].is_free() {
                inviters
                    .iter()
                    .min_by_key(|&&(i, p)| (self.nodes[p].free_degree, growths[i].leader, p))
                    .map(|&(i, _)| i)
            } else {
                None
            };
            for (i, p) in inviters {
                let gr = &mut growths[i];
                let joined = if Some(i) == winner {
                    self.transmit(
                        r,
                        Message {
                            kind: MessageKind::Confirm,
                            leader: gr.leader,
                            origin: c,
                            target: Some(p),
                            candidate: Some(c),
                        },
                    );
                    Some(c)
                } else {
                    None
                };
                let leader_arrival = self.schedule_confirm_relays(gr, p, joined, r);
                if let Some(c) = joined {
                    let covered = gr.covered.clone();
                    self.assign(c, gr.leader, Some(p), &covered);
                    self.partitions[gr.pid].members.insert(c);
                    let d = gr.depth[&p] + 1;
                    gr.depth.insert(c, d);
                    gr.kids.insert(c, Vec::new());
                    gr.kids.get_mut(&p).expect("proposer is a member").push(c);
                    gr.added.push(c);
                }
                gr.phase = Phase::Confirm { joined, leader_arrival };
            }
        }
    }

    /// Confirmation (or refusal) relay: up the path from `p` to the root, then
    /// out to every other non-root member. Returns the round the root learns.
    fn schedule_confirm_relays(&self, gr: &mut Growth, p: NodeId, joined: Option<NodeId>, r: u64) -> u64 {
        let dp = gr.depth[&p] as u64;
        let leader_arrival = r + 1 + dp;
        let mut on_path = BTreeSet::new();
        let mut u = p;
        while u != gr.root {
            on_path.insert(u);
            let parent = self.nodes[u].parent.expect("non-root member has a parent");
            let msg = Message {
                kind: MessageKind::Confirm,
                leader: gr.leader,
                origin: u,
                target: Some(parent),
                candidate: joined,
            };
            gr.schedule(r + 1 + dp - gr.depth[&u] as u64, msg);
            u = parent;
        }
        let others: Vec<(NodeId, usize)> = gr
            .depth
            .iter()
            .filter(|(&v, _)| v != gr.root && !on_path.contains(&v))
            .map(|(&v, &d)| (v, d))
            .collect();
        for (v, d) in others {
            let msg = Message {
                kind: MessageKind::Confirm,
                leader: gr.leader,
                origin: v,
                target: None,
                candidate: joined,
            };
            gr.schedule(leader_arrival + d as u64, msg);
        }
        leader_arrival
    }

    fn commit_step(&mut self, gr: &mut Growth, r: u64) {
        let Phase::Confirm { joined, leader_arrival } = gr.phase else {
            return;
        };
        if leader_arrival != r || gr.done.is_some() {
            return;
        }
        gr.iterations += 1;
        if let Some(c) = joined {
            gr.covered.insert(self.nodes[c].block);
            let covered = gr.covered.clone();
            self.set_covered_blocks(gr.pid, &covered);
        }
        if gr.covered.len() == self.dep.grid.m() {
            self.transmit(r, self.broadcast(MessageKind::Successful, gr.root, gr.leader));
            self.partitions[gr.pid].status = PartitionStatus::Active;
            gr.phase = Phase::Idle;
            gr.done = Some(true);
        } else {
            let end = gr.scheduled.keys().next_back().copied().unwrap_or(r).max(r);
            self.begin_iteration(gr, end + 1, r);
        }
    }

    /// Structural invariants: per-node state, symmetric tree links, one
    /// partition per node, acyclic parent chains and connected member sets.
    pub fn check_invariants(&self) -> Result<(), String> {
        for s in &self.nodes {
            if !s.is_consistent() {
                return Err(format!("node {} has inconsistent state", s.id));
            }
            if let Some(p) = s.parent {
                if !self.nodes[p].children.contains(&s.id) || self.nodes[p].leader_id != s.leader_id {
                    return Err(format!("node {} and parent {p} disagree", s.id));
                }
            }
            for &c in &s.children {
                if self.nodes[c].parent != Some(s.id) {
                    return Err(format!("child {c} of {} points elsewhere", s.id));
                }
            }
            let free = self
                .g
                .neighbors(s.id)
                .iter()
                .filter(|&&v| self.nodes[v].is_free())
                .count();
            if free != s.free_degree {
                return Err(format!("node {} free degree {} != {free}", s.id, s.free_degree));
            }
        }
        let mut owner: BTreeMap<NodeId, usize> = BTreeMap::new();
        for (i, p) in self.partitions.iter().enumerate() {
            if p.status == PartitionStatus::Dismantled {
                if !p.members.is_empty() {
                    return Err(format!("dismantled partition {} still has members", i + 1));
                }
                continue;
            }
            for &u in &p.members {
                if let Some(other) = owner.insert(u, i) {
                    return Err(format!("node {u} in partitions {} and {}", other + 1, i + 1));
                }
                if !self.nodes[u].flag || self.nodes[u].leader_id != Some(p.leader) {
                    return Err(format!("node {u} does not know its partition {}", i + 1));
                }
                let mut hops = 0;
                let mut v = u;
                while let Some(q) = self.nodes[v].parent {
                    v = q;
                    hops += 1;
                    if hops > self.nodes.len() {
                        return Err(format!("parent chain from {u} cycles"));
                    }
                }
            }
            let sub = self.g.induced_subgraph(&p.members).map_err(|e| e.to_string())?;
            if !sub.is_connected() {
                return Err(format!("partition {} is disconnected", i + 1));
            }
        }
        Ok(())
    }
}
