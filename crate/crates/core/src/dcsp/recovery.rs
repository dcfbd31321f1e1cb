use std::collections::BTreeSet;

use super::engine::{Growth, SimState};
use super::{Message, MessageKind, PartitionStatus};
use crate::{Error, NodeId, NodeSet, Result};

/// Bound constant for a successful repair: at most `c·D²` transmissions, `D`
/// being the maximum degree of the communication graph.
///
/// A repair spends one `Failed` notice, at most `D` growth iterations of
/// `3k − 1` transmissions (`k ≤ D` tree members) and one `Successful`, which
/// is `2 + (3D² + D)/2 ≤ 4D²` for `D ≥ 1`.
pub const REPAIR_MESSAGE_FACTOR: u64 = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecoveryOutcome {
    Repaired {
        partition: usize,
        /// Free nodes recruited by the repair, in join order.
        added: Vec<NodeId>,
        /// Descendants of the failed node returned to the free pool.
        released: NodeSet,
        messages: u64,
    },
    Dismantled {
        partition: usize,
        freed: NodeSet,
        messages: u64,
    },
}

impl RecoveryOutcome {
    pub fn partition(&self) -> usize {
        match self {
            RecoveryOutcome::Repaired { partition, .. } | RecoveryOutcome::Dismantled { partition, .. } => *partition,
        }
    }

    pub fn messages(&self) -> u64 {
        match self {
            RecoveryOutcome::Repaired { messages, .. } | RecoveryOutcome::Dismantled { messages, .. } => *messages,
        }
    }
}

impl SimState<'_> {
    /// Handles the failure of `failed`, a member of an active partition.
    ///
    /// The failed node announces itself and dies. Its descendants are
    /// released; its parent then grows the remaining tree over free nodes,
    /// for at most `D` iterations, until every block is covered again. A
    /// failed leader, a dead parent or an unsuccessful repair dismantles the
    /// whole partition.
    pub fn recover(&mut self, failed: NodeId) -> Result<RecoveryOutcome> {
        let id = self
            .partition_of(failed)
            .filter(|&id| self.partition_status(id) == Some(PartitionStatus::Active))
            .ok_or_else(|| Error::invalid(format!("node {failed} is not in an active partition")))?;
        let pid = id - 1;
        let before = self.tx_total();
        let leader = self.partitions[pid].leader;

        self.round += 1;
        let r = self.round;
        self.transmit(
            r,
            Message {
                kind: MessageKind::Failed,
                leader,
                origin: failed,
                target: None,
                candidate: None,
            },
        );

        let parent = self.nodes[failed].parent;
        let q = match parent {
            Some(q) if failed != leader && self.nodes[q].alive => q,
            _ => {
                let freed = self.dismantle(pid, failed, r);
                return Ok(RecoveryOutcome::Dismantled {
                    partition: id,
                    freed,
                    messages: self.tx_total() - before,
                });
            }
        };

        let released = self.subtree(failed);
        self.release(failed);
        self.mark_dead(failed);
        self.partitions[pid].members.remove(&failed);
        for &u in released.iter().rev() {
            self.release(u);
            self.partitions[pid].members.remove(&u);
        }
        let released: NodeSet = released.into_iter().collect();

        let covered: BTreeSet<_> = self.partitions[pid]
            .members
            .iter()
            .map(|&u| self.nodes[u].block)
            .collect();
        self.set_covered_blocks(pid, &covered);

        let survivors = self.partitions[pid].members.clone();
        let max_iter = self.graph().max_degree();
        let mut growth = [Growth::new(pid, leader, q, covered, Some(max_iter))];
        self.start_growth(&mut growth[0]);
        self.run_growths(&mut growth);
        let messages = self.tx_total() - before;
        let [growth] = growth;
        if growth.done == Some(true) {
            Ok(RecoveryOutcome::Repaired {
                partition: id,
                added: growth.added,
                released,
                messages,
            })
        } else {
            let mut freed = released;
            freed.extend(survivors);
            freed.extend(growth.added);
            Ok(RecoveryOutcome::Dismantled {
                partition: id,
                freed,
                messages,
            })
        }
    }

    /// Descendants of `u` in BFS order, excluding `u`.
    fn subtree(&self, u: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut frontier: Vec<NodeId> = self.nodes[u].children.iter().copied().collect();
        while let Some(v) = frontier.pop() {
            out.push(v);
            frontier.extend(self.nodes[v].children.iter().copied());
        }
        out
    }

    /// Kills `failed` and frees the rest of its partition; survivors relay the
    /// `Failed` notice once each, in order of tree distance from `failed`.
    pub(crate) fn dismantle(&mut self, pid: usize, failed: NodeId, r: u64) -> NodeSet {
        let leader = self.partitions[pid].leader;
        let relays: Vec<(NodeId, u64)> = self
            .tree_distances(failed)
            .into_iter()
            .skip(1)
            .filter(|&(u, _)| self.nodes[u].alive)
            .collect();
        for (u, d) in relays {
            self.transmit(
                r + d,
                Message {
                    kind: MessageKind::Failed,
                    leader,
                    origin: u,
                    target: None,
                    candidate: None,
                },
            );
            self.round = self.round.max(r + d);
        }
        let members = std::mem::take(&mut self.partitions[pid].members);
        for &u in &members {
            self.release(u);
        }
        if self.nodes[failed].alive {
            self.mark_dead(failed);
        }
        self.partitions[pid].status = PartitionStatus::Dismantled;
        members.into_iter().filter(|&u| u != failed).collect()
    }
}
