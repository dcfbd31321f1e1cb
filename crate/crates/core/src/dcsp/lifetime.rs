use std::collections::BTreeMap;

use super::engine::SimState;
use super::RecoveryOutcome;
use crate::comm_graph::CommGraph;
use crate::geometry::Deployment;
use crate::{Error, NodeId, Result};

/// Energy bookkeeping for the lifetime model. All quantities are in the same
/// abstract unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyConfig {
    pub initial_energy: f64,
    /// Drained from every member of the serving partition each round.
    pub active_cost: f64,
    /// Drained from a node for each of its transmissions.
    pub tx_cost: f64,
    /// A node at or below this level is considered failed.
    pub threshold: f64,
    /// Rounds a partition serves before handing over.
    pub epoch_len: u64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            initial_energy: 100.0,
            active_cost: 1.0,
            tx_cost: 0.01,
            threshold: 5.0,
            epoch_len: 10,
        }
    }
}

impl EnergyConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.initial_energy, self.active_cost, self.tx_cost, self.threshold]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid("energy parameters must be finite"));
        }
        if self.initial_energy <= 0.0 {
            return Err(Error::invalid("initial energy must be positive"));
        }
        if self.active_cost <= 0.0 {
            return Err(Error::invalid("active cost must be positive"));
        }
        if self.tx_cost < 0.0 {
            return Err(Error::invalid("transmission cost must be non-negative"));
        }
        if self.threshold < 0.0 || self.threshold >= self.initial_energy {
            return Err(Error::invalid("threshold must lie in [0, initial energy)"));
        }
        if self.epoch_len == 0 {
            return Err(Error::invalid("epoch length must be at least 1"));
        }
        Ok(())
    }

    /// Service rounds per partition when no messages are charged.
    pub fn rounds_per_partition(&self) -> f64 {
        (self.initial_energy - self.threshold) / self.active_cost
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifetimeReport {
    /// Rounds during which some partition provided full coverage.
    pub lifetime_rounds: u64,
    pub initial_partitions: usize,
    /// Nodes belonging to those partitions.
    pub initial_active_nodes: usize,
    /// Protocol rounds spent in the initial partitioning.
    pub setup_rounds: u64,
    /// Protocol rounds spent on repairs and dismantling.
    pub recovery_rounds: u64,
    /// Every transmission, setup included.
    pub messages: u64,
    pub repairs: usize,
    pub dismantles: usize,
    /// Service rounds per partition id.
    pub service_rounds: BTreeMap<usize, u64>,
}

const EPS: f64 = 1e-9;

/// Partitions the network with the distributed protocol, then lets the
/// surviving partitions serve in round-robin epochs until none is left.
///
/// Each service round the active partition's members pay `active_cost`, and
/// every transmission (setup and repairs included) costs its sender
/// `tx_cost`. Nodes reaching the threshold die; those belonging to a
/// partition are handed to [`SimState::recover`] in ascending id order. A
/// partition that dismantles mid-epoch hands over at once.
pub fn lifetime_simulation(
    g: &CommGraph,
    dep: &Deployment,
    lp: f64,
    cfg: &EnergyConfig,
    seed: u64,
) -> Result<LifetimeReport> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&lp) {
        return Err(Error::invalid(format!("leader probability {lp} is not in [0, 1]")));
    }
    let mut sim = SimState::new(g, dep);
    let setup = sim.run(lp, seed);
    for s in &mut sim.nodes {
        s.energy = cfg.initial_energy;
    }
    let mut charged = vec![0u64; dep.n()];
    charge_transmissions(&mut sim, &mut charged, cfg);

    let mut report = LifetimeReport {
        lifetime_rounds: 0,
        initial_partitions: setup.partitions.len(),
        initial_active_nodes: setup.partitions.iter().map(|p| p.members.len()).sum(),
        setup_rounds: setup.rounds,
        recovery_rounds: 0,
        messages: 0,
        repairs: 0,
        dismantles: 0,
        service_rounds: setup.partitions.iter().map(|p| (p.id, 0)).collect(),
    };

    let mut current: Option<usize> = None;
    let mut served_in_epoch = 0u64;
    loop {
        let active = sim.active_partitions();
        if active.is_empty() {
            break;
        }
        let still_active = current.is_some_and(|c| active.contains(&c));
        if !still_active || served_in_epoch >= cfg.epoch_len {
            let next = match current {
                Some(c) => active.iter().copied().find(|&id| id > c).unwrap_or(active[0]),
                None => active[0],
            };
            current = Some(next);
            served_in_epoch = 0;
        }
        let id = current.expect("a partition was chosen");

        report.lifetime_rounds += 1;
        served_in_epoch += 1;
        *report.service_rounds.entry(id).or_default() += 1;
        let members: Vec<NodeId> = sim.partition_members(id).into_iter().flatten().copied().collect();
        for u in members {
            sim.nodes[u].energy -= cfg.active_cost;
        }

        let protocol_start = sim.round;
        loop {
            let depleted: Vec<NodeId> = sim
                .nodes
                .iter()
                .filter(|s| s.alive && s.energy <= cfg.threshold + EPS)
                .map(|s| s.id)
                .collect();
            if depleted.is_empty() {
                break;
            }
            for &u in &depleted {
                sim.mark_dead(u);
            }
            for u in depleted {
                if sim.partition_of(u).is_none() {
                    continue;
                }
                match sim.recover(u)? {
                    RecoveryOutcome::Repaired { .. } => report.repairs += 1,
                    RecoveryOutcome::Dismantled { .. } => report.dismantles += 1,
                }
            }
            charge_transmissions(&mut sim, &mut charged, cfg);
        }
        report.recovery_rounds += sim.round - protocol_start;
    }
    report.messages = sim.tx_total();
    Ok(report)
}

fn charge_transmissions(sim: &mut SimState<'_>, charged: &mut [u64], cfg: &EnergyConfig) {
    let counts = sim.tx_per_node().to_vec();
    for (u, &count) in counts.iter().enumerate() {
        let fresh = count - charged[u];
        if fresh > 0 {
            sim.nodes[u].energy -= fresh as f64 * cfg.tx_cost;
            charged[u] = count;
        }
    }
}
