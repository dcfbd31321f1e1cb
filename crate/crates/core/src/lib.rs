//! Connected set-cover partitioning for wireless sensor networks.
//!
//! The query region is overlaid with a virtual grid of square blocks whose
//! side is small enough that any node covers its whole block and reaches every
//! other node in the same block. A set of nodes is then a *connected 1-cover*
//! when it occupies every block and induces a connected communication graph.
//! The crate partitions a deployment into as many disjoint connected covers as
//! it can, either centrally ([`ccsp`]) or with a round-based simulation of a
//! leader-driven distributed protocol ([`dcsp`]), and provides the experiment
//! harness used to drive both ([`harness`]).
//!
//! ```
//! use cspart::{ccsp, comm_graph::CommGraph, geometry};
//!
//! let grid = geometry::make_grid_explicit(50.0, 50.0, 2, 2, 36.0, 36.0).unwrap();
//! let dep = geometry::deploy(120, &grid, 36.0, 36.0, 7);
//! let g = CommGraph::build(&dep);
//! let result = ccsp::ccsp_partition(&g, &dep);
//! for p in &result.partitions {
//!     assert!(cspart::comm_graph::is_connected_cover(&dep, &g, &p.members));
//! }
//! ```

pub mod ccsp;
pub mod cellgraph;
pub mod comm_graph;
pub mod dcsp;
pub mod geometry;
pub mod harness;

mod error;

pub use error::{Error, Result};

/// Dense node identifier, `0..n`.
pub type NodeId = usize;
/// Row-major block index, `0..m`.
pub type BlockId = usize;
/// Ordered node-id set.
pub type NodeSet = std::collections::BTreeSet<NodeId>;
