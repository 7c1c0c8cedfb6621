//! Device coupling graphs, sub-graph selection, compatibility checks, and a
//! SWAP-inserting router for pricing topology-oblivious circuits.

mod graph;
mod routing;
mod subgraph;

pub use graph::{load_topology, load_topology_file, CouplingGraph};
pub use routing::{compiled_stats, decompose_swaps, is_compatible, route, CompiledStats, PhysicalMapping, Routed};
pub use subgraph::{enumerate_subgraphs, partition_qubits, Partition, Subgraph, SubgraphTemplate};
