//! Assembles library sub-circuits into a device-compatible ansatz and refines
//! it by stitching, growing and pruning. Every operation keeps all two-qubit
//! gates on device edges, so routing never needs a SWAP.

mod ansatz;
mod baseline;
mod combine;
mod grow;
mod prune;
mod stitch;

pub use ansatz::{Ansatz, Block, BlockSource, Stage, StitchKind};
pub use baseline::{layered_circuit, layers_for, random_circuit};
pub use combine::{combine, select_target_qubits, CombineOptions, Placement, SelectionPolicy};
pub use grow::{grow, GrowEvent};
pub use prune::{prune, prune_loop, prune_smallest, PruneLoopOutcome, PruneOutcome, PruneStep, RemovedGate};
pub use stitch::{stitch, StitchOutcome, StitchPlacement};
