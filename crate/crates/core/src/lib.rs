//! Topology-aware synthesis of variational quantum circuits.
//!
//! The pipeline runs bottom-up: small sub-circuits are generated on connected
//! sub-graphs of a device coupling graph ([`subcircuit`]), scored for
//! expressibility and entangling capability ([`metrics`]), combined into an
//! ansatz that needs no SWAP insertion ([`builder`]), and trained as a quantum
//! neural network with optional growth and pruning ([`qnn`]). A greedy router
//! ([`topology::route`]) prices topology-oblivious baselines.

pub mod builder;
pub mod circuit;
pub mod error;
pub mod metrics;
pub mod qasm;
pub mod qnn;
pub mod rng;
pub mod sim;
pub mod subcircuit;
pub mod topology;

pub use circuit::{GateInstance, GateKind, ParamCircuit};
pub use error::{Error, ErrorClass, Result};
pub use sim::{Statevector, UnitaryMatrix};
