//! Random generation of topology-compatible sub-circuits and the scored
//! library they are collected into.

mod generate;
mod library;

pub use generate::{compatible_gate_set, generate_subcircuit, GateCandidate, GenOptions};
pub use library::{
    build_library, library_from_json, library_to_json, load_library, save_library, score, Library, LibraryConfig,
    SubCircuit, SCHEMA_VERSION,
};
