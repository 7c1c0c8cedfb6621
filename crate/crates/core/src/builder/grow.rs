use serde::{Deserialize, Serialize};

use super::ansatz::{Ansatz, Block, BlockSource, Stage};
use crate::error::{Error, Result};
use crate::subcircuit::Library;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GrowEvent {
    pub entry_id: usize,
    /// Logical qubits the new block acts on.
    pub qubits: Vec<usize>,
    pub new_params: usize,
}

/// Appends one appendable library entry at the end of the ansatz, on the
/// least-loaded region it fits. Its parameters come last in the parameter
/// vector; starting them at zero leaves the circuit's action unchanged.
pub fn grow(ansatz: &Ansatz, library: &Library, rng: &mut impl rand::Rng) -> Result<(Ansatz, GrowEvent)> {
    let device = ansatz.device();
    let mapping = ansatz.mapping();
    let counts = ansatz.circuit().gate_counts_per_qubit();

    // (region, entry id, local → logical) for every appendable fit.
    let mut fits: Vec<(usize, usize, Vec<usize>)> = Vec::new();
    for (r, region) in ansatz.regions().iter().enumerate() {
        let physical: Vec<usize> = region.iter().map(|&q| mapping.physical(q)).collect();
        for e in library.appendable() {
            if e.template.qubit_count != region.len() {
                continue;
            }
            if let Some(emb) = e.template.embed(&physical, device) {
                let logical = emb
                    .iter()
                    .map(|p| region[physical.iter().position(|x| x == p).expect("region qubit")])
                    .collect();
                fits.push((r, e.id, logical));
            }
        }
    }
    if fits.is_empty() {
        return Err(Error::NoAppendable);
    }
    // Entries that add trainable angles are preferred over parameter-free ones.
    if fits.iter().any(|(_, id, _)| library.entries[*id].param_count() > 0) {
        fits.retain(|(_, id, _)| library.entries[*id].param_count() > 0);
    }
    let load = |r: usize| {
        let q = &ansatz.regions()[r];
        q.iter().map(|&x| counts[x]).sum::<usize>() as f64 / q.len() as f64
    };
    let target = fits
        .iter()
        .map(|(r, _, _)| *r)
        .min_by(|&a, &b| load(a).total_cmp(&load(b)).then(a.cmp(&b)))
        .expect("non-empty");
    fits.retain(|(r, _, _)| *r == target);
    let (_, id, qubits) = fits.swap_remove(rng.random_range(0..fits.len()));

    let circuit = library.entries[id].circuit.clone();
    let event = GrowEvent {
        entry_id: id,
        qubits: qubits.clone(),
        new_params: circuit.num_params(),
    };
    let mut blocks = ansatz.blocks().to_vec();
    blocks.push(Block {
        source: BlockSource::Library { id },
        stage: Stage::Grow,
        qubits,
        circuit,
    });
    Ok((ansatz.with_blocks(blocks)?, event))
}
