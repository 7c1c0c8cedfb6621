use serde::{Deserialize, Serialize};

use crate::circuit::{simplify, GateInstance, GateKind, ParamCircuit};
use crate::topology::SubgraphTemplate;

/// A gate kind on concrete local qubits, before a parameter slot is assigned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateCandidate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GenOptions {
    /// Adds fixed `h` and `sx` gates to the candidate set.
    pub include_fixed_gates: bool,
}

/// Rotations on every local qubit and CNOTs in both directions on every edge.
pub fn compatible_gate_set(template: &SubgraphTemplate, options: GenOptions) -> Vec<GateCandidate> {
    let mut kinds = GateKind::ROTATIONS.to_vec();
    if options.include_fixed_gates {
        kinds.extend([GateKind::H, GateKind::Sx]);
    }
    let mut out = Vec::new();
    for kind in kinds {
        for q in 0..template.qubit_count {
            out.push(GateCandidate { kind, qubits: vec![q] });
        }
    }
    for &(a, b) in &template.edges {
        out.push(GateCandidate {
            kind: GateKind::Cnot,
            qubits: vec![a, b],
        });
        out.push(GateCandidate {
            kind: GateKind::Cnot,
            qubits: vec![b, a],
        });
    }
    out
}

/// Random sub-circuit on `template`. Each step draws a gate kind uniformly,
/// drops locations where the same gate already ends one of the wires, and
/// places it on the least-used location (ties broken uniformly). Gates are
/// added while the depth is at most `depth_limit`, so the result has depth at
/// most `depth_limit + 1`. The circuit is simplified before returning.
pub fn generate_subcircuit(
    template: &SubgraphTemplate,
    depth_limit: usize,
    options: GenOptions,
    rng: &mut impl rand::Rng,
) -> ParamCircuit {
    let candidates = compatible_gate_set(template, options);
    let mut kinds: Vec<GateKind> = Vec::new();
    for c in &candidates {
        if !kinds.contains(&c.kind) {
            kinds.push(c.kind);
        }
    }
    let width = template.qubit_count;
    let mut circuit = ParamCircuit::new(width);
    let mut last: Vec<Option<GateCandidate>> = vec![None; width];
    let mut counts = vec![0usize; width];
    let max_draws = 64 * (depth_limit + 1) * width.max(2);

    for _ in 0..max_draws {
        if circuit.depth() > depth_limit {
            break;
        }
        let kind = kinds[rng.random_range(0..kinds.len())];
        let valid: Vec<&GateCandidate> = candidates
            .iter()
            .filter(|c| c.kind == kind && c.qubits.iter().all(|&q| last[q].as_ref() != Some(*c)))
            .collect();
        let Some(least) = valid.iter().map(|c| load(c, &counts)).min() else {
            continue;
        };
        let ties: Vec<&GateCandidate> = valid.into_iter().filter(|c| load(c, &counts) == least).collect();
        let pick = ties[rng.random_range(0..ties.len())].clone();
        if kind.is_parameterized() {
            circuit.push_rotation(kind, pick.qubits[0]).expect("local qubit");
        } else {
            circuit
                .push(GateInstance {
                    kind,
                    qubits: pick.qubits.clone(),
                    param: None,
                })
                .expect("local qubits");
        }
        for &q in &pick.qubits {
            counts[q] += 1;
            last[q] = Some(pick.clone());
        }
    }
    simplify(&circuit)
}

fn load(c: &GateCandidate, counts: &[usize]) -> usize {
    c.qubits.iter().map(|&q| counts[q]).sum()
}
