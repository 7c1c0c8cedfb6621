use rand::Rng;

use crate::circuit::{GateKind, ParamCircuit};

const ROTATIONS: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];

/// Topology-oblivious circuit of `gates` gates on `n` qubits. Each gate is
/// drawn uniformly from all rotation placements and all ordered CNOT pairs,
/// as if the device were fully connected.
pub fn random_circuit(n: usize, gates: usize, rng: &mut impl Rng) -> ParamCircuit {
    let rotations = 3 * n;
    let pairs = if n > 1 { n * (n - 1) } else { 0 };
    let mut c = ParamCircuit::new(n);
    for _ in 0..gates {
        let k = rng.random_range(0..rotations + pairs);
        if k < rotations {
            c.push_rotation(ROTATIONS[k % 3], k / 3).expect("qubit in range");
        } else {
            let p = k - rotations;
            let a = p / (n - 1);
            let mut b = p % (n - 1);
            if b >= a {
                b += 1;
            }
            c.cx(a, b);
        }
    }
    c
}

/// Hardware-efficient layered circuit: per layer an RY on every qubit, then a
/// CNOT ladder 0→1→…→n-1.
pub fn layered_circuit(n: usize, layers: usize) -> ParamCircuit {
    let mut c = ParamCircuit::new(n);
    for _ in 0..layers {
        for q in 0..n {
            c.ry(q);
        }
        for q in 1..n {
            c.cx(q - 1, q);
        }
    }
    c
}

/// Fewest layers whose gate count reaches `gates`.
pub fn layers_for(n: usize, gates: usize) -> usize {
    let per_layer = (2 * n).saturating_sub(1).max(1);
    gates.div_ceil(per_layer).max(1)
}
