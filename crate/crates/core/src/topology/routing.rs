use serde::{Deserialize, Serialize};

use super::graph::CouplingGraph;
use crate::circuit::{GateInstance, GateKind, ParamCircuit};
use crate::error::{Error, Result};

/// Injective placement of logical qubits onto physical qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMapping", into = "RawMapping")]
pub struct PhysicalMapping {
    physical: Vec<usize>,
    device_size: usize,
}

#[derive(Serialize, Deserialize)]
struct RawMapping {
    physical: Vec<usize>,
    device_size: usize,
}

impl TryFrom<RawMapping> for PhysicalMapping {
    type Error = Error;
    fn try_from(r: RawMapping) -> Result<Self> {
        PhysicalMapping::new(r.physical, r.device_size)
    }
}

impl From<PhysicalMapping> for RawMapping {
    fn from(m: PhysicalMapping) -> Self {
        RawMapping {
            physical: m.physical,
            device_size: m.device_size,
        }
    }
}

impl PhysicalMapping {
    pub fn new(physical: Vec<usize>, device_size: usize) -> Result<Self> {
        let mut seen = vec![false; device_size];
        for &p in &physical {
            if p >= device_size {
                return Err(Error::QubitOutOfRange {
                    index: p,
                    width: device_size,
                });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::Topology(format!("physical qubit {p} assigned twice")));
            }
        }
        Ok(PhysicalMapping { physical, device_size })
    }

    pub fn identity(num_logical: usize, device_size: usize) -> Result<Self> {
        Self::new((0..num_logical).collect(), device_size)
    }

    pub fn physical(&self, logical: usize) -> usize {
        self.physical[logical]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.physical
    }

    pub fn num_logical(&self) -> usize {
        self.physical.len()
    }

    pub fn device_size(&self) -> usize {
        self.device_size
    }
}

/// True iff every two-qubit gate lands on a device edge under `mapping`.
pub fn is_compatible(circuit: &ParamCircuit, mapping: &PhysicalMapping, graph: &CouplingGraph) -> bool {
    if mapping.num_logical() < circuit.num_qubits() || mapping.device_size() > graph.num_qubits() {
        return false;
    }
    circuit
        .gates()
        .iter()
        .filter(|g| g.is_two_qubit())
        .all(|g| graph.has_edge(mapping.physical(g.qubits[0]), mapping.physical(g.qubits[1])))
}

/// Output of [`route`]: a circuit on physical qubits (width = device size).
#[derive(Debug, Clone)]
pub struct Routed {
    pub circuit: ParamCircuit,
    pub swap_count: usize,
    /// Where each logical qubit sits after the last gate.
    pub final_mapping: PhysicalMapping,
}

/// Greedy router. For each two-qubit gate on non-adjacent qubits, the first
/// operand is walked along the lexicographically smallest shortest path until
/// it neighbours the second, one SWAP per hop. No lookahead, so the SWAP count
/// is an upper bound on what a production transpiler would insert.
pub fn route(circuit: &ParamCircuit, mapping: &PhysicalMapping, graph: &CouplingGraph) -> Result<Routed> {
    if mapping.num_logical() < circuit.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: circuit.num_qubits(),
            got: mapping.num_logical(),
        });
    }
    if mapping.device_size() > graph.num_qubits() {
        return Err(Error::Topology("mapping is wider than the device".into()));
    }
    let n_phys = graph.num_qubits();
    let mut l2p: Vec<usize> = mapping.as_slice().to_vec();
    let mut p2l: Vec<Option<usize>> = vec![None; n_phys];
    for (l, &p) in l2p.iter().enumerate() {
        p2l[p] = Some(l);
    }

    let mut out = ParamCircuit::new(n_phys);
    out.reserve_params(circuit.num_params());
    let mut swap_count = 0;
    for g in circuit.gates() {
        if g.is_two_qubit() {
            let (a, b) = (l2p[g.qubits[0]], l2p[g.qubits[1]]);
            if !graph.has_edge(a, b) {
                let path = shortest_path(graph, a, b)?;
                for w in path[..path.len() - 1].windows(2) {
                    let (x, y) = (w[0], w[1]);
                    out.push(GateInstance::swap(x, y))?;
                    swap_count += 1;
                    let (lx, ly) = (p2l[x], p2l[y]);
                    p2l[x] = ly;
                    p2l[y] = lx;
                    if let Some(l) = lx {
                        l2p[l] = y;
                    }
                    if let Some(l) = ly {
                        l2p[l] = x;
                    }
                }
            }
        }
        out.push(GateInstance {
            kind: g.kind,
            qubits: g.qubits.iter().map(|&q| l2p[q]).collect(),
            param: g.param,
        })?;
    }
    Ok(Routed {
        circuit: out,
        swap_count,
        final_mapping: PhysicalMapping::new(l2p, n_phys)?,
    })
}

/// Lexicographically smallest among the shortest `from → to` paths.
fn shortest_path(graph: &CouplingGraph, from: usize, to: usize) -> Result<Vec<usize>> {
    let dist = graph.distances_from(to);
    if dist[from] == usize::MAX {
        return Err(Error::Disconnected { from, to });
    }
    let mut path = vec![from];
    let mut cur = from;
    while cur != to {
        cur = *graph
            .neighbors(cur)
            .iter()
            .find(|&&n| dist[n] + 1 == dist[cur])
            .expect("BFS distances are consistent");
        path.push(cur);
    }
    Ok(path)
}

/// Rewrites each SWAP as three CNOTs.
pub fn decompose_swaps(circuit: &ParamCircuit) -> ParamCircuit {
    let mut gates = Vec::with_capacity(circuit.len());
    for g in circuit.gates() {
        if g.kind == GateKind::Swap {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            gates.push(GateInstance::cnot(a, b));
            gates.push(GateInstance::cnot(b, a));
            gates.push(GateInstance::cnot(a, b));
        } else {
            gates.push(g.clone());
        }
    }
    ParamCircuit::from_parts(circuit.num_qubits(), gates, circuit.num_params()).expect("same qubits")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledStats {
    pub depth: usize,
    pub gate_count: usize,
    pub cnot_count: usize,
    pub swap_count: usize,
}

/// Routes, expands SWAPs into CNOTs and measures the result.
pub fn compiled_stats(circuit: &ParamCircuit, mapping: &PhysicalMapping, graph: &CouplingGraph) -> Result<CompiledStats> {
    let routed = route(circuit, mapping, graph)?;
    let compiled = decompose_swaps(&routed.circuit);
    Ok(CompiledStats {
        depth: compiled.depth(),
        gate_count: compiled.len(),
        cnot_count: compiled.count_kind(GateKind::Cnot),
        swap_count: routed.swap_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compatibility_examples() {
        let mut c = ParamCircuit::new(2);
        c.cx(0, 1);
        let g2 = CouplingGraph::line(2);
        assert!(is_compatible(&c, &PhysicalMapping::identity(2, 2).unwrap(), &g2));

        let mut c = ParamCircuit::new(3);
        c.cx(0, 2);
        let g3 = CouplingGraph::line(3);
        assert!(!is_compatible(&c, &PhysicalMapping::identity(3, 3).unwrap(), &g3));
    }

    #[test]
    fn mapping_validation() {
        assert!(PhysicalMapping::new(vec![0, 0], 3).is_err());
        assert!(PhysicalMapping::new(vec![0, 3], 3).is_err());
        assert!(PhysicalMapping::new(vec![2, 0], 3).is_ok());
    }

    #[test]
    fn route_cnot_0_2_on_line3() {
        let mut c = ParamCircuit::new(3);
        c.cx(0, 2);
        let m = PhysicalMapping::identity(3, 3).unwrap();
        let g = CouplingGraph::line(3);
        let r = route(&c, &m, &g).unwrap();
        assert_eq!(r.swap_count, 1);
        assert_eq!(r.circuit.gates()[0], GateInstance::swap(0, 1));
        assert_eq!(r.circuit.gates()[1], GateInstance::cnot(1, 2));
        assert_eq!(r.final_mapping.as_slice(), &[1, 0, 2]);

        let s = compiled_stats(&c, &m, &g).unwrap();
        assert_eq!(s.cnot_count, 4);
        assert_eq!(s.gate_count, 4);
    }

    #[test]
    fn compatible_circuit_needs_no_swaps() {
        let mut c = ParamCircuit::new(3);
        c.rx(0).cx(0, 1).ry(2).cx(2, 1);
        let m = PhysicalMapping::identity(3, 3).unwrap();
        let g = CouplingGraph::line(3);
        let s = compiled_stats(&c, &m, &g).unwrap();
        assert_eq!(s.swap_count, 0);
        assert_eq!((s.depth, s.gate_count, s.cnot_count), (c.depth(), c.len(), 2));
    }

    #[test]
    fn disconnected_device() {
        let g = CouplingGraph::new(3, [(0, 1)]).unwrap();
        let mut c = ParamCircuit::new(3);
        c.cx(0, 2);
        assert!(matches!(
            route(&c, &PhysicalMapping::identity(3, 3).unwrap(), &g),
            Err(Error::Disconnected { .. })
        ));
    }

    #[test]
    fn lexicographic_path_choice() {
        // 0 and 3 are joined through both 1 and 2 on a 4-cycle.
        let g = CouplingGraph::new(4, [(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
        assert_eq!(shortest_path(&g, 0, 3).unwrap(), vec![0, 1, 3]);
    }
}
