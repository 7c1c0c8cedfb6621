use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::qasm::export_qasm;
use crate::topology::{is_compatible, CouplingGraph, PhysicalMapping};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Initial,
    Stitch,
    Grow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StitchKind {
    Cnot,
    Crx,
    Swap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum BlockSource {
    /// Entry `id` of the library the ansatz was built from.
    Library { id: usize },
    Stitch { kind: StitchKind },
}

/// One placed piece of the ansatz: a circuit on local qubits together with the
/// logical qubits they land on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub source: BlockSource,
    pub stage: Stage,
    /// `qubits[local] = logical`.
    pub qubits: Vec<usize>,
    pub circuit: ParamCircuit,
}

/// Parameterized circuit on `n` logical qubits, placed on a device through a
/// fixed logical→physical mapping. The circuit is the concatenation of its
/// blocks, parameters numbered block by block in the same order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz {
    device: CouplingGraph,
    mapping: PhysicalMapping,
    regions: Vec<Vec<usize>>,
    blocks: Vec<Block>,
    depth_threshold: usize,
    circuit: ParamCircuit,
}

#[derive(Serialize, Deserialize)]
struct AnsatzFile {
    device: CouplingGraph,
    mapping: PhysicalMapping,
    regions: Vec<Vec<usize>>,
    depth_threshold: usize,
    blocks: Vec<Block>,
}

impl Ansatz {
    /// `regions` are sets of logical qubits; device edges between different
    /// regions are the candidates for stitching.
    pub fn new(
        device: CouplingGraph,
        mapping: PhysicalMapping,
        regions: Vec<Vec<usize>>,
        blocks: Vec<Block>,
        depth_threshold: usize,
    ) -> Result<Self> {
        let width = mapping.num_logical();
        if width == 0 {
            return Err(Error::Config("an ansatz needs at least one qubit".into()));
        }
        let mut seen = vec![false; width];
        for &q in regions.iter().flatten() {
            if q >= width || std::mem::replace(&mut seen[q], true) {
                return Err(Error::Config(format!("region qubit {q} is out of range or repeated")));
            }
        }
        let circuit = assemble(width, &blocks)?;
        if !is_compatible(&circuit, &mapping, &device) {
            return Err(Error::Topology("ansatz uses a two-qubit gate off the device edges".into()));
        }
        Ok(Ansatz {
            device,
            mapping,
            regions,
            blocks,
            depth_threshold,
            circuit,
        })
    }

    pub(crate) fn with_blocks(&self, blocks: Vec<Block>) -> Result<Self> {
        Self::new(
            self.device.clone(),
            self.mapping.clone(),
            self.regions.clone(),
            blocks,
            self.depth_threshold,
        )
    }

    pub fn circuit(&self) -> &ParamCircuit {
        &self.circuit
    }

    pub fn device(&self) -> &CouplingGraph {
        &self.device
    }

    pub fn mapping(&self) -> &PhysicalMapping {
        &self.mapping
    }

    pub fn regions(&self) -> &[Vec<usize>] {
        &self.regions
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn depth_threshold(&self) -> usize {
        self.depth_threshold
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.num_qubits()
    }

    pub fn num_params(&self) -> usize {
        self.circuit.num_params()
    }

    /// Index of the first parameter of each block.
    pub fn param_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.blocks
            .iter()
            .map(|b| {
                let o = off;
                off += b.circuit.num_params();
                o
            })
            .collect()
    }

    /// Logical-qubit pairs `(a, b)`, `a < b`, joined by a device edge but lying
    /// in different regions. Qubits outside every region count as their own.
    pub fn crossing_edges(&self) -> Vec<(usize, usize)> {
        let region_of = |q: usize| self.regions.iter().position(|r| r.contains(&q));
        let n = self.num_qubits();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let on_device = self.device.has_edge(self.mapping.physical(a), self.mapping.physical(b));
                let crosses = match (region_of(a), region_of(b)) {
                    (Some(x), Some(y)) => x != y,
                    _ => true,
                };
                if on_device && crosses {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// OpenQASM on logical qubits with the given parameter values.
    pub fn to_qasm(&self, params: &[f64]) -> Result<String> {
        export_qasm(&self.circuit, params)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = AnsatzFile {
            device: self.device.clone(),
            mapping: self.mapping.clone(),
            regions: self.regions.clone(),
            depth_threshold: self.depth_threshold,
            blocks: self.blocks.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: AnsatzFile = serde_json::from_str(text).map_err(|e| Error::Schema(format!("corrupt ansatz: {e}")))?;
        Self::new(f.device, f.mapping, f.regions, f.blocks, f.depth_threshold)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn assemble(width: usize, blocks: &[Block]) -> Result<ParamCircuit> {
    let mut c = ParamCircuit::new(width);
    for b in blocks {
        if b.qubits.len() != b.circuit.num_qubits() {
            return Err(Error::WidthMismatch {
                expected: b.circuit.num_qubits(),
                got: b.qubits.len(),
            });
        }
        c.append_mapped(&b.circuit, &b.qubits)?;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair_block(qubits: Vec<usize>) -> Block {
        let mut c = ParamCircuit::new(2);
        c.ry(0).cx(0, 1).rz(1);
        Block {
            source: BlockSource::Library { id: 0 },
            stage: Stage::Initial,
            qubits,
            circuit: c,
        }
    }

    #[test]
    fn concatenation_and_offsets() {
        let g = CouplingGraph::line(4);
        let a = Ansatz::new(
            g.clone(),
            PhysicalMapping::identity(4, 4).unwrap(),
            vec![vec![0, 1], vec![2, 3]],
            vec![pair_block(vec![0, 1]), pair_block(vec![2, 3])],
            6,
        )
        .unwrap();
        assert_eq!(a.circuit().len(), 6);
        assert_eq!(a.num_params(), 4);
        assert_eq!(a.param_offsets(), vec![0, 2]);
        assert_eq!(a.crossing_edges(), vec![(1, 2)]);
        let back = Ansatz::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_off_edge_blocks() {
        let g = CouplingGraph::line(3);
        let r = Ansatz::new(
            g,
            PhysicalMapping::identity(3, 3).unwrap(),
            vec![vec![0, 2]],
            vec![pair_block(vec![0, 2])],
            6,
        );
        assert!(matches!(r, Err(Error::Topology(_))));
    }
}
