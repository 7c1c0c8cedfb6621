use serde::{Deserialize, Serialize};

use super::ansatz::{Ansatz, Block, BlockSource, Stage, StitchKind};
use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};

impl StitchKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "cnot" | "cx" => Ok(Self::Cnot),
            "crx" => Ok(Self::Crx),
            "swap" => Ok(Self::Swap),
            _ => Err(Error::Config(format!("unknown stitch kind `{name}` (cnot, crx, swap)"))),
        }
    }

    /// Two-qubit circuit with control on local qubit 0. CRX is emitted as a
    /// controlled rotation built from RZ, RY and two CNOTs, with its own
    /// trainable angles starting at zero (identity); SWAP as three CNOTs.
    pub fn circuit(self) -> ParamCircuit {
        let mut c = ParamCircuit::new(2);
        match self {
            StitchKind::Cnot => {
                c.cx(0, 1);
            }
            StitchKind::Crx => {
                c.rz(1).cx(0, 1).ry(1).cx(0, 1).ry(1);
            }
            StitchKind::Swap => {
                c.cx(0, 1).cx(1, 0).cx(0, 1);
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StitchPlacement {
    /// Only edges touching a qubit with below-mean gate count, each inserted
    /// right after the last block acting on either endpoint.
    Idle,
    /// Every crossing edge, appended after all existing blocks.
    BlockEnd,
}

impl StitchPlacement {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "idle" => Ok(Self::Idle),
            "block_end" | "block-end" => Ok(Self::BlockEnd),
            _ => Err(Error::Config(format!("unknown stitch placement `{name}` (idle, block_end)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StitchOutcome {
    pub ansatz: Ansatz,
    /// Logical edges that received a stitch, in insertion order.
    pub edges: Vec<(usize, usize)>,
    /// Set when nothing could be inserted.
    pub warning: Option<String>,
}

/// Inserts two-qubit stitches on device edges joining different regions.
pub fn stitch(ansatz: &Ansatz, kind: StitchKind, placement: StitchPlacement) -> Result<StitchOutcome> {
    let crossing = ansatz.crossing_edges();
    if crossing.is_empty() {
        return Ok(StitchOutcome {
            ansatz: ansatz.clone(),
            edges: Vec::new(),
            warning: Some("no device edge crosses a region boundary; ansatz unchanged".into()),
        });
    }
    let mut blocks = ansatz.blocks().to_vec();
    let make = |(a, b): (usize, usize)| Block {
        source: BlockSource::Stitch { kind },
        stage: Stage::Stitch,
        qubits: vec![a, b],
        circuit: kind.circuit(),
    };
    let edges = match placement {
        StitchPlacement::BlockEnd => {
            blocks.extend(crossing.iter().copied().map(make));
            crossing
        }
        StitchPlacement::Idle => {
            let counts = ansatz.circuit().gate_counts_per_qubit();
            let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
            let idle = |q: usize| (counts[q] as f64) < mean;
            let mut chosen: Vec<(usize, usize)> = crossing.iter().copied().filter(|&(a, b)| idle(a) || idle(b)).collect();
            if chosen.is_empty() {
                // Balanced load: take the single least-used crossing edge.
                let least = crossing
                    .iter()
                    .copied()
                    .min_by_key(|&(a, b)| counts[a] + counts[b])
                    .expect("non-empty");
                chosen.push(least);
            }
            for &(a, b) in &chosen {
                let at = blocks
                    .iter()
                    .rposition(|blk| blk.qubits.contains(&a) || blk.qubits.contains(&b))
                    .map_or(0, |i| i + 1);
                blocks.insert(at, make((a, b)));
            }
            chosen
        }
    };
    Ok(StitchOutcome {
        ansatz: ansatz.with_blocks(blocks)?,
        edges,
        warning: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{circuit_unitary, is_identity_at_zero, UnitaryMatrix};
    use crate::topology::{CouplingGraph, PhysicalMapping};

    fn two_block(g: &CouplingGraph) -> Ansatz {
        let mut c = ParamCircuit::new(2);
        c.ry(0).cx(0, 1).rx(1);
        let block = |qubits: Vec<usize>| Block {
            source: BlockSource::Library { id: 0 },
            stage: Stage::Initial,
            qubits,
            circuit: c.clone(),
        };
        Ansatz::new(
            g.clone(),
            PhysicalMapping::identity(4, 4).unwrap(),
            vec![vec![0, 1], vec![2, 3]],
            vec![block(vec![0, 1]), block(vec![2, 3])],
            6,
        )
        .unwrap()
    }

    #[test]
    fn single_region_warns() {
        let g = CouplingGraph::line(2);
        let mut c = ParamCircuit::new(2);
        c.cx(0, 1);
        let a = Ansatz::new(
            g,
            PhysicalMapping::identity(2, 2).unwrap(),
            vec![vec![0, 1]],
            vec![Block {
                source: BlockSource::Library { id: 0 },
                stage: Stage::Initial,
                qubits: vec![0, 1],
                circuit: c,
            }],
            6,
        )
        .unwrap();
        let out = stitch(&a, StitchKind::Cnot, StitchPlacement::BlockEnd).unwrap();
        assert!(out.warning.is_some());
        assert_eq!(out.ansatz, a);
    }

    #[test]
    fn cnot_stitch_adds_one_gate() {
        let g = CouplingGraph::line(4);
        let a = two_block(&g);
        for placement in [StitchPlacement::BlockEnd, StitchPlacement::Idle] {
            let out = stitch(&a, StitchKind::Cnot, placement).unwrap();
            assert_eq!(out.edges, vec![(1, 2)]);
            assert_eq!(out.ansatz.circuit().len(), a.circuit().len() + 1);
            assert_eq!(out.ansatz.blocks().last().unwrap().stage, Stage::Stitch);
        }
    }

    #[test]
    fn stitch_kinds() {
        assert!(is_identity_at_zero(&StitchKind::Crx.circuit()).unwrap());
        assert_eq!(StitchKind::Crx.circuit().len(), 5);
        let swap = circuit_unitary(&StitchKind::Swap.circuit(), &[]).unwrap();
        let mut s = ParamCircuit::new(2);
        s.swap(0, 1);
        let reference: UnitaryMatrix = circuit_unitary(&s, &[]).unwrap();
        assert!(swap.max_abs_diff(&reference) < 1e-12);
    }
}
