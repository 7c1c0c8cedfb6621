use serde::{Deserialize, Serialize};

use super::ansatz::Ansatz;
use crate::circuit::GateKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemovedGate {
    pub block: usize,
    pub kind: GateKind,
    /// Logical qubit.
    pub qubit: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub ansatz: Ansatz,
    pub params: Vec<f64>,
    pub removed: Vec<RemovedGate>,
}

fn check(ansatz: &Ansatz, params: &[f64], epsilon: f64) -> Result<()> {
    if params.len() != ansatz.num_params() {
        return Err(Error::ParamLength {
            expected: ansatz.num_params(),
            got: params.len(),
        });
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("prune epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Removes every rotation whose angle magnitude is below `epsilon`. CNOTs and
/// other fixed gates are never touched.
pub fn prune(ansatz: &Ansatz, params: &[f64], epsilon: f64) -> Result<PruneOutcome> {
    check(ansatz, params, epsilon)?;
    remove_params(ansatz, params, |p| params[p].abs() < epsilon)
}

/// Removes only the smallest-magnitude rotation below `epsilon`, if any.
pub fn prune_smallest(ansatz: &Ansatz, params: &[f64], epsilon: f64) -> Result<Option<PruneOutcome>> {
    check(ansatz, params, epsilon)?;
    let smallest = (0..params.len())
        .filter(|&p| params[p].abs() < epsilon)
        .min_by(|&a, &b| params[a].abs().total_cmp(&params[b].abs()).then(a.cmp(&b)));
    match smallest {
        Some(target) => Ok(Some(remove_params(ansatz, params, |p| p == target)?)),
        None => Ok(None),
    }
}

fn remove_params(ansatz: &Ansatz, params: &[f64], drop: impl Fn(usize) -> bool) -> Result<PruneOutcome> {
    let offsets = ansatz.param_offsets();
    let mut blocks = ansatz.blocks().to_vec();
    let mut new_params = Vec::with_capacity(params.len());
    let mut removed = Vec::new();
    for (b, block) in blocks.iter_mut().enumerate() {
        let off = offsets[b];
        for g in block.circuit.gates() {
            if let Some(p) = g.param {
                if drop(off + p) {
                    removed.push(RemovedGate {
                        block: b,
                        kind: g.kind,
                        qubit: block.qubits[g.qubits[0]],
                        value: params[off + p],
                    });
                }
            }
        }
        let (circuit, old_of_new) = block.circuit.remove_gates(|_, g| g.param.is_some_and(|p| drop(off + p)));
        new_params.extend(old_of_new.iter().map(|&p| params[off + p]));
        block.circuit = circuit;
    }
    Ok(PruneOutcome {
        ansatz: ansatz.with_blocks(blocks)?,
        params: new_params,
        removed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PruneStep {
    pub removed: RemovedGate,
    pub accuracy: f64,
    pub kept: bool,
}

#[derive(Debug, Clone)]
pub struct PruneLoopOutcome {
    pub ansatz: Ansatz,
    pub params: Vec<f64>,
    pub baseline: f64,
    pub steps: Vec<PruneStep>,
}

/// Prunes one gate at a time, smallest angle first, scoring each candidate
/// with `evaluate` (which may fine-tune the parameters in place). Stops at the
/// first step whose score falls more than `max_drop` below the score before
/// pruning began; that step is reverted.
pub fn prune_loop(
    ansatz: &Ansatz,
    params: &[f64],
    epsilon: f64,
    max_drop: f64,
    mut evaluate: impl FnMut(&Ansatz, &mut Vec<f64>) -> Result<f64>,
) -> Result<PruneLoopOutcome> {
    check(ansatz, params, epsilon)?;
    let mut current = ansatz.clone();
    let mut current_params = params.to_vec();
    let baseline = evaluate(&current, &mut current_params)?;
    let mut steps = Vec::new();
    while let Some(mut out) = prune_smallest(&current, &current_params, epsilon)? {
        let accuracy = evaluate(&out.ansatz, &mut out.params)?;
        let kept = baseline - accuracy <= max_drop;
        steps.push(PruneStep {
            removed: out.removed.remove(0),
            accuracy,
            kept,
        });
        if !kept {
            break;
        }
        current = out.ansatz;
        current_params = out.params;
    }
    Ok(PruneLoopOutcome {
        ansatz: current,
        params: current_params,
        baseline,
        steps,
    })
}
