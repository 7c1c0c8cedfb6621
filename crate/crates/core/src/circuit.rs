//! Parameterized circuit representation.
//!
//! A [`ParamCircuit`] is an ordered gate list over `num_qubits` logical qubits.
//! Rotation gates reference a slot in a parameter vector that is supplied at
//! simulation time, so one circuit structure serves any number of parameter
//! bindings.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cnot,
    H,
    Sx,
    Swap,
}

impl GateKind {
    pub const ROTATIONS: [GateKind; 3] = [GateKind::Rx, GateKind::Ry, GateKind::Rz];

    pub fn is_parameterized(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Swap => 2,
            _ => 1,
        }
    }

    /// Gates that square to the identity, so an adjacent identical pair cancels.
    pub fn is_self_inverse(self) -> bool {
        matches!(self, GateKind::Cnot | GateKind::Swap | GateKind::H)
    }

    pub fn qasm_name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cnot => "cx",
            GateKind::H => "h",
            GateKind::Sx => "sx",
            GateKind::Swap => "swap",
        }
    }

    pub fn from_qasm_name(name: &str) -> Option<Self> {
        Some(match name {
            "rx" => GateKind::Rx,
            "ry" => GateKind::Ry,
            "rz" => GateKind::Rz,
            "cx" | "CX" | "cnot" => GateKind::Cnot,
            "h" => GateKind::H,
            "sx" => GateKind::Sx,
            "swap" => GateKind::Swap,
            _ => return None,
        })
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.qasm_name())
    }
}

/// One gate application. `param` indexes the owning circuit's parameter vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<usize>,
}

impl GateInstance {
    pub fn rotation(kind: GateKind, qubit: usize, param: usize) -> Self {
        debug_assert!(kind.is_parameterized());
        GateInstance {
            kind,
            qubits: vec![qubit],
            param: Some(param),
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateInstance {
            kind: GateKind::Cnot,
            qubits: vec![control, target],
            param: None,
        }
    }

    pub fn swap(a: usize, b: usize) -> Self {
        GateInstance {
            kind: GateKind::Swap,
            qubits: vec![a, b],
            param: None,
        }
    }

    pub fn fixed(kind: GateKind, qubit: usize) -> Self {
        debug_assert!(!kind.is_parameterized() && kind.arity() == 1);
        GateInstance {
            kind,
            qubits: vec![qubit],
            param: None,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.qubits.len() == 2
    }

    /// Same kind on the same ordered qubits (parameters ignored).
    pub fn same_operation(&self, other: &GateInstance) -> bool {
        self.kind == other.kind && self.qubits == other.qubits
    }

    fn validate(&self, width: usize, num_params: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubit(s), got {}",
                self.kind,
                self.kind.arity(),
                self.qubits.len()
            )));
        }
        for &q in &self.qubits {
            if q >= width {
                return Err(Error::QubitOutOfRange { index: q, width });
            }
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{} on repeated qubit {}",
                self.kind, self.qubits[0]
            )));
        }
        match (self.kind.is_parameterized(), self.param) {
            (true, Some(p)) if p < num_params => Ok(()),
            (true, Some(p)) => Err(Error::InvalidGate(format!(
                "parameter index {p} out of range ({num_params} slots)"
            ))),
            (true, None) => Err(Error::InvalidGate(format!("{} needs a parameter", self.kind))),
            (false, Some(_)) => Err(Error::InvalidGate(format!(
                "{} does not take a parameter",
                self.kind
            ))),
            (false, None) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit", into = "RawCircuit")]
pub struct ParamCircuit {
    num_qubits: usize,
    gates: Vec<GateInstance>,
    num_params: usize,
}

#[derive(Serialize, Deserialize)]
struct RawCircuit {
    num_qubits: usize,
    num_params: usize,
    gates: Vec<GateInstance>,
}

impl TryFrom<RawCircuit> for ParamCircuit {
    type Error = Error;

    fn try_from(raw: RawCircuit) -> Result<Self> {
        ParamCircuit::from_parts(raw.num_qubits, raw.gates, raw.num_params)
    }
}

impl From<ParamCircuit> for RawCircuit {
    fn from(c: ParamCircuit) -> Self {
        RawCircuit {
            num_qubits: c.num_qubits,
            num_params: c.num_params,
            gates: c.gates,
        }
    }
}

impl ParamCircuit {
    /// # Panics
    /// If `num_qubits` is zero.
    pub fn new(num_qubits: usize) -> Self {
        assert!(num_qubits > 0, "a circuit needs at least one qubit");
        ParamCircuit {
            num_qubits,
            gates: Vec::new(),
            num_params: 0,
        }
    }

    pub fn from_parts(num_qubits: usize, gates: Vec<GateInstance>, num_params: usize) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::InvalidGate("circuit width must be positive".into()));
        }
        for g in &gates {
            g.validate(num_qubits, num_params)?;
        }
        Ok(ParamCircuit {
            num_qubits,
            gates,
            num_params,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: GateInstance) -> Result<()> {
        gate.validate(self.num_qubits, self.num_params)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends a rotation bound to a fresh parameter slot; returns the slot.
    pub fn push_rotation(&mut self, kind: GateKind, qubit: usize) -> Result<usize> {
        if !kind.is_parameterized() {
            return Err(Error::InvalidGate(format!("{kind} is not a rotation")));
        }
        let p = self.num_params;
        self.num_params += 1;
        if let Err(e) = self.push(GateInstance::rotation(kind, qubit, p)) {
            self.num_params -= 1;
            return Err(e);
        }
        Ok(p)
    }

    /// Adds `extra` parameter slots without attaching gates to them.
    pub fn reserve_params(&mut self, extra: usize) {
        self.num_params += extra;
    }

    pub fn rx(&mut self, q: usize) -> &mut Self {
        self.push_rotation(GateKind::Rx, q).expect("rx");
        self
    }

    pub fn ry(&mut self, q: usize) -> &mut Self {
        self.push_rotation(GateKind::Ry, q).expect("ry");
        self
    }

    pub fn rz(&mut self, q: usize) -> &mut Self {
        self.push_rotation(GateKind::Rz, q).expect("rz");
        self
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.push(GateInstance::cnot(control, target)).expect("cx");
        self
    }

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.push(GateInstance::fixed(GateKind::H, q)).expect("h");
        self
    }

    pub fn sx(&mut self, q: usize) -> &mut Self {
        self.push(GateInstance::fixed(GateKind::Sx, q)).expect("sx");
        self
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.push(GateInstance::swap(a, b)).expect("swap");
        self
    }

    /// Appends `other` with its qubit `i` placed on `qubit_map[i]` and its
    /// parameters shifted past the existing slots. Returns the parameter offset.
    pub fn append_mapped(&mut self, other: &ParamCircuit, qubit_map: &[usize]) -> Result<usize> {
        if qubit_map.len() != other.num_qubits {
            return Err(Error::WidthMismatch {
                expected: other.num_qubits,
                got: qubit_map.len(),
            });
        }
        let offset = self.num_params;
        let mut gates = Vec::with_capacity(other.gates.len());
        for g in &other.gates {
            let mapped = GateInstance {
                kind: g.kind,
                qubits: g.qubits.iter().map(|&q| qubit_map[q]).collect(),
                param: g.param.map(|p| p + offset),
            };
            mapped.validate(self.num_qubits, offset + other.num_params)?;
            gates.push(mapped);
        }
        self.gates.extend(gates);
        self.num_params += other.num_params;
        Ok(offset)
    }

    /// Concatenation on identical width, parameters of `other` shifted.
    pub fn concat(&self, other: &ParamCircuit) -> Result<ParamCircuit> {
        if other.num_qubits != self.num_qubits {
            return Err(Error::WidthMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        let mut out = self.clone();
        let map: Vec<usize> = (0..other.num_qubits).collect();
        out.append_mapped(other, &map)?;
        Ok(out)
    }

    /// Same gates on a wider register with qubits relabelled through `map`.
    pub fn relabel(&self, width: usize, map: &[usize]) -> Result<ParamCircuit> {
        let mut out = ParamCircuit::from_parts(width, Vec::new(), 0)?;
        out.append_mapped(self, map)?;
        Ok(out)
    }

    /// Longest chain in the gate dependency DAG; every gate is one time step.
    pub fn depth(&self) -> usize {
        let mut layer = vec![0usize; self.num_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let next = g.qubits.iter().map(|&q| layer[q]).max().unwrap_or(0) + 1;
            for &q in &g.qubits {
                layer[q] = next;
            }
            depth = depth.max(next);
        }
        depth
    }

    pub fn gate_counts_per_qubit(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_qubits];
        for g in &self.gates {
            for &q in &g.qubits {
                counts[q] += 1;
            }
        }
        counts
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    pub fn rotation_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.is_parameterized()).count()
    }

    /// Structural key: gate kinds and qubits in order, parameters renumbered by
    /// first appearance.
    pub fn structure_key(&self) -> String {
        let mut seen: Vec<usize> = Vec::new();
        let mut key = format!("{}:", self.num_qubits);
        for g in &self.gates {
            key.push_str(g.kind.qasm_name());
            for q in &g.qubits {
                key.push_str(&format!(",{q}"));
            }
            if let Some(p) = g.param {
                let idx = match seen.iter().position(|&s| s == p) {
                    Some(i) => i,
                    None => {
                        seen.push(p);
                        seen.len() - 1
                    }
                };
                key.push_str(&format!("#{idx}"));
            }
            key.push(';');
        }
        key
    }

    /// Removes gates whose index satisfies `drop`, compacting parameter slots
    /// that are no longer referenced. Returns the old index of each kept slot.
    pub fn remove_gates(&self, drop: impl Fn(usize, &GateInstance) -> bool) -> (ParamCircuit, Vec<usize>) {
        let kept: Vec<GateInstance> = self
            .gates
            .iter()
            .enumerate()
            .filter(|(i, g)| !drop(*i, g))
            .map(|(_, g)| g.clone())
            .collect();
        let mut used = vec![false; self.num_params];
        for g in &kept {
            if let Some(p) = g.param {
                used[p] = true;
            }
        }
        let mut remap = vec![usize::MAX; self.num_params];
        let mut old_of_new = Vec::new();
        for (old, _) in used.iter().enumerate().filter(|(_, u)| **u) {
            remap[old] = old_of_new.len();
            old_of_new.push(old);
        }
        let gates = kept
            .into_iter()
            .map(|mut g| {
                g.param = g.param.map(|p| remap[p]);
                g
            })
            .collect();
        let circuit = ParamCircuit {
            num_qubits: self.num_qubits,
            gates,
            num_params: old_of_new.len(),
        };
        (circuit, old_of_new)
    }
}

/// Result of [`simplify_with_map`]: new parameter `j` equals the sum of the old
/// parameters listed in `param_sources[j]`.
#[derive(Debug, Clone)]
pub struct Simplified {
    pub circuit: ParamCircuit,
    pub param_sources: Vec<Vec<usize>>,
}

impl Simplified {
    /// Maps an old parameter vector onto the simplified circuit's slots.
    pub fn map_params(&self, old: &[f64]) -> Vec<f64> {
        self.param_sources
            .iter()
            .map(|src| src.iter().map(|&p| old[p]).sum())
            .collect()
    }
}

pub fn simplify(circuit: &ParamCircuit) -> ParamCircuit {
    simplify_with_map(circuit).circuit
}

/// Merges adjacent identical rotations on a wire into one slot and cancels
/// adjacent identical self-inverse gates. Uses a per-wire stack so cascades
/// (a cancellation exposing a new adjacent pair) resolve in one pass.
pub fn simplify_with_map(circuit: &ParamCircuit) -> Simplified {
    struct Slot {
        gate: GateInstance,
        sources: Vec<usize>,
        alive: bool,
    }

    let mut out: Vec<Slot> = Vec::with_capacity(circuit.gates.len());
    let mut wires: Vec<Vec<usize>> = vec![Vec::new(); circuit.num_qubits];

    for g in &circuit.gates {
        let tops: Vec<Option<usize>> = g.qubits.iter().map(|&q| wires[q].last().copied()).collect();
        let shared_top = match tops.first().copied().flatten() {
            Some(t) if tops.iter().all(|&x| x == Some(t)) => Some(t),
            _ => None,
        };
        if let Some(t) = shared_top {
            if out[t].gate.same_operation(g) {
                if g.kind.is_parameterized() {
                    out[t].sources.push(g.param.expect("validated rotation"));
                    continue;
                }
                if g.kind.is_self_inverse() {
                    out[t].alive = false;
                    for &q in &g.qubits {
                        wires[q].pop();
                    }
                    continue;
                }
            }
        }
        let idx = out.len();
        out.push(Slot {
            gate: g.clone(),
            sources: g.param.into_iter().collect(),
            alive: true,
        });
        for &q in &g.qubits {
            wires[q].push(idx);
        }
    }

    let mut gates = Vec::new();
    let mut param_sources = Vec::new();
    for slot in out.into_iter().filter(|s| s.alive) {
        let mut gate = slot.gate;
        if gate.kind.is_parameterized() {
            gate.param = Some(param_sources.len());
            param_sources.push(slot.sources);
        }
        gates.push(gate);
    }
    let circuit = ParamCircuit {
        num_qubits: circuit.num_qubits,
        num_params: param_sources.len(),
        gates,
    };
    Simplified {
        circuit,
        param_sources,
    }
}
