use std::f64::consts::FRAC_PI_2;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Sample;
use crate::builder::Ansatz;
use crate::circuit::{GateKind, ParamCircuit};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sim::{run_gates, simulate, simulate_in_place, Statevector};

/// Axis used by encoding layer `l` (cycled).
const LAYER_AXES: [GateKind; 3] = [GateKind::Ry, GateKind::Rz, GateKind::Rx];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSlot {
    pub feature: usize,
    pub qubit: usize,
    pub axis: GateKind,
}

/// Fixed angle encoding: every slot rotates one qubit by one (rescaled)
/// feature. Slots fill qubits round-robin, one layer per `num_qubits` slots.
/// With fewer features than qubits the features repeat until every qubit is
/// covered; each pass over the features uses every feature exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub num_qubits: usize,
    pub num_features: usize,
    pub slots: Vec<EncoderSlot>,
}

impl EncoderSpec {
    pub fn round_robin(num_features: usize, num_qubits: usize) -> Result<Self> {
        if num_features == 0 || num_qubits == 0 {
            return Err(Error::Config("encoder needs at least one feature and one qubit".into()));
        }
        let passes = num_qubits.div_ceil(num_features);
        let slots = (0..passes * num_features)
            .map(|s| EncoderSlot {
                feature: s % num_features,
                qubit: s % num_qubits,
                axis: LAYER_AXES[(s / num_qubits) % LAYER_AXES.len()],
            })
            .collect();
        Ok(EncoderSpec {
            num_qubits,
            num_features,
            slots,
        })
    }

    pub fn layers(&self) -> usize {
        self.slots.len().div_ceil(self.num_qubits)
    }

    /// Encoder circuit whose parameter `k` is the angle of slot `k`.
    pub fn circuit(&self) -> ParamCircuit {
        let mut c = ParamCircuit::new(self.num_qubits);
        for s in &self.slots {
            c.push_rotation(s.axis, s.qubit).expect("slot qubit in range");
        }
        c
    }

    pub fn angles(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.num_features {
            return Err(Error::WidthMismatch {
                expected: self.num_features,
                got: features.len(),
            });
        }
        Ok(self.slots.iter().map(|s| features[s.feature]).collect())
    }

    /// `|0…0⟩` after the encoder.
    pub fn encode(&self, features: &[f64]) -> Result<Statevector> {
        let (c, a) = angle_encode(features, self)?;
        simulate(&c, &a, &Statevector::zero(self.num_qubits))
    }
}

/// Encoder circuit and the angles it is bound to for `features`.
pub fn angle_encode(features: &[f64], spec: &EncoderSpec) -> Result<(ParamCircuit, Vec<f64>)> {
    Ok((spec.circuit(), spec.angles(features)?))
}

/// Class `c` is scored by the mean Z expectation of the qubits in group `c`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Readout {
    pub groups: Vec<Vec<usize>>,
}

impl Readout {
    /// Qubit `q` goes to class `q mod num_classes`.
    pub fn round_robin(num_qubits: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 || num_classes > num_qubits {
            return Err(Error::Config(format!(
                "{num_classes} classes cannot be read out from {num_qubits} qubits"
            )));
        }
        Ok(Readout {
            groups: (0..num_classes)
                .map(|c| (c..num_qubits).step_by(num_classes).collect())
                .collect(),
        })
    }

    pub fn num_classes(&self) -> usize {
        self.groups.len()
    }

    pub fn scores(&self, z: &[f64]) -> Vec<f64> {
        self.groups
            .iter()
            .map(|g| g.iter().map(|&q| z[q]).sum::<f64>() / g.len() as f64)
            .collect()
    }
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// `−ln p_label` with `p` clamped at 1e-12.
pub fn cross_entropy(probs: &[f64], label: usize) -> f64 {
    -probs[label].max(1e-12).ln()
}

/// Mean cross-entropy over a batch.
pub fn batch_loss(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
    probs.iter().zip(labels).map(|(p, &y)| cross_entropy(p, y)).sum::<f64>() / probs.len() as f64
}

/// Uniform initial angles in `[-scale, scale]`.
pub fn init_params(n: usize, scale: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * scale).collect()
}

/// Encoder, trainable ansatz and readout. Encoder angles come from the data
/// and never enter `params`.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub encoder: EncoderSpec,
    pub ansatz: Ansatz,
    pub readout: Readout,
    pub params: Vec<f64>,
}

impl Model {
    /// Model with all trainable angles at zero.
    pub fn new(ansatz: Ansatz, num_features: usize, num_classes: usize) -> Result<Self> {
        let n = ansatz.num_qubits();
        Ok(Model {
            encoder: EncoderSpec::round_robin(num_features, n)?,
            readout: Readout::round_robin(n, num_classes)?,
            params: vec![0.0; ansatz.num_params()],
            ansatz,
        })
    }

    pub fn circuit(&self) -> &ParamCircuit {
        self.ansatz.circuit()
    }

    fn check(&self) -> Result<()> {
        if self.params.len() != self.ansatz.num_params() {
            return Err(Error::ParamLength {
                expected: self.ansatz.num_params(),
                got: self.params.len(),
            });
        }
        Ok(())
    }

    /// Class probabilities for one feature vector.
    pub fn forward(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.check()?;
        let state = self.encoder.encode(features)?;
        self.forward_encoded(&state, &self.params)
    }

    /// Class probabilities for an already encoded state.
    pub fn forward_encoded(&self, encoded: &Statevector, params: &[f64]) -> Result<Vec<f64>> {
        let mut s = encoded.clone();
        simulate_in_place(self.circuit(), params, &mut s)?;
        Ok(softmax(&self.readout.scores(&s.pauli_z_all())))
    }

    /// Loss and parameter-shift gradient for one encoded sample. Every
    /// rotation occurrence is shifted by ±π/2 separately and the Z
    /// expectations are pushed through the readout, softmax and cross-entropy
    /// by the chain rule.
    pub fn sample_gradient(&self, encoded: &Statevector, label: usize, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let circuit = self.circuit();
        let mut s = encoded.clone();
        simulate_in_place(circuit, params, &mut s)?;
        let probs = softmax(&self.readout.scores(&s.pauli_z_all()));
        let loss = cross_entropy(&probs, label);
        // dL/dz_q through the group means.
        let mut dl_dz = vec![0.0; circuit.num_qubits()];
        for (c, g) in self.readout.groups.iter().enumerate() {
            let d = probs[c] - if c == label { 1.0 } else { 0.0 };
            for &q in g {
                dl_dz[q] += d / g.len() as f64;
            }
        }
        let mut grad = vec![0.0; params.len()];
        for (k, gate) in circuit.gates().iter().enumerate() {
            let Some(p) = gate.param else { continue };
            let z_at = |shift: f64| {
                let mut st = encoded.clone();
                run_gates(&mut st, circuit, |i, g| {
                    params[g.param.expect("rotation")] + if i == k { shift } else { 0.0 }
                });
                st.pauli_z_all()
            };
            let (plus, minus) = (z_at(FRAC_PI_2), z_at(-FRAC_PI_2));
            grad[p] += (0..plus.len()).map(|q| dl_dz[q] * (plus[q] - minus[q]) / 2.0).sum::<f64>();
        }
        Ok((loss, grad))
    }

    /// Encodes a split once so repeated passes only simulate the ansatz.
    pub fn encode_all(&self, samples: &[Sample]) -> Result<Vec<Statevector>> {
        samples.par_iter().map(|s| self.encoder.encode(&s.features)).collect()
    }
}

/// Mean loss and gradient over a batch. Per-sample results are reduced in
/// batch order so the sum does not depend on the thread schedule.
pub fn batch_gradient(model: &Model, encoded: &[&Statevector], labels: &[usize], params: &[f64]) -> Result<(f64, Vec<f64>)> {
    let parts: Vec<(f64, Vec<f64>)> = encoded
        .par_iter()
        .zip(labels.par_iter())
        .map(|(s, &y)| model.sample_gradient(s, y, params))
        .collect::<Result<_>>()?;
    let n = parts.len().max(1) as f64;
    let mut grad = vec![0.0; params.len()];
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        for (a, b) in grad.iter_mut().zip(g) {
            *a += b;
        }
    }
    grad.iter_mut().for_each(|g| *g /= n);
    Ok((loss / n, grad))
}

/// Mean-loss gradient of `model.params` over `batch`.
pub fn gradient(model: &Model, batch: &[Sample]) -> Result<Vec<f64>> {
    model.check()?;
    let encoded = model.encode_all(batch)?;
    let refs: Vec<&Statevector> = encoded.iter().collect();
    let labels: Vec<usize> = batch.iter().map(|s| s.label).collect();
    Ok(batch_gradient(model, &refs, &labels, &model.params)?.1)
}

/// Mean loss and accuracy over encoded samples.
pub fn loss_and_accuracy(model: &Model, encoded: &[Statevector], labels: &[usize], params: &[f64]) -> Result<(f64, f64)> {
    if encoded.is_empty() {
        return Err(Error::Dataset("cannot evaluate an empty split".into()));
    }
    let probs: Vec<Vec<f64>> = encoded
        .par_iter()
        .map(|s| model.forward_encoded(s, params))
        .collect::<Result<_>>()?;
    let correct = probs.iter().zip(labels).filter(|(p, &y)| argmax(p) == y).count();
    Ok((batch_loss(&probs, labels), correct as f64 / labels.len() as f64))
}

/// Fraction of samples whose most probable class is the label.
pub fn evaluate(model: &Model, samples: &[Sample]) -> Result<f64> {
    model.check()?;
    let encoded = model.encode_all(samples)?;
    let labels: Vec<usize> = samples.iter().map(|s| s.label).collect();
    Ok(loss_and_accuracy(model, &encoded, &labels, &model.params)?.1)
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
