//! Circuit quality scores: expressibility as the KL divergence between the
//! sampled state-fidelity distribution and the Haar one, and entangling
//! capability as the mean Meyer-Wallach measure.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::sim::{simulate, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub fidelity_pairs: usize,
    pub bins: usize,
    pub mw_samples: usize,
    pub seed: u64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            fidelity_pairs: 5000,
            bins: 75,
            mw_samples: 300,
            seed: 0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fidelity_pairs == 0 || self.bins == 0 || self.mw_samples == 0 {
            return Err(Error::Config("metric sample counts and bins must be positive".into()));
        }
        Ok(())
    }
}

/// Empirical fidelity distribution over equal-width bins on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityHistogram {
    pub probabilities: Vec<f64>,
    pub sample_count: usize,
}

impl FidelityHistogram {
    pub fn from_samples(fidelities: &[f64], bins: usize) -> Self {
        let mut counts = vec![0usize; bins];
        for &f in fidelities {
            counts[bin_index(f, bins)] += 1;
        }
        let n = fidelities.len().max(1) as f64;
        FidelityHistogram {
            probabilities: counts.iter().map(|&c| c as f64 / n).collect(),
            sample_count: fidelities.len(),
        }
    }

    pub fn bin_count(&self) -> usize {
        self.probabilities.len()
    }
}

fn bin_index(f: f64, bins: usize) -> usize {
    ((f.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1)
}

/// `|⟨a|b⟩|²`.
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

/// Density of `F = |⟨ψ|φ⟩|²` for Haar-random `n`-qubit states.
pub fn haar_fidelity_pdf(num_qubits: usize, f: f64) -> f64 {
    let n = dimension(num_qubits);
    (n - 1.0) * (1.0 - f).powf(n - 2.0)
}

/// Exact Haar probability mass of each histogram bin, from the CDF
/// `1 − (1 − F)^(N−1)`.
pub fn haar_bin_masses(num_qubits: usize, bins: usize) -> Vec<f64> {
    let e = dimension(num_qubits) - 1.0;
    (0..bins)
        .map(|i| {
            let lo = i as f64 / bins as f64;
            let hi = (i + 1) as f64 / bins as f64;
            (1.0 - lo).powf(e) - (1.0 - hi).powf(e)
        })
        .collect()
}

fn dimension(num_qubits: usize) -> f64 {
    2f64.powi(num_qubits as i32)
}

/// `D_KL(p ‖ q)`; bins with `p = 0` contribute nothing.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(f64::MIN_POSITIVE)).ln())
        .sum::<f64>()
        .max(0.0)
}

fn random_params(rng: &mut impl rand::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * TAU).collect()
}

/// Fidelities of `config.fidelity_pairs` independently sampled parameter pairs.
/// Pair `i` draws from its own stream so the result does not depend on the
/// thread schedule.
pub fn sample_fidelities(circuit: &ParamCircuit, config: &MetricConfig) -> Result<Vec<f64>> {
    config.validate()?;
    let zero = Statevector::zero(circuit.num_qubits());
    (0..config.fidelity_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, i as u64);
            let theta = random_params(&mut rng, circuit.num_params());
            let phi = random_params(&mut rng, circuit.num_params());
            let a = simulate(circuit, &theta, &zero)?;
            let b = simulate(circuit, &phi, &zero)?;
            fidelity(&a, &b)
        })
        .collect()
}

pub fn fidelity_histogram(circuit: &ParamCircuit, config: &MetricConfig) -> Result<FidelityHistogram> {
    Ok(FidelityHistogram::from_samples(&sample_fidelities(circuit, config)?, config.bins))
}

/// KL divergence of the circuit's fidelity histogram from the Haar bin masses.
/// Lower means more expressive.
pub fn expressibility(circuit: &ParamCircuit, config: &MetricConfig) -> Result<f64> {
    Ok(expressibility_with_histogram(circuit, config)?.0)
}

pub fn expressibility_with_histogram(circuit: &ParamCircuit, config: &MetricConfig) -> Result<(f64, FidelityHistogram)> {
    let hist = fidelity_histogram(circuit, config)?;
    let haar = haar_bin_masses(circuit.num_qubits(), config.bins);
    Ok((kl_divergence(&hist.probabilities, &haar), hist))
}

/// Purity `Tr ρ_k²` of the single-qubit reduced state of every qubit.
pub fn single_qubit_purities(state: &Statevector) -> Vec<f64> {
    let amps = state.amplitudes();
    (0..state.num_qubits())
        .map(|k| {
            let bit = 1usize << k;
            let (mut a, mut b) = (0.0, 0.0);
            let mut c = num_complex::Complex64::new(0.0, 0.0);
            for i in (0..amps.len()).filter(|i| i & bit == 0) {
                let (x, y) = (amps[i], amps[i | bit]);
                a += x.norm_sqr();
                b += y.norm_sqr();
                c += x * y.conj();
            }
            a * a + b * b + 2.0 * c.norm_sqr()
        })
        .collect()
}

/// Meyer-Wallach measure `Q = 2(1 − mean_k Tr ρ_k²)`.
pub fn mw_entanglement(state: &Statevector) -> Result<f64> {
    let n = state.num_qubits();
    if n < 2 {
        return Err(Error::Metric {
            circuit: String::new(),
            msg: "Meyer-Wallach measure needs at least two qubits".into(),
        });
    }
    let mean = single_qubit_purities(state).iter().sum::<f64>() / n as f64;
    Ok((2.0 * (1.0 - mean)).clamp(0.0, 1.0))
}

/// Mean Meyer-Wallach measure over `config.mw_samples` uniform parameter draws.
pub fn entangling_capability(circuit: &ParamCircuit, config: &MetricConfig) -> Result<f64> {
    config.validate()?;
    if circuit.num_qubits() < 2 {
        return Err(Error::Metric {
            circuit: circuit.structure_key(),
            msg: "entangling capability needs at least two qubits".into(),
        });
    }
    if circuit.two_qubit_count() == 0 {
        // Only product states are reachable.
        return Ok(0.0);
    }
    let zero = Statevector::zero(circuit.num_qubits());
    // Offset keeps these streams apart from the fidelity-pair streams.
    let base = config.fidelity_pairs as u64;
    let values: Vec<f64> = (0..config.mw_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, base + i as u64);
            let theta = random_params(&mut rng, circuit.num_params());
            mw_entanglement(&simulate(circuit, &theta, &zero)?)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}
