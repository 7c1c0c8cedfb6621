//! Dense-matrix reference implementations, built from explicit Kronecker
//! products rather than the crate's simulator.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use qansatz::{GateKind, ParamCircuit};

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn one_qubit(kind: GateKind, theta: f64) -> DMatrix<C> {
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = match kind {
        GateKind::Rx => [c(co, 0.0), c(0.0, -si), c(0.0, -si), c(co, 0.0)],
        GateKind::Ry => [c(co, 0.0), c(-si, 0.0), c(si, 0.0), c(co, 0.0)],
        GateKind::Rz => [c(co, -si), c(0.0, 0.0), c(0.0, 0.0), c(co, si)],
        GateKind::H => [c(h, 0.0), c(h, 0.0), c(h, 0.0), c(-h, 0.0)],
        GateKind::Sx => [c(0.5, 0.5), c(0.5, -0.5), c(0.5, -0.5), c(0.5, 0.5)],
        k => panic!("{k:?} is not a one-qubit gate"),
    };
    DMatrix::from_row_slice(2, 2, &v)
}

/// `m` on qubit `q` of `n`; qubit 0 is the least significant bit, so it is
/// the rightmost Kronecker factor.
pub fn embed(n: usize, q: usize, m: &DMatrix<C>) -> DMatrix<C> {
    let mut out = DMatrix::from_element(1, 1, c(1.0, 0.0));
    for k in (0..n).rev() {
        let f = if k == q { m.clone() } else { DMatrix::identity(2, 2) };
        out = out.kronecker(&f);
    }
    out
}

/// Permutation matrix of a basis-state map.
pub fn permutation(n: usize, f: impl Fn(usize) -> usize) -> DMatrix<C> {
    let d = 1 << n;
    let mut m = DMatrix::zeros(d, d);
    for i in 0..d {
        m[(f(i), i)] = c(1.0, 0.0);
    }
    m
}

pub fn cnot(n: usize, control: usize, target: usize) -> DMatrix<C> {
    permutation(n, |i| if i >> control & 1 == 1 { i ^ (1 << target) } else { i })
}

pub fn swap(n: usize, a: usize, b: usize) -> DMatrix<C> {
    permutation(n, |i| {
        let (x, y) = (i >> a & 1, i >> b & 1);
        if x == y {
            i
        } else {
            i ^ (1 << a) ^ (1 << b)
        }
    })
}

pub fn dense_unitary(circuit: &ParamCircuit, params: &[f64]) -> DMatrix<C> {
    let n = circuit.num_qubits();
    let mut u = DMatrix::identity(1 << n, 1 << n);
    for g in circuit.gates() {
        let m = match g.kind {
            GateKind::Cnot => cnot(n, g.qubits[0], g.qubits[1]),
            GateKind::Swap => swap(n, g.qubits[0], g.qubits[1]),
            k => embed(n, g.qubits[0], &one_qubit(k, g.param.map_or(0.0, |p| params[p]))),
        };
        u = m * u;
    }
    u
}

pub fn zero_state(n: usize) -> DVector<C> {
    let mut v = DVector::zeros(1 << n);
    v[0] = c(1.0, 0.0);
    v
}

pub fn z_expectations(state: &DVector<C>, n: usize) -> Vec<f64> {
    (0..n)
        .map(|q| {
            state
                .iter()
                .enumerate()
                .map(|(i, a)| if i >> q & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                .sum()
        })
        .collect()
}

/// Reduced density matrix of qubit `q`, by tracing out the rest.
pub fn reduced_density(state: &DVector<C>, n: usize, q: usize) -> DMatrix<C> {
    let mut rho = DMatrix::zeros(2, 2);
    for i in 0..1 << n {
        for j in 0..1 << n {
            if i & !(1 << q) == j & !(1 << q) {
                rho[(i >> q & 1, j >> q & 1)] += state[i] * state[j].conj();
            }
        }
    }
    rho
}

/// Meyer-Wallach Q from reduced density matrices.
pub fn meyer_wallach(state: &DVector<C>, n: usize) -> f64 {
    let mean_purity: f64 = (0..n)
        .map(|q| {
            let r = reduced_density(state, n, q);
            (&r * &r).trace().re
        })
        .sum::<f64>()
        / n as f64;
    2.0 * (1.0 - mean_purity)
}

pub fn to_dvector(amps: &[C]) -> DVector<C> {
    DVector::from_column_slice(amps)
}

/// Spectral norm of `a - b`.
pub fn spectral_distance(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    (a - b).singular_values().max()
}

/// Connected induced sub-graphs by brute force over all vertex subsets.
pub fn brute_force_subgraphs(n: usize, edges: &[(usize, usize)], size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..1 << n {
        if mask.count_ones() as usize != size {
            continue;
        }
        let set: Vec<usize> = (0..n).filter(|&q| mask >> q & 1 == 1).collect();
        let mut reached = 1u32 << set[0];
        loop {
            let mut next = reached;
            for &(a, b) in edges {
                if mask >> a & 1 == 1 && mask >> b & 1 == 1 {
                    if reached >> a & 1 == 1 {
                        next |= 1 << b;
                    }
                    if reached >> b & 1 == 1 {
                        next |= 1 << a;
                    }
                }
            }
            if next == reached {
                break;
            }
            reached = next;
        }
        if reached == mask {
            out.push(set);
        }
    }
    out.sort();
    out
}

/// One-block ansatz on a line device with the identity mapping.
pub fn line_ansatz(circuit: ParamCircuit) -> qansatz::builder::Ansatz {
    use qansatz::builder::{Ansatz, Block, BlockSource, Stage};
    use qansatz::topology::{CouplingGraph, PhysicalMapping};
    let n = circuit.num_qubits();
    Ansatz::new(
        CouplingGraph::line(n),
        PhysicalMapping::identity(n, n).unwrap(),
        vec![(0..n).collect()],
        vec![Block {
            source: BlockSource::Library { id: 0 },
            stage: Stage::Initial,
            qubits: (0..n).collect(),
            circuit,
        }],
        usize::MAX,
    )
    .unwrap()
}

/// Random circuit that only uses line edges, so it fits [`line_ansatz`].
pub fn random_line_circuit(n: usize, gates: usize, rng: &mut impl rand::Rng) -> ParamCircuit {
    let mut circuit = ParamCircuit::new(n);
    for _ in 0..gates {
        if n > 1 && rng.random_bool(0.3) {
            let a = rng.random_range(0..n - 1);
            if rng.random_bool(0.5) {
                circuit.cx(a, a + 1);
            } else {
                circuit.cx(a + 1, a);
            }
        } else {
            let kind = GateKind::ROTATIONS[rng.random_range(0..3)];
            circuit.push_rotation(kind, rng.random_range(0..n)).unwrap();
        }
    }
    circuit
}

pub fn max_entry_diff(a: &DMatrix<C>, b: &DMatrix<C>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
