//! Dense statevector simulation.
//!
//! Basis index convention: qubit `k` is bit `k` of the index (qubit 0 is the
//! least-significant bit). Rotations follow `R_P(θ) = exp(-iθP/2)`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::circuit::{GateInstance, GateKind, ParamCircuit};
use crate::error::{Error, Result};

/// Largest width accepted by [`circuit_unitary`].
pub const MAX_UNITARY_QUBITS: usize = 12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// |0…0⟩ on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index {index} out of range");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Statevector { num_qubits, amps }
    }

    /// Wraps raw amplitudes; the length must be a power of two and the norm 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::WidthMismatch {
                expected: dim.next_power_of_two(),
                got: dim,
            });
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidGate(format!("state norm {norm} is not 1")));
        }
        Ok(Statevector {
            num_qubits: dim.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::WidthMismatch {
                expected: self.num_qubits,
                got: other.num_qubits,
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn apply(&mut self, kind: GateKind, qubits: &[usize], angle: f64) {
        match kind {
            GateKind::Cnot => self.apply_cnot(qubits[0], qubits[1]),
            GateKind::Swap => self.apply_swap(qubits[0], qubits[1]),
            GateKind::Rz => {
                let (s, c) = (angle / 2.0).sin_cos();
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                let mask = 1usize << qubits[0];
                for (i, a) in self.amps.iter_mut().enumerate() {
                    *a *= if i & mask == 0 { lo } else { hi };
                }
            }
            _ => self.apply_single(qubits[0], single_qubit_matrix(kind, angle)),
        }
    }

    fn apply_single(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cm = 1usize << control;
        let tm = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cm != 0 && i & tm == 0 {
                self.amps.swap(i, i | tm);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let am = 1usize << a;
        let bm = 1usize << b;
        for i in 0..self.amps.len() {
            if i & am != 0 && i & bm == 0 {
                self.amps.swap(i, (i & !am) | bm);
            }
        }
    }

    /// Z expectation on every qubit in one sweep.
    pub fn pauli_z_all(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.num_qubits];
        for (i, a) in self.amps.iter().enumerate() {
            let p = a.norm_sqr();
            for (q, zq) in z.iter_mut().enumerate() {
                if i >> q & 1 == 0 {
                    *zq += p;
                } else {
                    *zq -= p;
                }
            }
        }
        z
    }
}

/// 2×2 matrix of a single-qubit gate at `angle` (ignored for fixed gates).
pub fn single_qubit_matrix(kind: GateKind, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    match kind {
        GateKind::Rx => [[re(c), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), re(c)]],
        GateKind::Ry => [[re(c), re(-s)], [re(s), re(c)]],
        GateKind::Rz => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
        GateKind::H => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            [[re(h), re(h)], [re(h), re(-h)]]
        }
        GateKind::Sx => {
            let p = Complex64::new(0.5, 0.5);
            let m = Complex64::new(0.5, -0.5);
            [[p, m], [m, p]]
        }
        GateKind::Cnot | GateKind::Swap => panic!("{kind} is not a single-qubit gate"),
    }
}

/// Applies every gate of `circuit`, taking each rotation angle from `angle_of`.
pub(crate) fn run_gates(
    state: &mut Statevector,
    circuit: &ParamCircuit,
    mut angle_of: impl FnMut(usize, &GateInstance) -> f64,
) {
    for (i, g) in circuit.gates().iter().enumerate() {
        let angle = if g.kind.is_parameterized() { angle_of(i, g) } else { 0.0 };
        state.apply(g.kind, &g.qubits, angle);
    }
}

fn check_inputs(circuit: &ParamCircuit, params: &[f64]) -> Result<()> {
    if params.len() != circuit.num_params() {
        return Err(Error::ParamLength {
            expected: circuit.num_params(),
            got: params.len(),
        });
    }
    Ok(())
}

pub fn simulate(circuit: &ParamCircuit, params: &[f64], initial: &Statevector) -> Result<Statevector> {
    let mut state = initial.clone();
    simulate_in_place(circuit, params, &mut state)?;
    Ok(state)
}

pub fn simulate_in_place(circuit: &ParamCircuit, params: &[f64], state: &mut Statevector) -> Result<()> {
    check_inputs(circuit, params)?;
    if state.num_qubits() != circuit.num_qubits() {
        return Err(Error::WidthMismatch {
            expected: circuit.num_qubits(),
            got: state.num_qubits(),
        });
    }
    run_gates(state, circuit, |_, g| params[g.param.expect("validated")]);
    Ok(())
}

pub fn expectation_pauli_z(state: &Statevector, qubit: usize) -> Result<f64> {
    if qubit >= state.num_qubits() {
        return Err(Error::QubitOutOfRange {
            index: qubit,
            width: state.num_qubits(),
        });
    }
    Ok(state
        .amps
        .iter()
        .enumerate()
        .map(|(i, a)| if i >> qubit & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum())
}

/// Dense `2^n × 2^n` unitary; column `k` is the image of basis state `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(pub DMatrix<Complex64>);

impl UnitaryMatrix {
    pub fn identity(num_qubits: usize) -> Self {
        let d = 1usize << num_qubits;
        UnitaryMatrix(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    /// ‖U†U − I‖_F.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim();
        (self.0.adjoint() * &self.0 - DMatrix::<Complex64>::identity(d, d)).norm()
    }

    pub fn max_abs_diff(&self, other: &UnitaryMatrix) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Max entry deviation after removing the global phase that best aligns
    /// the first significant entry of `self` with `other`.
    pub fn max_diff_up_to_phase(&self, other: &UnitaryMatrix) -> f64 {
        let anchor = self
            .0
            .iter()
            .zip(other.0.iter())
            .find(|(a, _)| a.norm() > 1e-6);
        let phase = match anchor {
            Some((a, b)) if b.norm() > 1e-12 => (b / a) / (b / a).norm(),
            _ => ONE,
        };
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a * phase - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest singular value of `self − other`.
    pub fn spectral_distance(&self, other: &UnitaryMatrix) -> f64 {
        let diff = &self.0 - &other.0;
        diff.singular_values().iter().copied().fold(0.0, f64::max)
    }
}

pub fn circuit_unitary(circuit: &ParamCircuit, params: &[f64]) -> Result<UnitaryMatrix> {
    let n = circuit.num_qubits();
    if n > MAX_UNITARY_QUBITS {
        return Err(Error::WidthTooLarge {
            width: n,
            limit: MAX_UNITARY_QUBITS,
        });
    }
    check_inputs(circuit, params)?;
    let dim = 1usize << n;
    let mut m = DMatrix::from_element(dim, dim, ZERO);
    for k in 0..dim {
        let mut s = Statevector::basis(n, k);
        run_gates(&mut s, circuit, |_, g| params[g.param.expect("validated")]);
        for (r, a) in s.amps.iter().enumerate() {
            m[(r, k)] = *a;
        }
    }
    Ok(UnitaryMatrix(m))
}

/// True iff the unitary at all-zero parameters is `e^{iφ}·I`, with φ read from
/// the first non-negligible diagonal entry and a 1e-9 max-entry tolerance.
pub fn is_identity_at_zero(circuit: &ParamCircuit) -> Result<bool> {
    let u = circuit_unitary(circuit, &vec![0.0; circuit.num_params()])?;
    let m = u.matrix();
    let dim = u.dim();
    let phase = match (0..dim).map(|i| m[(i, i)]).find(|d| d.norm() > 1e-9) {
        Some(d) => d / d.norm(),
        None => return Ok(false),
    };
    for c in 0..dim {
        for r in 0..dim {
            let want = if r == c { phase } else { ZERO };
            if (m[(r, c)] - want).norm() > 1e-9 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
