//! Statevector simulation over the gate set {H, CNOT, RX, RY, RZ}.
//!
//! Qubit 0 is the least-significant bit of a basis-state index, so the
//! amplitude of `|q_{n-1} ... q_1 q_0⟩` lives at index `Σ q_k 2^k`.
//!
//! Gates are applied as pairwise amplitude updates with stride `2^target`;
//! a dense unitary is only ever built by [`circuit_unitary_oracle`], which
//! exists to check the pairwise kernel.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Amplitude count at which gate kernels switch to rayon chunking.
const PAR_THRESHOLD: usize = 1 << 14;

/// Largest register the dense oracle accepts.
pub const ORACLE_MAX_QUBITS: usize = 5;

/// Rotation axis of a single-qubit rotation gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// Source of a rotation angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    /// Trainable angle read from the parameter vector at this index.
    Slot(usize),
    /// Fixed angle in radians, not trainable (time and label embeddings).
    Fixed(f64),
}

impl Angle {
    pub fn resolve(self, angles: &[f64]) -> Result<f64> {
        match self {
            Angle::Fixed(theta) => Ok(theta),
            Angle::Slot(slot) => angles.get(slot).copied().ok_or_else(|| {
                Error::Structural(format!("angle slot {slot} beyond parameter length {}", angles.len()))
            }),
        }
    }
}

/// One gate of a circuit program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp {
    H { target: usize },
    Cnot { control: usize, target: usize },
    Rot { axis: Axis, target: usize, angle: Angle },
}

impl GateOp {
    pub fn h(target: usize) -> Self {
        GateOp::H { target }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        GateOp::Cnot { control, target }
    }

    pub fn rx(target: usize, angle: Angle) -> Self {
        GateOp::Rot { axis: Axis::X, target, angle }
    }

    pub fn ry(target: usize, angle: Angle) -> Self {
        GateOp::Rot { axis: Axis::Y, target, angle }
    }

    pub fn rz(target: usize, angle: Angle) -> Self {
        GateOp::Rot { axis: Axis::Z, target, angle }
    }

    pub fn target(&self) -> usize {
        match *self {
            GateOp::H { target } | GateOp::Cnot { target, .. } | GateOp::Rot { target, .. } => target,
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            GateOp::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    /// Trainable slot referenced by this gate, if any.
    pub fn angle_slot(&self) -> Option<usize> {
        match *self {
            GateOp::Rot { angle: Angle::Slot(slot), .. } => Some(slot),
            _ => None,
        }
    }

    /// Qubits the gate acts on.
    pub fn qubits(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.target()).chain(self.control())
    }

    /// Checks qubit indices against a register of `num_qubits`.
    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= num_qubits {
            return Err(Error::Structural(format!("target qubit {target} out of range for {num_qubits} qubits")));
        }
        if let Some(control) = self.control() {
            if control >= num_qubits {
                return Err(Error::Structural(format!("control qubit {control} out of range for {num_qubits} qubits")));
            }
            if control == target {
                return Err(Error::Structural(format!("control and target are both qubit {target}")));
            }
        }
        Ok(())
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn hadamard() -> Mat2 {
    let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[s, s], [s, -s]]
}

/// `exp(-i θ σ / 2)` for the Pauli matrix `σ` of `axis`.
pub fn rotation_matrix(axis: Axis, theta: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    match axis {
        Axis::X => {
            [[Complex64::new(c, 0.0), Complex64::new(0.0, -s)], [Complex64::new(0.0, -s), Complex64::new(c, 0.0)]]
        }
        Axis::Y => {
            [[Complex64::new(c, 0.0), Complex64::new(-s, 0.0)], [Complex64::new(s, 0.0), Complex64::new(c, 0.0)]]
        }
        Axis::Z => [[Complex64::new(c, -s), ZERO], [ZERO, Complex64::new(c, s)]],
    }
}

fn pauli_matrix(axis: Axis) -> Mat2 {
    let i = Complex64::new(0.0, 1.0);
    match axis {
        Axis::X => [[ZERO, ONE], [ONE, ZERO]],
        Axis::Y => [[ZERO, -i], [i, ZERO]],
        Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
    }
}

fn apply_single(amps: &mut [Complex64], target: usize, m: &Mat2) {
    let stride = 1usize << target;
    let kernel = |block: &mut [Complex64]| {
        let (lo, hi) = block.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = m[0][0] * x + m[0][1] * y;
            *b = m[1][0] * x + m[1][1] * y;
        }
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * stride).for_each(kernel);
    } else {
        amps.chunks_mut(2 * stride).for_each(kernel);
    }
}

fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let stride = 1usize << target;
    let cmask = 1usize << control;
    let kernel = |(chunk, block): (usize, &mut [Complex64])| {
        let base = chunk * 2 * stride;
        let (lo, hi) = block.split_at_mut(stride);
        for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            if (base + k) & cmask != 0 {
                std::mem::swap(a, b);
            }
        }
    };
    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * stride).enumerate().for_each(kernel);
    } else {
        amps.chunks_mut(2 * stride).enumerate().for_each(kernel);
    }
}

/// Quantum register of `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits >= usize::BITS as usize - 1 {
            return Err(Error::Structural(format!("unsupported qubit count {num_qubits}")));
        }
        let mut amplitudes = vec![ZERO; 1 << num_qubits];
        amplitudes[0] = ONE;
        Ok(Self { num_qubits, amplitudes })
    }

    /// Wraps raw amplitudes; the length must be a power of two ≥ 2.
    /// Normalisation is the caller's responsibility.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::Structural(format!("amplitude count {len} is not a power of two ≥ 2")));
        }
        Ok(Self { num_qubits: len.trailing_zeros() as usize, amplitudes })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// Squared magnitude of every amplitude.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Applies `gate` in place, resolving angle slots against `angles`.
    pub fn apply(&mut self, gate: &GateOp, angles: &[f64]) -> Result<()> {
        gate.validate(self.num_qubits)?;
        match *gate {
            GateOp::H { target } => apply_single(&mut self.amplitudes, target, &hadamard()),
            GateOp::Cnot { control, target } => apply_cnot(&mut self.amplitudes, control, target),
            GateOp::Rot { axis, target, angle } => {
                let m = rotation_matrix(axis, angle.resolve(angles)?);
                apply_single(&mut self.amplitudes, target, &m);
            }
        }
        Ok(())
    }

    /// Applies the adjoint of `gate` in place.
    pub fn apply_inverse(&mut self, gate: &GateOp, angles: &[f64]) -> Result<()> {
        match *gate {
            GateOp::Rot { axis, target, angle } => {
                gate.validate(self.num_qubits)?;
                let m = rotation_matrix(axis, -angle.resolve(angles)?);
                apply_single(&mut self.amplitudes, target, &m);
                Ok(())
            }
            // H and CNOT are self-inverse.
            _ => self.apply(gate, angles),
        }
    }

    /// Applies every gate of `program` in order.
    pub fn run(&mut self, program: &[GateOp], angles: &[f64]) -> Result<()> {
        program.iter().try_for_each(|gate| self.apply(gate, angles))
    }

    /// Applies the Pauli operator of `axis` to `target` in place.
    pub fn apply_pauli(&mut self, axis: Axis, target: usize) -> Result<()> {
        GateOp::h(target).validate(self.num_qubits)?;
        apply_single(&mut self.amplitudes, target, &pauli_matrix(axis));
        Ok(())
    }

    /// `⟨self| σ_target |other⟩` without materialising `σ|other⟩`.
    pub fn pauli_matrix_element(&self, axis: Axis, target: usize, other: &StateVector) -> Complex64 {
        let bit = 1usize << target;
        let i = Complex64::new(0.0, 1.0);
        let (lhs, rhs) = (&self.amplitudes, &other.amplitudes);
        let mut acc = ZERO;
        for k in 0..lhs.len() {
            let set = k & bit != 0;
            let term = match axis {
                Axis::X => rhs[k ^ bit],
                Axis::Y if set => i * rhs[k ^ bit],
                Axis::Y => -i * rhs[k ^ bit],
                Axis::Z if set => -rhs[k],
                Axis::Z => rhs[k],
            };
            acc += lhs[k].conj() * term;
        }
        acc
    }

    /// Marginal distribution over `keep_qubits`; bit `j` of the output index
    /// is the value of `keep_qubits[j]`.
    pub fn marginal_probabilities(&self, keep_qubits: &[usize]) -> Result<Vec<f64>> {
        for (pos, &q) in keep_qubits.iter().enumerate() {
            if q >= self.num_qubits {
                return Err(Error::Structural(format!("qubit {q} out of range for {} qubits", self.num_qubits)));
            }
            if keep_qubits[..pos].contains(&q) {
                return Err(Error::Structural(format!("duplicate qubit {q} in marginal")));
            }
        }
        let mut out = vec![0.0; 1 << keep_qubits.len()];
        for (index, amp) in self.amplitudes.iter().enumerate() {
            let outcome = keep_qubits.iter().enumerate().fold(0usize, |acc, (j, &q)| acc | (((index >> q) & 1) << j));
            out[outcome] += amp.norm_sqr();
        }
        Ok(out)
    }
}

/// Returns `gate` applied to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &GateOp, angles: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate, angles)?;
    Ok(out)
}

/// Free-function form of [`StateVector::marginal_probabilities`].
pub fn marginal_probabilities(state: &StateVector, keep_qubits: &[usize]) -> Result<Vec<f64>> {
    state.marginal_probabilities(keep_qubits)
}

fn to_dmatrix(m: &Mat2) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// Kronecker product with `ops[q]` acting on qubit `q` (qubit 0 least significant).
fn embed(ops: &[DMatrix<Complex64>]) -> DMatrix<Complex64> {
    ops.iter().rev().fold(DMatrix::from_element(1, 1, ONE), |acc, op| acc.kronecker(op))
}

/// Dense `2^n × 2^n` unitary of a gate list, built by Kronecker expansion.
///
/// Exponential in `num_qubits`; refused above [`ORACLE_MAX_QUBITS`].
pub fn circuit_unitary_oracle(gates: &[GateOp], angles: &[f64], num_qubits: usize) -> Result<DMatrix<Complex64>> {
    if num_qubits == 0 || num_qubits > ORACLE_MAX_QUBITS {
        return Err(Error::Structural(format!(
            "dense oracle supports 1..={ORACLE_MAX_QUBITS} qubits, got {num_qubits}"
        )));
    }
    let dim = 1usize << num_qubits;
    let identity = DMatrix::<Complex64>::identity(2, 2);
    let mut total = DMatrix::<Complex64>::identity(dim, dim);
    for gate in gates {
        gate.validate(num_qubits)?;
        let full = match *gate {
            GateOp::H { target } => {
                let mut ops = vec![identity.clone(); num_qubits];
                ops[target] = to_dmatrix(&hadamard());
                embed(&ops)
            }
            GateOp::Rot { axis, target, angle } => {
                let mut ops = vec![identity.clone(); num_qubits];
                ops[target] = to_dmatrix(&rotation_matrix(axis, angle.resolve(angles)?));
                embed(&ops)
            }
            GateOp::Cnot { control, target } => {
                let p0 = to_dmatrix(&[[ONE, ZERO], [ZERO, ZERO]]);
                let p1 = to_dmatrix(&[[ZERO, ZERO], [ZERO, ONE]]);
                let mut idle = vec![identity.clone(); num_qubits];
                idle[control] = p0;
                let mut flip = vec![identity.clone(); num_qubits];
                flip[control] = p1;
                flip[target] = to_dmatrix(&pauli_matrix(Axis::X));
                embed(&idle) + embed(&flip)
            }
        };
        total = full * total;
    }
    Ok(total)
}
