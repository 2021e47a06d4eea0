//! Gate programs for the two model layouts.
//!
//! Both layouts end in strongly entangling layers: every acted qubit gets an
//! `RZ·RY·RZ` triple, then a ring of CNOTs with range 1. They differ in the
//! acted set:
//!
//! - [`Layout::Eeqdm`] first entangles qubit `i` with `i + n/2` through
//!   `H` + `CNOT`, then trains only the first half of the data register plus
//!   the ancilla. This costs `3·L·(n/2 + 1)` angles.
//! - [`Layout::Qddm`] trains every data qubit plus the ancilla: `3·L·(n + 1)`.
//!
//! Optional conditioning rotates the ancilla by fixed, untrainable angles.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::qsim::{Angle, GateOp};
use crate::{Error, Result};

/// Number of classes used by label conditioning.
pub const NUM_CLASSES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Pairwise Bell-state entanglement followed by a half-register ansatz.
    Eeqdm,
    /// Full-register ansatz baseline.
    Qddm,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Eeqdm => "eeqdm",
            Layout::Qddm => "qddm",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eeqdm" => Ok(Layout::Eeqdm),
            "qddm" => Ok(Layout::Qddm),
            other => Err(Error::Config(format!("unknown model layout '{other}'"))),
        }
    }
}

/// Model layout and size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CircuitSpec {
    pub layout: Layout,
    pub data_qubits: usize,
    pub depth: usize,
    pub timesteps: usize,
    pub has_time_embedding: bool,
}

impl CircuitSpec {
    /// Spec with time embedding enabled.
    pub fn new(layout: Layout, data_qubits: usize, depth: usize, timesteps: usize) -> Result<Self> {
        let spec = Self { layout, data_qubits, depth, timesteps, has_time_embedding: true };
        spec.validate()?;
        Ok(spec)
    }

    pub fn without_time_embedding(mut self) -> Self {
        self.has_time_embedding = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.data_qubits == 0 {
            return Err(Error::Config("at least one data qubit is required".into()));
        }
        if self.layout == Layout::Eeqdm && !self.data_qubits.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "pairwise entanglement needs an even data-qubit count, got {}",
                self.data_qubits
            )));
        }
        if self.depth == 0 {
            return Err(Error::Config("depth must be at least 1".into()));
        }
        if self.timesteps == 0 {
            return Err(Error::Config("timestep count must be at least 1".into()));
        }
        Ok(())
    }

    /// Data qubits plus the ancilla.
    pub fn total_qubits(&self) -> usize {
        self.data_qubits + 1
    }

    pub fn ancilla(&self) -> usize {
        self.data_qubits
    }

    /// Qubits touched by the trainable layers, in ring order.
    pub fn acted_qubits(&self) -> Vec<usize> {
        let data = match self.layout {
            Layout::Eeqdm => 0..self.data_qubits / 2,
            Layout::Qddm => 0..self.data_qubits,
        };
        data.chain(std::iter::once(self.ancilla())).collect()
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

/// Closed-form number of trainable angles.
pub fn param_count(spec: &CircuitSpec) -> usize {
    let acted = match spec.layout {
        Layout::Eeqdm => spec.data_qubits / 2 + 1,
        Layout::Qddm => spec.data_qubits + 1,
    };
    3 * spec.depth * acted
}

/// Fractional parameter saving of EEQDM over QDDM at `data_qubits`,
/// independent of depth: `1 − (n/2 + 1)/(n + 1)`.
pub fn parameter_reduction(data_qubits: usize) -> Result<f64> {
    if data_qubits == 0 || !data_qubits.is_multiple_of(2) {
        return Err(Error::Config(format!("parameter comparison needs an even data-qubit count, got {data_qubits}")));
    }
    let eeqdm = (data_qubits / 2 + 1) as f64;
    let qddm = (data_qubits + 1) as f64;
    Ok(1.0 - eeqdm / qddm)
}

/// Trainable rotation angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if let Some(bad) = angles.iter().find(|a| !a.is_finite()) {
            return Err(Error::NonFinite(format!("angle {bad}")));
        }
        Ok(Self(angles))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// Checks the length against the spec's parameter count.
    pub fn for_spec(spec: &CircuitSpec, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != param_count(spec) {
            return Err(Error::Structural(format!(
                "{} angles supplied, spec needs {}",
                angles.len(),
                param_count(spec)
            )));
        }
        Self::new(angles)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// `H` on the first half of the data register, then `CNOT(i → i + n/2)`.
pub fn build_entanglement_stage(spec: &CircuitSpec) -> Result<Vec<GateOp>> {
    if spec.layout != Layout::Eeqdm {
        return Err(Error::Config("entanglement stage belongs to the EEQDM layout".into()));
    }
    spec.validate()?;
    let half = spec.data_qubits / 2;
    let hadamards = (0..half).map(GateOp::h);
    let pairs = (0..half).map(|i| GateOp::cnot(i, i + half));
    Ok(hadamards.chain(pairs).collect())
}

/// Strongly entangling layers over the acted set; slots are numbered
/// layer-major, qubit-minor, three per qubit.
pub fn build_pqc_stage(spec: &CircuitSpec) -> Vec<GateOp> {
    let acted = spec.acted_qubits();
    let width = acted.len();
    let mut gates = Vec::with_capacity(spec.depth * width * 4);
    let mut slot = 0;
    for _ in 0..spec.depth {
        for &q in &acted {
            gates.push(GateOp::rz(q, Angle::Slot(slot)));
            gates.push(GateOp::ry(q, Angle::Slot(slot + 1)));
            gates.push(GateOp::rz(q, Angle::Slot(slot + 2)));
            slot += 3;
        }
        for j in 0..width {
            gates.push(GateOp::cnot(acted[j], acted[(j + 1) % width]));
        }
    }
    gates
}

/// Fixed ancilla angle encoding diffusion step `t` of `timesteps`.
pub fn time_embedding_angle(t: usize, timesteps: usize) -> f64 {
    PI * t as f64 / timesteps as f64
}

/// Fixed ancilla angle encoding a class label.
pub fn label_embedding_angle(label: usize) -> f64 {
    2.0 * PI * label as f64 / NUM_CLASSES as f64
}

/// Complete program applied after amplitude encoding:
/// conditioning rotations, the entanglement stage (EEQDM) and the ansatz.
pub fn build_full_program(spec: &CircuitSpec, t: usize, label: Option<usize>) -> Result<Vec<GateOp>> {
    spec.validate()?;
    if t == 0 || t > spec.timesteps {
        return Err(Error::Config(format!("timestep {t} outside 1..={}", spec.timesteps)));
    }
    let mut program = Vec::new();
    if spec.has_time_embedding {
        let theta = time_embedding_angle(t, spec.timesteps);
        program.push(GateOp::ry(spec.ancilla(), Angle::Fixed(theta)));
    }
    if let Some(label) = label {
        if label >= NUM_CLASSES {
            return Err(Error::Config(format!("label {label} outside 0..{NUM_CLASSES}")));
        }
        program.push(GateOp::ry(spec.ancilla(), Angle::Fixed(label_embedding_angle(label))));
    }
    if spec.layout == Layout::Eeqdm {
        program.extend(build_entanglement_stage(spec)?);
    }
    program.extend(build_pqc_stage(spec));
    Ok(program)
}
