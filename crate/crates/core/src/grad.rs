//! Pixel-space MSE and its exact gradient with respect to every trainable
//! rotation angle, by adjoint (reverse-pass) differentiation.
//!
//! With `ψ = U_P ⋯ U_1 ψ₀` and a loss that depends on `ψ` only through the
//! data-register probabilities `p_i`, write `w_k = ∂L/∂p_{data(k)}` and
//! `λ = w ⊙ ψ`. For a rotation `U_j = exp(−iθσ/2)`,
//!
//! ```text
//! ∂L/∂θ_j = Im ⟨λ_j| σ |φ_j⟩
//! ```
//!
//! where `φ_j` is the state just after gate `j` and `λ_j` is `λ` pulled back
//! through the gates after `j`. One forward run and one backward sweep give
//! every partial.

use rayon::prelude::*;

use crate::circuit::{build_full_program, CircuitSpec, ParameterVector};
use crate::encoding::{amplitude_encode, data_marginal, decode_state, ImageTensor};
use crate::qsim::{GateOp, StateVector};
use crate::{Error, Result};

/// Added under the square root when differentiating `sqrt(p)`.
pub const SQRT_GRAD_FLOOR: f64 = 1e-12;

/// Partial derivatives, ordered like the [`ParameterVector`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector(Vec<f64>);

impl GradientVector {
    pub fn new(partials: Vec<f64>) -> Self {
        Self(partials)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
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

fn check_shapes(input: &ImageTensor, target: &ImageTensor) -> Result<()> {
    if !input.same_shape(target) {
        return Err(Error::Shape(format!(
            "input {}x{} vs target {}x{}",
            input.width(),
            input.height(),
            target.width(),
            target.height()
        )));
    }
    Ok(())
}

fn evolve(program: &[GateOp], num_qubits: usize, angles: &[f64], input: &ImageTensor) -> Result<StateVector> {
    let (mut state, _) = amplitude_encode(input, num_qubits)?;
    state.run(program, angles)?;
    Ok(state)
}

/// Loss of an arbitrary program on a register of `num_qubits`.
pub fn program_loss(
    program: &[GateOp],
    num_qubits: usize,
    angles: &[f64],
    input: &ImageTensor,
    target: &ImageTensor,
) -> Result<f64> {
    check_shapes(input, target)?;
    let state = evolve(program, num_qubits, angles, input)?;
    let out = decode_state(&state, input.width(), input.height())?;
    let n = out.len() as f64;
    Ok(out.pixels().iter().zip(target.pixels()).map(|(o, t)| (o - t).powi(2)).sum::<f64>() / n)
}

/// Loss and adjoint gradient of an arbitrary program; the gradient has one
/// entry per trainable slot in `angles`.
pub fn program_loss_and_gradient(
    program: &[GateOp],
    num_qubits: usize,
    angles: &[f64],
    input: &ImageTensor,
    target: &ImageTensor,
) -> Result<(f64, Vec<f64>)> {
    check_shapes(input, target)?;
    let mut phi = evolve(program, num_qubits, angles, input)?;

    let probs = data_marginal(&phi);
    let pixels = input.len();
    if pixels > probs.len() {
        return Err(Error::Capacity { pixels, amplitudes: probs.len() });
    }
    let n = pixels as f64;
    let mut loss = 0.0;
    let mut weights = vec![0.0; probs.len()];
    for (i, (&p, &t)) in probs.iter().zip(target.pixels()).enumerate() {
        let residual = p.sqrt() - t;
        loss += residual * residual;
        weights[i] = residual / (n * (p + SQRT_GRAD_FLOOR).sqrt());
    }
    loss /= n;

    let data_dim = probs.len();
    let lambda_amps = phi.amplitudes().iter().enumerate().map(|(k, a)| a * weights[k % data_dim]).collect();
    let mut lambda = StateVector::from_amplitudes(lambda_amps)?;

    let mut grad = vec![0.0; angles.len()];
    for gate in program.iter().rev() {
        if let (Some(slot), GateOp::Rot { axis, target, .. }) = (gate.angle_slot(), gate) {
            grad[slot] += lambda.pauli_matrix_element(*axis, *target, &phi).im;
        }
        phi.apply_inverse(gate, angles)?;
        lambda.apply_inverse(gate, angles)?;
    }
    Ok((loss, grad))
}

/// The learned map `f_θ`: encode, run the full program at step `t`, decode.
pub fn circuit_output(
    spec: &CircuitSpec,
    angles: &ParameterVector,
    input: &ImageTensor,
    t: usize,
    label: Option<usize>,
) -> Result<ImageTensor> {
    let program = build_full_program(spec, t, label)?;
    let state = evolve(&program, spec.total_qubits(), angles.as_slice(), input)?;
    decode_state(&state, input.width(), input.height())
}

fn check_angles(spec: &CircuitSpec, angles: &ParameterVector) -> Result<()> {
    if angles.len() != spec.param_count() {
        return Err(Error::Structural(format!("{} angles supplied, spec needs {}", angles.len(), spec.param_count())));
    }
    Ok(())
}

/// Mean squared pixel error between `f_θ(input)` and `target`.
pub fn loss(
    spec: &CircuitSpec,
    angles: &ParameterVector,
    input: &ImageTensor,
    target: &ImageTensor,
    t: usize,
    label: Option<usize>,
) -> Result<f64> {
    check_angles(spec, angles)?;
    let program = build_full_program(spec, t, label)?;
    program_loss(&program, spec.total_qubits(), angles.as_slice(), input, target)
}

/// Loss and exact gradient for one training example.
pub fn loss_and_gradient(
    spec: &CircuitSpec,
    angles: &ParameterVector,
    input: &ImageTensor,
    target: &ImageTensor,
    t: usize,
    label: Option<usize>,
) -> Result<(f64, GradientVector)> {
    check_angles(spec, angles)?;
    let program = build_full_program(spec, t, label)?;
    let (loss, grad) = program_loss_and_gradient(&program, spec.total_qubits(), angles.as_slice(), input, target)?;
    Ok((loss, GradientVector(grad)))
}

/// One supervised example: map `input` at diffusion step `t` onto `target`.
#[derive(Debug, Clone)]
pub struct TrainingSample {
    pub input: ImageTensor,
    pub target: ImageTensor,
    pub t: usize,
    pub label: Option<usize>,
}

/// Mean loss and mean gradient over a batch, plus the per-sample losses.
///
/// Samples are evaluated in parallel; the reduction runs in batch order so
/// the result does not depend on the thread count.
pub fn batch_loss_and_gradient(
    spec: &CircuitSpec,
    angles: &ParameterVector,
    batch: &[TrainingSample],
) -> Result<(f64, GradientVector, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Structural("empty batch".into()));
    }
    let per_sample = batch
        .par_iter()
        .map(|s| loss_and_gradient(spec, angles, &s.input, &s.target, s.t, s.label))
        .collect::<Result<Vec<_>>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut grad = vec![0.0; angles.len()];
    let mut losses = Vec::with_capacity(batch.len());
    for (loss, g) in &per_sample {
        losses.push(*loss);
        for (acc, x) in grad.iter_mut().zip(g.as_slice()) {
            *acc += x;
        }
    }
    grad.iter_mut().for_each(|g| *g *= scale);
    let mean = losses.iter().sum::<f64>() * scale;
    Ok((mean, GradientVector(grad), losses))
}
