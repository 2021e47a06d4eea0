//! Adam with bias correction.

use crate::{Error, Result};

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Fresh state with zeroed moments and the standard betas.
    pub fn new(len: usize, learning_rate: f64) -> Self {
        Self {
            step: 0,
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            learning_rate,
            beta1: BETA1,
            beta2: BETA2,
            epsilon: EPSILON,
        }
    }

    /// Updates `params` in place from `grad` and advances the step counter.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        let len = self.first_moment.len();
        if params.len() != len || grad.len() != len || self.second_moment.len() != len {
            return Err(Error::Structural(format!(
                "adam state has {len} moments, got {} params and {} partials",
                params.len(),
                grad.len()
            )));
        }
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        for ((p, &g), (m, v)) in
            params.iter_mut().zip(grad).zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

/// Value-returning form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, params: &[f64], grad: &[f64]) -> Result<(AdamState, Vec<f64>)> {
    let mut next = state.clone();
    let mut out = params.to_vec();
    next.step(&mut out, grad)?;
    Ok((next, out))
}
