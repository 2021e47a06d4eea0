//! Forward noising, training-pair construction and reverse sampling.
//!
//! Two index conventions meet here. The forward chain counts noise levels:
//! `t = 0` is clean data and `t = T` is the noisiest. The reverse trajectory
//! counts denoising steps from pure noise: frame 0 is noise and frame `T` is
//! the generated image. [`forward_level_for_reverse_step`] maps one onto the
//! other, and both training and sampling embed the forward level in the
//! circuit.

use crate::circuit::{CircuitSpec, ParameterVector};
use crate::encoding::{normalize_nonneg, ImageTensor};
use crate::grad::circuit_output;
use crate::rng::RngStream;
use crate::{Error, Result};

/// Default linear schedule endpoints.
pub const BETA_START: f64 = 1e-4;
pub const BETA_END: f64 = 0.02;
pub const DEFAULT_TIMESTEPS: usize = 10;

/// Redraws allowed when a noised image clamps to all zeros.
pub const MAX_RESAMPLES: usize = 16;

/// Per-step variances and their cumulative products; indices are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl NoiseSchedule {
    /// β linearly spaced from `start` to `end` over `timesteps` steps.
    pub fn linear(timesteps: usize, start: f64, end: f64) -> Result<Self> {
        if timesteps == 0 {
            return Err(Error::Config("schedule needs at least one timestep".into()));
        }
        if !(start > 0.0 && end < 1.0 && start <= end) {
            return Err(Error::Config(format!("invalid beta range [{start}, {end}]")));
        }
        let betas = (0..timesteps)
            .map(|i| if timesteps == 1 { start } else { start + (end - start) * i as f64 / (timesteps - 1) as f64 })
            .collect();
        Self::from_betas(betas)
    }

    /// Linear schedule with the default β range.
    pub fn default_linear(timesteps: usize) -> Result<Self> {
        Self::linear(timesteps, BETA_START, BETA_END)
    }

    /// Arbitrary β values in `[0, 1]`, including the degenerate endpoints
    /// (β = 0 adds no noise, β = 1 replaces the signal).
    pub fn from_betas(beta: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Config("schedule needs at least one timestep".into()));
        }
        if let Some(b) = beta.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::Config(format!("beta {b} outside [0, 1]")));
        }
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let alpha_bar = alpha
            .iter()
            .scan(1.0, |acc, a| {
                *acc *= a;
                Some(*acc)
            })
            .collect();
        Ok(Self { beta, alpha, alpha_bar })
    }

    pub fn timesteps(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t - 1]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t - 1]
    }

    /// `ᾱ_t`, with `ᾱ_0 = 1`.
    pub fn alpha_bar(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.timesteps() {
            return Err(Error::Config(format!("timestep {t} outside 1..={}", self.timesteps())));
        }
        Ok(())
    }
}

fn mix(x: &ImageTensor, signal: f64, noise: f64, eps: &[f64]) -> Result<ImageTensor> {
    x.with_pixels(x.pixels().iter().zip(eps).map(|(p, e)| signal * p + noise * e).collect())
}

/// One Markov step: `√α_t · x + √(1 − α_t) · ε`. Not renormalised.
pub fn forward_diffuse_step(
    x: &ImageTensor,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<ImageTensor> {
    schedule.check_step(t)?;
    let alpha = schedule.alpha(t);
    let eps = rng.normals(x.len());
    mix(x, alpha.sqrt(), (1.0 - alpha).sqrt(), &eps)
}

/// Closed-form jump from clean data to level `t`:
/// `√ᾱ_t · x₀ + √(1 − ᾱ_t) · ε`.
pub fn forward_diffuse_to(
    x0: &ImageTensor,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<ImageTensor> {
    schedule.check_step(t)?;
    let ab = schedule.alpha_bar(t);
    let eps = rng.normals(x0.len());
    mix(x0, ab.sqrt(), (1.0 - ab).sqrt(), &eps)
}

/// Input at level `t` and target at level `t − 1`, both built from one noise
/// draw, clamped to ≥ 0 and L2-normalised.
pub fn make_training_pair(
    x0: &ImageTensor,
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
) -> Result<(ImageTensor, ImageTensor)> {
    schedule.check_step(t)?;
    let (ab_in, ab_out) = (schedule.alpha_bar(t), schedule.alpha_bar(t - 1));
    let mut last_err = None;
    for _ in 0..MAX_RESAMPLES {
        let eps = rng.normals(x0.len());
        let input = mix(x0, ab_in.sqrt(), (1.0 - ab_in).sqrt(), &eps)?;
        let target = mix(x0, ab_out.sqrt(), (1.0 - ab_out).sqrt(), &eps)?;
        match (normalize_nonneg(&input), normalize_nonneg(&target)) {
            (Ok(i), Ok(o)) => return Ok((i, o)),
            (Err(e), _) | (_, Err(e)) => last_err = Some(e),
        }
    }
    Err(Error::Encoding(format!(
        "no usable noise draw after {MAX_RESAMPLES} attempts: {}",
        last_err.map(|e| e.to_string()).unwrap_or_default()
    )))
}

/// Forward noise level denoised by reverse step `k` (1-based) of `timesteps`.
pub fn forward_level_for_reverse_step(k: usize, timesteps: usize) -> usize {
    timesteps + 1 - k
}

/// Timestep embedded in the circuit when it is fed an input at forward
/// level `t`. Training and sampling both go through this.
pub fn circuit_timestep(forward_level: usize) -> usize {
    forward_level
}

/// Standard-normal frame, clamped and normalised for encoding.
pub fn initial_noise(width: usize, height: usize, rng: &mut RngStream) -> Result<ImageTensor> {
    let mut last_err = None;
    for _ in 0..MAX_RESAMPLES {
        let raw = ImageTensor::new(width, height, rng.normals(width * height))?;
        match normalize_nonneg(&raw) {
            Ok(img) => return Ok(img),
            Err(e) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Encoding("no usable noise frame".into())))
}

/// Runs the trained circuit `spec.timesteps` times starting from `start`.
/// Returns `T + 1` frames, `start` first.
pub fn reverse_from(
    spec: &CircuitSpec,
    angles: &ParameterVector,
    start: ImageTensor,
    label: Option<usize>,
) -> Result<Vec<ImageTensor>> {
    let timesteps = spec.timesteps;
    let mut frames = Vec::with_capacity(timesteps + 1);
    let mut current = normalize_nonneg(&start)?;
    frames.push(current.clone());
    for k in 1..=timesteps {
        let t = circuit_timestep(forward_level_for_reverse_step(k, timesteps));
        let out = circuit_output(spec, angles, &current, t, label)?;
        current = normalize_nonneg(&out)?;
        frames.push(current.clone());
    }
    Ok(frames)
}

/// Generates one image from pure noise; the last frame is the sample.
pub fn reverse_sample(
    spec: &CircuitSpec,
    angles: &ParameterVector,
    schedule: &NoiseSchedule,
    rng: &mut RngStream,
    label: Option<usize>,
    width: usize,
    height: usize,
) -> Result<Vec<ImageTensor>> {
    if schedule.timesteps() != spec.timesteps {
        return Err(Error::Config(format!(
            "schedule has {} steps, circuit expects {}",
            schedule.timesteps(),
            spec.timesteps
        )));
    }
    let start = initial_noise(width, height, rng)?;
    reverse_from(spec, angles, start, label)
}
