//! Mini-batch training of the circuit angles.
//!
//! Every epoch shuffles the images, draws a timestep uniformly from `1..=T`
//! for each one, builds a shared-noise training pair and takes one Adam step
//! per batch on the mean gradient. All randomness comes from a single
//! [`RngStream`] so a run is reproducible from its seed, and resumable from
//! the stream position.

use std::f64::consts::TAU;
use std::time::Instant;

use crate::adam::AdamState;
use crate::circuit::{CircuitSpec, ParameterVector};
use crate::diffusion::{circuit_timestep, make_training_pair, NoiseSchedule};
use crate::encoding::ImageTensor;
use crate::grad::{batch_loss_and_gradient, TrainingSample};
use crate::rng::RngStream;
use crate::{Error, Result};

pub const DEFAULT_BATCH_SIZE: usize = 16;

/// Outcome of one pass over the training images.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based index of the finished epoch.
    pub epoch: usize,
    /// Mean per-sample loss, each measured before that batch's update.
    pub mean_loss: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct Trainer {
    pub spec: CircuitSpec,
    pub schedule: NoiseSchedule,
    pub params: ParameterVector,
    pub adam: AdamState,
    pub rng: RngStream,
    pub batch_size: usize,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
}

/// Angles drawn uniformly from `[0, 2π)`.
pub fn initial_angles(spec: &CircuitSpec, rng: &mut RngStream) -> ParameterVector {
    let angles = (0..spec.param_count()).map(|_| TAU * rng.uniform()).collect();
    ParameterVector::new(angles).expect("uniform draws are finite")
}

impl Trainer {
    /// Fresh run: angles are the first draws of the seeded stream.
    pub fn new(
        spec: CircuitSpec,
        schedule: NoiseSchedule,
        learning_rate: f64,
        batch_size: usize,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        if schedule.timesteps() != spec.timesteps {
            return Err(Error::Config(format!(
                "schedule has {} steps, circuit expects {}",
                schedule.timesteps(),
                spec.timesteps
            )));
        }
        if batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning rate {learning_rate} must be positive")));
        }
        let mut rng = RngStream::new(seed);
        let params = initial_angles(&spec, &mut rng);
        let adam = AdamState::new(params.len(), learning_rate);
        Ok(Self { spec, schedule, params, adam, rng, batch_size, epoch: 0, loss_history: Vec::new() })
    }

    /// One epoch over `images`; `labels` switches on label conditioning.
    pub fn run_epoch(&mut self, images: &[ImageTensor], labels: Option<&[u8]>) -> Result<EpochStats> {
        if images.is_empty() {
            return Err(Error::Config("no training images".into()));
        }
        if let Some(labels) = labels {
            if labels.len() != images.len() {
                return Err(Error::Structural(format!("{} images but {} labels", images.len(), labels.len())));
            }
        }
        let started = Instant::now();
        let mut order: Vec<usize> = (0..images.len()).collect();
        self.rng.shuffle(&mut order);

        let mut total = 0.0;
        for chunk in order.chunks(self.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &idx in chunk {
                let level = 1 + self.rng.below(self.schedule.timesteps());
                let (input, target) = make_training_pair(&images[idx], level, &self.schedule, &mut self.rng)?;
                batch.push(TrainingSample {
                    input,
                    target,
                    t: circuit_timestep(level),
                    label: labels.map(|l| l[idx] as usize),
                });
            }
            let (_, grad, losses) = batch_loss_and_gradient(&self.spec, &self.params, &batch)?;
            total += losses.iter().sum::<f64>();
            self.adam.step(self.params.as_mut_slice(), grad.as_slice())?;
        }

        let mean_loss = total / images.len() as f64;
        self.epoch += 1;
        self.loss_history.push(mean_loss);
        Ok(EpochStats { epoch: self.epoch, mean_loss, wall_seconds: started.elapsed().as_secs_f64() })
    }
}
