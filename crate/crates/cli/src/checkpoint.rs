//! Checkpoint files: a UTF-8 `key=value` header closed by `end_header`,
//! followed by little-endian `f64` blocks for the angles, both Adam moments
//! and the loss history, in that order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use eeqdm::adam::AdamState;
use eeqdm::circuit::ParameterVector;
use eeqdm::diffusion::NoiseSchedule;
use eeqdm::rng::RngStream;
use eeqdm::train::Trainer;

use crate::config::{RunConfig, SNAPSHOT_KEYS};
use crate::error::{io_err, CliError, CliResult};

pub const MAGIC: &str = "eeqdm-checkpoint";
pub const FORMAT_VERSION: u32 = 1;
const END_HEADER: &str = "end_header\n";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub params: ParameterVector,
    pub adam: AdamState,
    pub epoch: usize,
    pub loss_history: Vec<f64>,
    pub rng_seed: u64,
    pub rng_stream: u64,
    pub rng_word_pos: u128,
}

fn bad(msg: impl std::fmt::Display) -> CliError {
    CliError::Checkpoint(format!("checkpoint format v{FORMAT_VERSION}: {msg}"))
}

impl Checkpoint {
    pub fn from_trainer(config: &RunConfig, trainer: &Trainer) -> Self {
        Self {
            config: config.clone(),
            params: trainer.params.clone(),
            adam: trainer.adam.clone(),
            epoch: trainer.epoch,
            loss_history: trainer.loss_history.clone(),
            rng_seed: trainer.rng.seed(),
            rng_stream: trainer.rng.stream(),
            rng_word_pos: trainer.rng.word_pos(),
        }
    }

    /// Rebuilds the trainer exactly as it was when saved.
    pub fn into_trainer(self) -> CliResult<Trainer> {
        let spec = self.config.circuit_spec()?;
        let schedule = NoiseSchedule::default_linear(self.config.timesteps)?;
        Ok(Trainer {
            spec,
            schedule,
            params: self.params,
            adam: self.adam,
            rng: RngStream::restore(self.rng_seed, self.rng_stream, self.rng_word_pos),
            batch_size: self.config.batch_size,
            epoch: self.epoch,
            loss_history: self.loss_history,
        })
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut header = String::new();
        let mut line = |k: &str, v: String| writeln!(header, "{k}={v}").expect("writing to a String");
        line("format", MAGIC.into());
        line("format_version", FORMAT_VERSION.to_string());
        header.push_str(&self.config.snapshot()?);
        let mut line = |k: &str, v: String| writeln!(header, "{k}={v}").expect("writing to a String");
        line("epoch", self.epoch.to_string());
        line("adam_step", self.adam.step.to_string());
        line("rng_seed", self.rng_seed.to_string());
        line("rng_stream", self.rng_stream.to_string());
        line("rng_word_pos", self.rng_word_pos.to_string());
        line("param_count", self.params.len().to_string());
        line("loss_history_len", self.loss_history.len().to_string());
        header.push_str(END_HEADER);

        let mut out = header.into_bytes();
        let blocks = [self.params.as_slice(), &self.adam.first_moment, &self.adam.second_moment, &self.loss_history];
        for block in blocks {
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let marker = END_HEADER.as_bytes();
        let split = bytes.windows(marker.len()).position(|w| w == marker).ok_or_else(|| bad("missing end_header"))?;
        let header = std::str::from_utf8(&bytes[..split]).map_err(|_| bad("header is not UTF-8"))?;
        let body = &bytes[split + marker.len()..];

        let mut fields = BTreeMap::new();
        for line in header.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("malformed header line '{line}'")))?;
            if fields.insert(k, v).is_some() {
                return Err(bad(format!("duplicate key '{k}'")));
            }
        }
        let field = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing key '{k}'")));
        let num = |k: &str| -> CliResult<u128> {
            field(k)?.parse::<u128>().map_err(|_| bad(format!("key '{k}' is not an integer")))
        };
        if field("format")? != MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = field("format_version")?;
        if version != FORMAT_VERSION.to_string() {
            return Err(CliError::Checkpoint(format!(
                "unsupported checkpoint format version '{version}', expected {FORMAT_VERSION}"
            )));
        }

        let mut config = RunConfig::default();
        for key in SNAPSHOT_KEYS {
            config.set(key, field(key)?).map_err(|e| bad(e.to_string()))?;
        }
        config.validate().map_err(|e| bad(e.to_string()))?;

        let to_usize = |k: &str| -> CliResult<usize> {
            usize::try_from(num(k)?).map_err(|_| bad(format!("key '{k}' out of range")))
        };
        let to_u64 =
            |k: &str| -> CliResult<u64> { u64::try_from(num(k)?).map_err(|_| bad(format!("key '{k}' out of range"))) };
        let param_count = to_usize("param_count")?;
        let history_len = to_usize("loss_history_len")?;
        let expected_params = config.circuit_spec()?.param_count();
        if param_count != expected_params {
            return Err(bad(format!("{param_count} parameters, configuration needs {expected_params}")));
        }
        let epoch = to_usize("epoch")?;
        if history_len != epoch {
            return Err(bad(format!("{history_len} loss entries for {epoch} epochs")));
        }
        let expected_len = (3 * param_count + history_len) * 8;
        if body.len() != expected_len {
            return Err(bad(format!("payload is {} bytes, expected {expected_len}", body.len())));
        }
        let mut values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunks are 8 bytes")));
        let mut take = |n: usize| values.by_ref().take(n).collect::<Vec<f64>>();
        let params = ParameterVector::new(take(param_count)).map_err(|e| bad(e.to_string()))?;
        let mut adam = AdamState::new(param_count, config.learning_rate);
        adam.first_moment = take(param_count);
        adam.second_moment = take(param_count);
        adam.step = to_u64("adam_step")?;
        let loss_history = take(history_len);
        if adam.first_moment.iter().chain(&adam.second_moment).chain(&loss_history).any(|v| !v.is_finite()) {
            return Err(bad("non-finite optimizer or loss value"));
        }

        Ok(Self {
            config,
            params,
            adam,
            epoch,
            loss_history,
            rng_seed: to_u64("rng_seed")?,
            rng_stream: to_u64("rng_stream")?,
            rng_word_pos: num("rng_word_pos")?,
        })
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_bytes()?).map_err(|e| io_err(path, e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = RunConfig { depth: 2, ..Default::default() };
        let spec = config.circuit_spec().unwrap();
        let schedule = NoiseSchedule::default_linear(config.timesteps).unwrap();
        let mut trainer = Trainer::new(spec, schedule, 0.1, 4, 5).unwrap();
        trainer.epoch = 2;
        trainer.loss_history = vec![0.25, 0.125];
        trainer.adam.step = 7;
        trainer.adam.first_moment[3] = -1.5e-3;
        trainer.rng.next_u64();
        Checkpoint::from_trainer(&config, &trainer)
    }

    #[test]
    fn round_trip_is_lossless() {
        let ck = sample();
        let bytes = ck.to_bytes().unwrap();
        assert_eq!(Checkpoint::from_bytes(&bytes).unwrap(), ck);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let bytes = sample().to_bytes().unwrap();
        for cut in [0, 10, bytes.len() - 1] {
            assert!(matches!(Checkpoint::from_bytes(&bytes[..cut]), Err(CliError::Checkpoint(_))));
        }
        let text = String::from_utf8_lossy(&bytes).replace("format_version=1", "format_version=9");
        let err = Checkpoint::from_bytes(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("version '9'"), "{err}");
        assert!(Checkpoint::from_bytes(b"garbage").is_err());
    }
}
