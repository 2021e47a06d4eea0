//! Run configuration: defaults, flat `key = value` files and flag overrides.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use eeqdm::circuit::{CircuitSpec, Layout};
use eeqdm::datasets::{Resolution, Source, NUM_CLASSES};
use eeqdm::diffusion::DEFAULT_TIMESTEPS;
use eeqdm::encoding::data_qubits_for;
use eeqdm::train::DEFAULT_BATCH_SIZE;

use crate::error::{io_err, CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: Layout,
    pub dataset: Source,
    pub resolution: Resolution,
    pub depth: usize,
    pub timesteps: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub subset_size: usize,
    pub class_filter: Option<u8>,
    /// Feed class labels to the circuit during training and sampling.
    pub conditional: bool,
    pub data_dir: PathBuf,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: Layout::Eeqdm,
            dataset: Source::Mnist,
            resolution: Resolution::R8,
            depth: 10,
            timesteps: DEFAULT_TIMESTEPS,
            epochs: 20,
            batch_size: DEFAULT_BATCH_SIZE,
            learning_rate: eeqdm::adam::DEFAULT_LEARNING_RATE,
            seed: 0,
            subset_size: 100,
            class_filter: None,
            conditional: true,
            data_dir: PathBuf::from("data"),
            output_dir: PathBuf::from("out"),
        }
    }
}

/// Keys written into checkpoints. `output_dir` is left out so that the same
/// run written to two places produces the same bytes.
pub const SNAPSHOT_KEYS: [&str; 13] = [
    "model",
    "dataset",
    "resolution",
    "depth",
    "timesteps",
    "epochs",
    "batch_size",
    "learning_rate",
    "seed",
    "subset_size",
    "class_filter",
    "conditional",
    "data_dir",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T> {
    value.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> CliResult<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::Config(format!("{key}: expected a boolean, got '{value}'"))),
    }
}

impl RunConfig {
    /// Sets one field from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        let value = value.trim();
        match key.trim() {
            "model" => self.model = value.parse()?,
            "dataset" => self.dataset = value.parse()?,
            "resolution" => self.resolution = Resolution::from_side(parse_num(key, value)?)?,
            "depth" => self.depth = parse_num(key, value)?,
            "timesteps" => self.timesteps = parse_num(key, value)?,
            "epochs" => self.epochs = parse_num(key, value)?,
            "batch_size" => self.batch_size = parse_num(key, value)?,
            "learning_rate" => self.learning_rate = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "subset_size" => self.subset_size = parse_num(key, value)?,
            "class_filter" => {
                self.class_filter = match value {
                    "" | "none" => None,
                    v => Some(parse_num(key, v)?),
                }
            }
            "conditional" => self.conditional = parse_bool(key, value)?,
            "data_dir" => self.data_dir = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Textual form of one field, the inverse of [`RunConfig::set`].
    pub fn get(&self, key: &str) -> CliResult<String> {
        Ok(match key {
            "model" => self.model.to_string(),
            "dataset" => self.dataset.to_string(),
            "resolution" => self.resolution.side().to_string(),
            "depth" => self.depth.to_string(),
            "timesteps" => self.timesteps.to_string(),
            "epochs" => self.epochs.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "learning_rate" => self.learning_rate.to_string(),
            "seed" => self.seed.to_string(),
            "subset_size" => self.subset_size.to_string(),
            "class_filter" => self.class_filter.map_or_else(|| "none".into(), |c| c.to_string()),
            "conditional" => self.conditional.to_string(),
            "data_dir" => path_text(&self.data_dir)?,
            "output_dir" => path_text(&self.output_dir)?,
            other => return Err(CliError::Config(format!("unknown key '{other}'"))),
        })
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> CliResult<()> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        self.apply_text(&text)
    }

    /// The snapshot stored in checkpoints, one `key=value` per line.
    pub fn snapshot(&self) -> CliResult<String> {
        let mut out = String::new();
        for key in SNAPSHOT_KEYS {
            writeln!(out, "{key}={}", self.get(key)?).expect("writing to a String");
        }
        Ok(out)
    }

    pub fn validate(&self) -> CliResult<()> {
        for (name, v) in [
            ("depth", self.depth),
            ("timesteps", self.timesteps),
            ("batch_size", self.batch_size),
            ("subset_size", self.subset_size),
        ] {
            if v == 0 {
                return Err(CliError::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(CliError::Config(format!("learning_rate {} must be positive", self.learning_rate)));
        }
        if let Some(c) = self.class_filter {
            if c >= NUM_CLASSES {
                return Err(CliError::Config(format!("class_filter {c} outside 0..{NUM_CLASSES}")));
            }
        }
        self.circuit_spec().map(|_| ())
    }

    /// Circuit sized for the configured resolution.
    pub fn circuit_spec(&self) -> CliResult<CircuitSpec> {
        let n = data_qubits_for(self.resolution.pixels());
        Ok(CircuitSpec::new(self.model, n, self.depth, self.timesteps)?)
    }
}

fn path_text(p: &Path) -> CliResult<String> {
    let s = p.to_str().ok_or_else(|| CliError::Config(format!("path {} is not valid UTF-8", p.display())))?;
    if s.contains('\n') {
        return Err(CliError::Config("paths may not contain line breaks".into()));
    }
    Ok(s.to_string())
}
