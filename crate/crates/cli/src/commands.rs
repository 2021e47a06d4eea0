use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use eeqdm::circuit::{parameter_reduction, CircuitSpec, Layout, ParameterVector, NUM_CLASSES};
use eeqdm::datasets::{class_filter, load_cifar10, load_mnist, DatasetSlice, Source};
use eeqdm::diffusion::{reverse_sample, NoiseSchedule};
use eeqdm::encoding::ImageTensor;
use eeqdm::metrics::{frechet_distance, minmax_rescale, mse, pixel_feature_stats, psnr, ssim_global};
use eeqdm::rng::RngStream;
use eeqdm::train::{EpochStats, Trainer};

use crate::checkpoint::Checkpoint;
use crate::config::RunConfig;
use crate::error::{io_err, CliError, CliResult};

pub const CHECKPOINT_FILE: &str = "checkpoint.ckpt";
pub const LOSS_CSV: &str = "loss.csv";
pub const TIMING_CSV: &str = "timing.csv";
pub const EVAL_HEADER: &str = "class,count,mse,ssim,psnr_db,frechet";
pub const PARAMS_HEADER: &str = "n,eeqdm_params,qddm_params,reduction_pct";

pub const MNIST_TRAIN: [&str; 2] = ["train-images-idx3-ubyte", "train-labels-idx1-ubyte"];
pub const MNIST_TEST: [&str; 2] = ["t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"];
pub const CIFAR_TRAIN: [&str; 5] =
    ["data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin", "data_batch_4.bin", "data_batch_5.bin"];
pub const CIFAR_TEST: &str = "test_batch.bin";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn ensure_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Loads one split, applies the class filter and truncates to the subset size.
pub fn load_split(config: &RunConfig, split: Split, limit: usize) -> CliResult<DatasetSlice> {
    let dir = &config.data_dir;
    let slice = match config.dataset {
        Source::Mnist => {
            let [images, labels] = if split == Split::Train { MNIST_TRAIN } else { MNIST_TEST };
            load_mnist(&dir.join(images), &dir.join(labels), config.resolution)?
        }
        Source::Cifar10 => {
            let paths: Vec<PathBuf> = match split {
                Split::Train => CIFAR_TRAIN.iter().map(|f| dir.join(f)).filter(|p| p.exists()).collect(),
                Split::Test => vec![dir.join(CIFAR_TEST)],
            };
            if paths.is_empty() {
                return Err(CliError::Io(format!("no CIFAR-10 training batches in {}", dir.display())));
            }
            let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
            load_cifar10(&refs, config.resolution)?
        }
    };
    let slice = match config.class_filter {
        Some(c) => class_filter(&slice, c)?,
        None => slice,
    };
    let slice = slice.truncated(limit);
    if slice.is_empty() {
        return Err(CliError::Config("no images left after filtering".into()));
    }
    Ok(slice)
}

fn loss_csv(history: &[f64]) -> String {
    let mut out = String::from("epoch,mean_loss\n");
    for (i, l) in history.iter().enumerate() {
        writeln!(out, "{},{l}", i + 1).expect("writing to a String");
    }
    out
}

fn timing_csv(stats: &[EpochStats]) -> String {
    let mut out = String::from("epoch,wall_seconds\n");
    for s in stats {
        writeln!(out, "{},{:.6}", s.epoch, s.wall_seconds).expect("writing to a String");
    }
    out
}

/// Result of a `train` invocation.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub epochs_run: Vec<EpochStats>,
}

/// Trains until `config.epochs` total epochs, optionally continuing from a
/// checkpoint, and writes the checkpoint plus loss and timing CSVs.
pub fn cmd_train(config: &RunConfig, resume: Option<&Checkpoint>) -> CliResult<TrainOutcome> {
    config.validate()?;
    let data = load_split(config, Split::Train, config.subset_size)?;
    let mut trainer = match resume {
        Some(ck) => {
            let mut snapshot = ck.config.clone();
            snapshot.epochs = config.epochs;
            snapshot.output_dir = config.output_dir.clone();
            if &snapshot != config {
                return Err(CliError::Config("resume configuration differs from the checkpoint".into()));
            }
            if config.epochs < ck.epoch {
                return Err(CliError::Config(format!(
                    "checkpoint already has {} epochs, asked for {}",
                    ck.epoch, config.epochs
                )));
            }
            ck.clone().into_trainer()?
        }
        None => {
            let spec = config.circuit_spec()?;
            let schedule = NoiseSchedule::default_linear(config.timesteps)?;
            Trainer::new(spec, schedule, config.learning_rate, config.batch_size, config.seed)?
        }
    };
    let labels = config.conditional.then_some(data.labels.as_slice());
    let mut epochs_run = Vec::new();
    while trainer.epoch < config.epochs {
        epochs_run.push(trainer.run_epoch(&data.images, labels)?);
    }

    let checkpoint = Checkpoint::from_trainer(config, &trainer);
    ensure_dir(&config.output_dir)?;
    checkpoint.save(&config.output_dir.join(CHECKPOINT_FILE))?;
    write_file(&config.output_dir.join(LOSS_CSV), loss_csv(&trainer.loss_history).as_bytes())?;
    write_file(&config.output_dir.join(TIMING_CSV), timing_csv(&epochs_run).as_bytes())?;
    Ok(TrainOutcome { checkpoint, epochs_run })
}

/// Binary greyscale PGM of a min-max rescaled image.
pub fn pgm_bytes(image: &ImageTensor) -> Vec<u8> {
    let scaled = minmax_rescale(image);
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(scaled.pixels().iter().map(|p| (p * 255.0).round().clamp(0.0, 255.0) as u8));
    out
}

fn model_parts(ck: &Checkpoint) -> CliResult<(CircuitSpec, NoiseSchedule)> {
    Ok((ck.config.circuit_spec()?, NoiseSchedule::default_linear(ck.config.timesteps)?))
}

fn check_label(ck: &Checkpoint, label: Option<u8>) -> CliResult<Option<usize>> {
    match label {
        Some(l) if l as usize >= NUM_CLASSES => Err(CliError::Config(format!("label {l} outside 0..{NUM_CLASSES}"))),
        Some(_) if !ck.config.conditional => {
            Err(CliError::Config("checkpoint was trained without label conditioning".into()))
        }
        other => Ok(other.map(usize::from)),
    }
}

/// Generates `count` trajectories; sample `i` uses sub-stream `i` of `seed`.
pub fn generate(ck: &Checkpoint, count: usize, seed: u64, label: Option<u8>) -> CliResult<Vec<Vec<ImageTensor>>> {
    let label = check_label(ck, label)?;
    let (spec, schedule) = model_parts(ck)?;
    let side = ck.config.resolution.side();
    let angles: &ParameterVector = &ck.params;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::with_stream(seed, i as u64);
            Ok(reverse_sample(&spec, angles, &schedule, &mut rng, label, side, side)?)
        })
        .collect()
}

/// Writes `sample_NNNN.pgm` per sample and, with `trajectory`, one
/// `sample_NNNN_step_KK.pgm` per frame. Returns the written paths.
pub fn cmd_sample(
    ck: &Checkpoint,
    count: usize,
    seed: u64,
    label: Option<u8>,
    trajectory: bool,
    output_dir: &Path,
) -> CliResult<Vec<PathBuf>> {
    let runs = generate(ck, count, seed, label)?;
    if runs.is_empty() {
        return Ok(Vec::new());
    }
    ensure_dir(output_dir)?;
    let mut written = Vec::new();
    for (i, frames) in runs.iter().enumerate() {
        let last = frames.last().expect("trajectories hold at least one frame");
        let path = output_dir.join(format!("sample_{i:04}.pgm"));
        write_file(&path, &pgm_bytes(last))?;
        written.push(path);
        if trajectory {
            for (k, frame) in frames.iter().enumerate() {
                let path = output_dir.join(format!("sample_{i:04}_step_{k:02}.pgm"));
                write_file(&path, &pgm_bytes(frame))?;
                written.push(path);
            }
        }
    }
    Ok(written)
}

/// One row of the evaluation report.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    /// Class digit, or `None` for the aggregate row.
    pub class: Option<u8>,
    pub count: usize,
    pub mse: f64,
    pub ssim: f64,
    pub psnr_db: f64,
    pub frechet: f64,
}

impl EvalRow {
    pub fn csv_line(&self) -> String {
        let class = self.class.map_or_else(|| "all".to_string(), |c| c.to_string());
        format!("{class},{},{},{},{},{}", self.count, self.mse, self.ssim, self.psnr_db, self.frechet)
    }
}

/// Compares generated images with real ones. Image metrics pair generated
/// image `i` with real image `i mod |real|` after min-max rescaling both;
/// the Fréchet distance compares the two pixel distributions.
pub fn evaluate_sets(class: Option<u8>, real: &[ImageTensor], generated: &[ImageTensor]) -> CliResult<EvalRow> {
    if real.is_empty() || generated.is_empty() {
        return Err(CliError::Config("evaluation needs real and generated images".into()));
    }
    let (mut m, mut s, mut p) = (0.0, 0.0, 0.0);
    for (i, g) in generated.iter().enumerate() {
        let g = minmax_rescale(g);
        let r = minmax_rescale(&real[i % real.len()]);
        m += mse(&g, &r)?;
        s += ssim_global(&g, &r)?;
        p += psnr(&g, &r)?;
    }
    let n = generated.len() as f64;
    let frechet = frechet_distance(&pixel_feature_stats(real)?, &pixel_feature_stats(generated)?)?;
    Ok(EvalRow { class, count: generated.len(), mse: m / n, ssim: s / n, psnr_db: p / n, frechet })
}

pub fn eval_csv(rows: &[EvalRow]) -> String {
    let mut out = format!("{EVAL_HEADER}\n");
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Per-class and aggregate metrics of `per_class` samples against the test split.
pub fn cmd_eval(ck: &Checkpoint, data_dir: Option<&Path>, per_class: usize, seed: u64) -> CliResult<Vec<EvalRow>> {
    if per_class < 2 {
        return Err(CliError::Config("need at least 2 samples per class for covariance estimates".into()));
    }
    let mut config = ck.config.clone();
    if let Some(dir) = data_dir {
        config.data_dir = dir.to_path_buf();
    }
    config.class_filter = None;
    let test = load_split(&config, Split::Test, usize::MAX)?;
    let classes: Vec<u8> = match ck.config.class_filter {
        Some(c) => vec![c],
        None => (0..NUM_CLASSES as u8).collect(),
    };

    let mut rows = Vec::new();
    let (mut all_real, mut all_generated) = (Vec::new(), Vec::new());
    for (k, &class) in classes.iter().enumerate() {
        let real: Vec<ImageTensor> = test
            .images
            .iter()
            .zip(&test.labels)
            .filter(|(_, &l)| l == class)
            .map(|(im, _)| im.clone())
            .take(per_class)
            .collect();
        if real.len() < 2 {
            return Err(CliError::Config(format!("test split has fewer than 2 images of class {class}")));
        }
        let label = ck.config.conditional.then_some(class);
        let class_seed = seed.wrapping_add((k as u64) << 32);
        let generated: Vec<ImageTensor> = generate(ck, per_class, class_seed, label)?
            .into_iter()
            .map(|frames| frames.into_iter().last().expect("non-empty trajectory"))
            .collect();
        rows.push(evaluate_sets(Some(class), &real, &generated)?);
        all_real.extend(real);
        all_generated.extend(generated);
    }
    rows.push(evaluate_sets(None, &all_real, &all_generated)?);
    Ok(rows)
}

/// Parameter counts of both layouts and the percentage saved, per `n`.
pub fn cmd_params_compare(ns: &[usize], depth: usize) -> CliResult<String> {
    let mut out = format!("{PARAMS_HEADER}\n");
    for &n in ns {
        if n % 2 != 0 {
            return Err(CliError::Config(format!("n = {n} is odd; pairwise entanglement needs even n")));
        }
        let e = CircuitSpec::new(Layout::Eeqdm, n, depth, 1)?.param_count();
        let q = CircuitSpec::new(Layout::Qddm, n, depth, 1)?.param_count();
        let pct = 100.0 * parameter_reduction(n)?;
        writeln!(out, "{n},{e},{q},{pct:.2}").expect("writing to a String");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_table() {
        let csv = cmd_params_compare(&[8, 18], 10).unwrap();
        assert_eq!(csv, "n,eeqdm_params,qddm_params,reduction_pct\n8,150,270,44.44\n18,300,570,47.37\n");
        assert!(cmd_params_compare(&[7], 10).is_err());
    }

    #[test]
    fn pgm_layout() {
        let img = ImageTensor::new(2, 2, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        assert_eq!(pgm_bytes(&img), b"P5\n2 2\n255\n\x00\x80\xff\x40".to_vec());
    }

    #[test]
    fn real_against_itself() {
        let mut rng = RngStream::new(6);
        let real: Vec<ImageTensor> =
            (0..12).map(|_| ImageTensor::new(4, 4, (0..16).map(|_| rng.uniform()).collect()).unwrap()).collect();
        let row = evaluate_sets(Some(2), &real, &real).unwrap();
        assert_eq!(row.ssim, 1.0);
        assert_eq!(row.mse, 0.0);
        assert!(row.frechet <= 1e-8);
        assert!(row.csv_line().starts_with("2,12,0,1,100,"));
    }
}
