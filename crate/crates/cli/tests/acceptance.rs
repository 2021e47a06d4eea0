//! Acceptance criteria. Runs every criterion, prints one PASS/FAIL line for
//! each and exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use tempfile::TempDir;

use eeqdm::circuit::{build_entanglement_stage, parameter_reduction, CircuitSpec, Layout, ParameterVector};
use eeqdm::datasets::{
    cifar10_from_batches, encode_idx_images, encode_idx_labels, mnist_from_idx, parse_cifar10_batch, parse_idx,
    IdxData, Resolution, CIFAR_RECORD,
};
use eeqdm::diffusion::NoiseSchedule;
use eeqdm::encoding::{normalize_nonneg, ImageTensor};
use eeqdm::grad::{loss, loss_and_gradient};
use eeqdm::metrics::{frechet_distance, pixel_feature_stats, psnr, ssim_global, FeatureStats, PSNR_CAP_DB};
use eeqdm::qsim::{circuit_unitary_oracle, Angle, Axis, GateOp, StateVector};
use eeqdm::rng::RngStream;
use eeqdm::train::{initial_angles, Trainer};
use eeqdm_cli::commands::cmd_train;
use eeqdm_cli::config::RunConfig;
use nalgebra::{DMatrix, DVector};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_secs, format!("took {:.2}s, limit {limit_secs}s", elapsed.as_secs_f64()))
}

fn ac1_param_counts() -> Outcome {
    let started = Instant::now();
    let count = |layout, depth| CircuitSpec::new(layout, 8, depth, 10).map(|s| s.param_count());
    let got = [
        count(Layout::Eeqdm, 10).map_err(|e| e.to_string())?,
        count(Layout::Eeqdm, 50).map_err(|e| e.to_string())?,
        count(Layout::Qddm, 50).map_err(|e| e.to_string())?,
    ];
    ensure(got == [150, 750, 1350], format!("counts {got:?}, expected [150, 750, 1350]"))?;
    within(started.elapsed(), 1.0)?;
    Ok("EEQDM L=10: 150, EEQDM L=50: 750, QDDM L=50: 1350".into())
}

fn ac2_reduction_band() -> Outcome {
    let started = Instant::now();
    let mut seen = Vec::new();
    for n in (8..=18).step_by(2) {
        let r = parameter_reduction(n).map_err(|e| e.to_string())?;
        ensure((0.40..=0.475).contains(&r), format!("n={n}: reduction {:.4}% outside band", 100.0 * r))?;
        seen.push(format!("{n}:{:.2}%", 100.0 * r));
    }
    within(started.elapsed(), 1.0)?;
    Ok(seen.join(" "))
}

fn ac3_bell_pairs() -> Outcome {
    let started = Instant::now();
    let mut worst = 1.0f64;
    for n in [2usize, 4, 6, 8] {
        let spec = CircuitSpec::new(Layout::Eeqdm, n, 1, 1).map_err(|e| e.to_string())?;
        let mut state = StateVector::zero(n + 1).map_err(|e| e.to_string())?;
        state.run(&build_entanglement_stage(&spec).map_err(|e| e.to_string())?, &[]).map_err(|e| e.to_string())?;
        let half = n / 2;
        let amp = std::f64::consts::FRAC_1_SQRT_2.powi(half as i32);
        let overlap: Complex64 = state
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(idx, _)| (0..half).all(|i| ((idx >> i) & 1) == ((idx >> (i + half)) & 1) && idx >> n == 0))
            .map(|(_, a)| a * amp)
            .sum();
        let fidelity = overlap.norm_sqr();
        worst = worst.min(fidelity);
        ensure(fidelity >= 1.0 - 1e-12, format!("n={n}: fidelity {fidelity}"))?;
    }
    within(started.elapsed(), 1.0)?;
    Ok(format!("worst fidelity 1 - {:.1e}", 1.0 - worst))
}

fn random_state(n: usize, rng: &mut RngStream) -> StateVector {
    let mut amps: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(rng.normal(), rng.normal())).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps).expect("normalised")
}

fn ac4_oracle_equivalence() -> Outcome {
    let started = Instant::now();
    let mut rng = RngStream::new(0xAC4);
    let mut worst = 0.0f64;
    for trial in 0..50 {
        let n = 1 + rng.below(4);
        let depth = 1 + rng.below(5);
        let mut gates = Vec::new();
        let mut angles = Vec::new();
        for _ in 0..depth {
            for q in 0..n {
                let pick = rng.below(if n > 1 { 5 } else { 4 });
                gates.push(match pick {
                    0 => GateOp::h(q),
                    1..=3 => {
                        angles.push((rng.uniform() - 0.5) * 4.0 * std::f64::consts::PI);
                        let axis = [Axis::X, Axis::Y, Axis::Z][pick - 1];
                        GateOp::Rot { axis, target: q, angle: Angle::Slot(angles.len() - 1) }
                    }
                    _ => GateOp::cnot(q, (q + 1 + rng.below(n - 1)) % n),
                });
            }
        }
        let psi = random_state(n, &mut rng);
        let u = circuit_unitary_oracle(&gates, &angles, n).map_err(|e| e.to_string())?;
        let mut evolved = psi.clone();
        evolved.run(&gates, &angles).map_err(|e| e.to_string())?;
        for row in 0..1 << n {
            let want: Complex64 = (0..1 << n).map(|c| u[(row, c)] * psi.amplitudes()[c]).sum();
            let diff = (evolved.amplitudes()[row] - want).norm();
            worst = worst.max(diff);
            ensure(diff <= 1e-12, format!("circuit {trial}: amplitude {row} off by {diff:e}"))?;
        }
    }
    within(started.elapsed(), 10.0)?;
    Ok(format!("50 circuits, max deviation {worst:.1e}"))
}

fn ac5_gradients() -> Outcome {
    let started = Instant::now();
    let h = 1e-5;
    let mut rng = RngStream::new(0xAC5);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for index in 0..20 {
        let layout = if index % 2 == 0 { Layout::Eeqdm } else { Layout::Qddm };
        let n = [2, 4, 6][rng.below(3)];
        let depth = 1 + rng.below(3);
        let spec = CircuitSpec::new(layout, n, depth, 10).map_err(|e| e.to_string())?;
        let angles = initial_angles(&spec, &mut rng);
        let mut image = || {
            let px = (0..1usize << n).map(|_| 0.05 + rng.uniform()).collect();
            normalize_nonneg(&ImageTensor::new(1 << n, 1, px).expect("finite")).expect("positive")
        };
        let (input, target) = (image(), image());
        let t = 1 + rng.below(10);
        let label = (rng.below(2) == 0).then(|| rng.below(10));
        let (_, grad) = loss_and_gradient(&spec, &angles, &input, &target, t, label).map_err(|e| e.to_string())?;
        let at = |a: Vec<f64>| {
            let a = ParameterVector::new(a).expect("finite");
            loss(&spec, &a, &input, &target, t, label).expect("valid instance")
        };
        for (slot, &g) in grad.as_slice().iter().enumerate() {
            let mut plus = angles.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[slot] += h;
            minus[slot] -= h;
            let fd = (at(plus) - at(minus)) / (2.0 * h);
            // Relative error, with an absolute floor of 1e-8 for vanishing partials.
            let rel = (g - fd).abs() / fd.abs().max(g.abs()).max(1e-3);
            worst = worst.max(rel);
            ensure(rel <= 1e-5, format!("instance {index} ({layout}, n={n}, L={depth}) slot {slot}: {g} vs {fd}"))?;
            checked += 1;
        }
    }
    within(started.elapsed(), 60.0)?;
    Ok(format!("20 instances, {checked} partials, max relative error {worst:.1e}"))
}

fn ac6_metric_identities() -> Outcome {
    let started = Instant::now();
    let mut rng = RngStream::new(0xAC6);
    let images: Vec<ImageTensor> =
        (0..30).map(|_| ImageTensor::new(4, 4, (0..16).map(|_| rng.uniform()).collect()).expect("finite")).collect();
    for x in &images {
        let s = ssim_global(x, x).map_err(|e| e.to_string())?;
        ensure(s == 1.0, format!("ssim(x, x) = {s}"))?;
        let p = psnr(x, x).map_err(|e| e.to_string())?;
        ensure(p == PSNR_CAP_DB, format!("psnr(x, x) = {p}"))?;
    }
    let stats = pixel_feature_stats(&images).map_err(|e| e.to_string())?;
    let self_dist = frechet_distance(&stats, &stats).map_err(|e| e.to_string())?;
    ensure(self_dist <= 1e-8, format!("frechet(s, s) = {self_dist:e}"))?;

    let one_d = |m: f64, v: f64| {
        FeatureStats::new(DVector::from_element(1, m), DMatrix::from_element(1, 1, v), 10).expect("valid stats")
    };
    for (a, b) in [(one_d(0.0, 1.0), one_d(1.0, 1.0)), (one_d(0.0, 1.0), one_d(0.0, 4.0))] {
        let d = frechet_distance(&a, &b).map_err(|e| e.to_string())?;
        ensure((d - 1.0).abs() <= 1e-12, format!("1-D case gave {d}"))?;
    }
    within(started.elapsed(), 1.0)?;
    Ok(format!("frechet(s, s) = {self_dist:.1e}"))
}

fn ac7_training() -> Outcome {
    let started = Instant::now();
    let digit = 3u8;
    let (dir, source) = match common::real_mnist_dir() {
        Some(d) => (TempOrReal::Real(d), "MNIST from EEQDM_MNIST_DIR"),
        None => {
            let tmp = TempDir::new().map_err(|e| e.to_string())?;
            let (images, labels) = common::synthetic_mnist(1000, 7);
            std::fs::write(tmp.path().join("train-images-idx3-ubyte"), images).map_err(|e| e.to_string())?;
            std::fs::write(tmp.path().join("train-labels-idx1-ubyte"), labels).map_err(|e| e.to_string())?;
            (TempOrReal::Temp(tmp), "synthetic seven-segment digits (no MNIST files found)")
        }
    };
    let out = TempDir::new().map_err(|e| e.to_string())?;
    let config = RunConfig {
        model: Layout::Eeqdm,
        resolution: Resolution::R8,
        depth: 10,
        timesteps: 10,
        epochs: 20,
        learning_rate: 0.1,
        seed: 2024,
        subset_size: 100,
        class_filter: Some(digit),
        data_dir: dir.path().to_path_buf(),
        output_dir: out.path().to_path_buf(),
        ..RunConfig::default()
    };
    let outcome = cmd_train(&config, None).map_err(|e| e.to_string())?;
    let history = &outcome.checkpoint.loss_history;
    let (first, last) = (history[0], history[history.len() - 1]);
    let best = history.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).expect("20 epochs");
    let summary = format!(
        "data: {source}; digit {digit}; loss {first:.5} -> {last:.5} (ratio {:.3}); best at epoch {}",
        last / first,
        best + 1
    );
    ensure(last <= 0.5 * first, format!("final loss not halved: {summary}"))?;
    ensure(best >= history.len() * 3 / 4, format!("best epoch outside final quartile: {summary}"))?;
    within(started.elapsed(), 15.0 * 60.0)?;
    Ok(format!("{summary}; {:.1}s", started.elapsed().as_secs_f64()))
}

enum TempOrReal {
    Temp(TempDir),
    Real(std::path::PathBuf),
}

impl TempOrReal {
    fn path(&self) -> &Path {
        match self {
            TempOrReal::Temp(t) => t.path(),
            TempOrReal::Real(p) => p,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn ac8_efficiency() -> Outcome {
    let (images, labels) = common::synthetic_mnist(16, 8);
    let slice = mnist_from_idx(&images, &labels, Resolution::R16).map_err(|e| e.to_string())?;
    let schedule = NoiseSchedule::default_linear(10).map_err(|e| e.to_string())?;
    let mut trainers = [Layout::Eeqdm, Layout::Qddm].map(|layout| {
        let spec = CircuitSpec::new(layout, 8, 10, 10).expect("valid spec");
        Trainer::new(spec, schedule.clone(), 0.1, 16, 5).expect("valid trainer")
    });
    let mut times = [Vec::new(), Vec::new()];
    for _ in 0..5 {
        for (k, tr) in trainers.iter_mut().enumerate() {
            let stats = tr.run_epoch(&slice.images, Some(&slice.labels)).map_err(|e| e.to_string())?;
            times[k].push(stats.wall_seconds);
        }
    }
    let [e, q] = times.map(median);
    let summary = format!("median epoch EEQDM {:.1} ms, QDDM {:.1} ms", 1e3 * e, 1e3 * q);
    ensure(e <= q, summary.clone())?;
    Ok(summary)
}

fn ac9_determinism() -> Outcome {
    let data = TempDir::new().map_err(|e| e.to_string())?;
    common::write_mnist_dir(data.path(), 60, 20);
    let work = TempDir::new().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<std::path::PathBuf, String> {
        let out = work.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_eeqdm"))
            .args(["train", "--epochs", "3", "--depth", "3", "--subset-size", "30", "--batch-size", "8"])
            .args(["--seed", "99", "--resolution", "8"])
            .arg("--data-dir")
            .arg(data.path())
            .arg("--output-dir")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), String::from_utf8_lossy(&status.stderr).into_owned())?;
        Ok(out)
    };
    let (a, b) = (run("a")?, run("b")?);
    for file in ["checkpoint.ckpt", "loss.csv"] {
        let (x, y) = (std::fs::read(a.join(file)), std::fs::read(b.join(file)));
        let (x, y) = (x.map_err(|e| e.to_string())?, y.map_err(|e| e.to_string())?);
        ensure(x == y, format!("{file} differs between runs"))?;
    }
    Ok("checkpoint.ckpt and loss.csv byte-identical across two runs".into())
}

fn random_bytes(rng: &mut RngStream) -> Vec<u8> {
    let len = rng.below(97);
    let mut bytes: Vec<u8> = (0..len).map(|_| rng.next_u64() as u8).collect();
    // Half the corpus starts with a real magic number to reach deeper checks.
    if len >= 4 && rng.below(2) == 0 {
        let magic: u32 = if rng.below(2) == 0 { 0x0803 } else { 0x0801 };
        bytes[..4].copy_from_slice(&magic.to_be_bytes());
    }
    bytes
}

fn ac10_parsers() -> Outcome {
    let started = Instant::now();
    let mut rng = RngStream::new(0xAC10);
    let labels = encode_idx_labels(&[1, 2]);
    let mut crashes = 0;
    let mut rejected = 0;
    for _ in 0..10_000 {
        let bytes = random_bytes(&mut rng);
        let result = catch_unwind(AssertUnwindSafe(|| {
            let idx = parse_idx(&bytes).is_err();
            let cifar = parse_cifar10_batch(&bytes).is_err();
            let mnist = mnist_from_idx(&bytes, &labels, Resolution::R8).is_err();
            let batches = cifar10_from_batches(std::slice::from_ref(&bytes), Resolution::R8).is_err();
            [idx, cifar, mnist, batches].iter().filter(|&&e| e).count()
        }));
        match result {
            Ok(n) => rejected += n,
            Err(_) => crashes += 1,
        }
    }
    ensure(crashes == 0, format!("{crashes} inputs crashed a parser"))?;

    let golden = [0x00, 0x00, 0x08, 0x03, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 2, 0, 255, 128, 64];
    let want = IdxData::Images { count: 1, rows: 2, cols: 2, pixels: vec![0, 255, 128, 64] };
    ensure(parse_idx(&golden).ok() == Some(want), "IDX golden fixture mismatch")?;
    ensure(encode_idx_images(2, 2, &[vec![0, 255, 128, 64]]) == golden, "IDX encoder mismatch")?;
    ensure(
        parse_idx(&[0, 0, 8, 1, 0, 0, 0, 3, 7, 0, 9]).ok() == Some(IdxData::Labels { count: 3, labels: vec![7, 0, 9] }),
        "IDX label fixture mismatch",
    )?;
    let mut record = vec![7u8];
    record.extend(std::iter::repeat_n(0, CIFAR_RECORD - 1));
    let slice = cifar10_from_batches(&[record], Resolution::R8).map_err(|e| e.to_string())?;
    ensure(slice.labels == [7] && slice.images[0].pixels().iter().all(|&p| p == 0.0), "CIFAR golden fixture mismatch")?;
    Ok(format!(
        "10000 inputs, 0 crashes, {rejected} typed rejections; golden fixtures exact; {:.2}s",
        started.elapsed().as_secs_f64()
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1", "parameter counts", ac1_param_counts),
        ("AC2", "reduction band", ac2_reduction_band),
        ("AC3", "Bell-pair stage", ac3_bell_pairs),
        ("AC4", "simulator vs dense oracle", ac4_oracle_equivalence),
        ("AC5", "adjoint vs finite differences", ac5_gradients),
        ("AC6", "metric identities", ac6_metric_identities),
        ("AC7", "desk-scale training", ac7_training),
        ("AC8", "relative efficiency", ac8_efficiency),
        ("AC9", "run determinism", ac9_determinism),
        ("AC10", "parser robustness", ac10_parsers),
    ];
    // Quiet the default panic printer; failures are reported on their line.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, check) in criteria {
        let result = catch_unwind(check).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match result {
            Ok(detail) => println!("{id} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("{id} FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 10 acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}
