//! Image-quality and distribution metrics.
//!
//! SSIM is the single-window form over whole-image statistics. The Fréchet
//! distance is the usual Gaussian formula, applied here to flattened pixel
//! vectors rather than network activations, so its magnitudes are not
//! comparable to Inception-based FID scores.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::encoding::ImageTensor;
use crate::{Error, Result};

/// Value returned by [`psnr`] for identical images.
pub const PSNR_CAP_DB: f64 = 100.0;

/// Diagonal shift for near-singular covariances before taking square roots.
pub const FRECHET_EPS: f64 = 1e-10;

const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 1.0;

fn check_same_shape(a: &ImageTensor, b: &ImageTensor) -> Result<()> {
    if !a.same_shape(b) {
        return Err(Error::Shape(format!("{}x{} vs {}x{}", a.width(), a.height(), b.width(), b.height())));
    }
    Ok(())
}

/// Rescales pixels linearly onto `[0, 1]`. A constant image has no range to
/// stretch and is only clamped into `[0, 1]`.
pub fn minmax_rescale(image: &ImageTensor) -> ImageTensor {
    let (lo, hi) =
        image.pixels().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| (lo.min(p), hi.max(p)));
    let pixels = if hi > lo {
        image.pixels().iter().map(|p| (p - lo) / (hi - lo)).collect()
    } else {
        image.pixels().iter().map(|p| p.clamp(0.0, 1.0)).collect()
    };
    image.with_pixels(pixels).expect("rescaling keeps shape and finiteness")
}

/// Mean squared pixel difference.
pub fn mse(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    check_same_shape(a, b)?;
    let n = a.len() as f64;
    Ok(a.pixels().iter().zip(b.pixels()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / n)
}

/// Global SSIM with `c₁ = (0.01·L)²`, `c₂ = (0.03·L)²` and `L = 1`.
///
/// Inputs are expected on `[0, 1]`; see [`minmax_rescale`].
pub fn ssim_global(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    check_same_shape(a, b)?;
    let n = a.len() as f64;
    let mu_x = a.pixels().iter().sum::<f64>() / n;
    let mu_y = b.pixels().iter().sum::<f64>() / n;
    let (mut var_x, mut var_y, mut cov) = (0.0, 0.0, 0.0);
    for (x, y) in a.pixels().iter().zip(b.pixels()) {
        let (dx, dy) = (x - mu_x, y - mu_y);
        var_x += dx * dx;
        var_y += dy * dy;
        cov += dx * dy;
    }
    var_x /= n;
    var_y /= n;
    cov /= n;
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    Ok((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2) / ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)))
}

/// PSNR in dB from a mean squared error and peak value.
pub fn psnr_from_mse(mse: f64, max_value: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        20.0 * (max_value / mse.sqrt()).log10()
    }
}

/// PSNR in dB with `MAX_I = 1`; identical images give [`PSNR_CAP_DB`].
pub fn psnr(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?, 1.0))
}

/// Mean and covariance of a feature distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureStats {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub sample_count: usize,
}

impl FeatureStats {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, sample_count: usize) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::Shape(format!(
                "mean of length {d} with {}x{} covariance",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if mean.iter().chain(covariance.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature statistics".into()));
        }
        Ok(Self { mean, covariance, sample_count })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Mean and unbiased sample covariance of flattened pixel vectors.
pub fn pixel_feature_stats(images: &[ImageTensor]) -> Result<FeatureStats> {
    if images.len() < 2 {
        return Err(Error::Structural(format!("feature statistics need at least 2 images, got {}", images.len())));
    }
    let first = &images[0];
    if let Some(bad) = images.iter().find(|im| !im.same_shape(first)) {
        return Err(Error::Shape(format!(
            "mixed image shapes {}x{} and {}x{}",
            first.width(),
            first.height(),
            bad.width(),
            bad.height()
        )));
    }
    let d = first.len();
    let n = images.len();
    let mut mean = DVector::zeros(d);
    for im in images {
        mean += DVector::from_column_slice(im.pixels());
    }
    mean /= n as f64;
    let mut cov = DMatrix::zeros(d, d);
    for im in images {
        let centered = DVector::from_column_slice(im.pixels()) - &mean;
        cov.ger(1.0, &centered, &centered, 1.0);
    }
    cov /= (n - 1) as f64;
    FeatureStats::new(mean, cov, n)
}

/// Square root of a symmetric PSD matrix. The spectrum is shifted by
/// [`FRECHET_EPS`] only when its smallest eigenvalue falls below it.
fn regularised_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = if min < FRECHET_EPS { FRECHET_EPS } else { 0.0 };
    let roots = eig.eigenvalues.map(|l| (l + shift).max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// `‖μ_r − μ_g‖² + Tr(Σ_r + Σ_g − 2(Σ_r Σ_g)^{1/2})`, clamped at zero.
///
/// The trace of `(Σ_r Σ_g)^{1/2}` is taken as the trace of the square root of
/// the symmetric matrix `A Σ_g A` with `A = Σ_r^{1/2}`, which has the same
/// spectrum. A near-singular `Σ_r` is shifted by `εI` first.
pub fn frechet_distance(real: &FeatureStats, generated: &FeatureStats) -> Result<f64> {
    if real.dim() != generated.dim() {
        return Err(Error::Shape(format!("feature dimensions {} and {}", real.dim(), generated.dim())));
    }
    if real.sample_count < 2 || generated.sample_count < 2 {
        return Err(Error::Structural("each side needs at least 2 samples".into()));
    }
    for stats in [real, generated] {
        if stats.covariance.iter().chain(stats.mean.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance entries".into()));
        }
    }
    let root = regularised_sqrt(&real.covariance);
    let mut inner = &root * &generated.covariance * &root;
    inner = (&inner + inner.transpose()) * 0.5;
    let trace_sqrt: f64 = SymmetricEigen::new(inner).eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    let mean_term = (&real.mean - &generated.mean).norm_squared();
    let value = mean_term + real.covariance.trace() + generated.covariance.trace() - 2.0 * trace_sqrt;
    Ok(value.max(0.0))
}

/// Metrics of one comparison, optionally broken down by class.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    pub ssim: f64,
    pub psnr_db: f64,
    pub frechet: f64,
    pub per_class: Vec<(usize, MetricsReport)>,
}
