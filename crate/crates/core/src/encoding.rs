//! Images in, images out: amplitude encoding and sqrt-probability decoding.
//!
//! The register layout is `data_qubits` low qubits holding the pixel
//! amplitudes plus one ancilla at the highest index, initialised to `|0⟩`.

use num_complex::Complex64;

use crate::qsim::StateVector;
use crate::{Error, Result};

/// Single-channel pixel grid, row-major.
///
/// Pixels must be finite. Dataset images live in `[0, 1]`; intermediate
/// diffusion frames may be signed until they are clamped by
/// [`normalize_nonneg`].
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    norm_scale: f64,
}

impl ImageTensor {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::Shape(format!("{} pixels for a {width}x{height} image", pixels.len())));
        }
        if let Some(bad) = pixels.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite(format!("pixel value {bad}")));
        }
        Ok(Self { width, height, pixels, norm_scale: 1.0 })
    }

    /// Constant-valued image.
    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    /// L2 norm divided out by the last normalisation (1.0 if never normalised).
    pub fn norm_scale(&self) -> f64 {
        self.norm_scale
    }

    pub fn l2_norm(&self) -> f64 {
        self.pixels.iter().map(|p| p * p).sum::<f64>().sqrt()
    }

    pub fn same_shape(&self, other: &ImageTensor) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Same shape, new pixel values.
    pub fn with_pixels(&self, pixels: Vec<f64>) -> Result<Self> {
        Self::new(self.width, self.height, pixels)
    }
}

/// Data qubits needed for `pixel_count` amplitudes: `⌈log₂ N⌉`.
pub fn data_qubits_for(pixel_count: usize) -> usize {
    pixel_count.max(1).next_power_of_two().trailing_zeros() as usize
}

/// Data qubits plus the ancilla.
pub fn total_qubits_for(pixel_count: usize) -> usize {
    data_qubits_for(pixel_count) + 1
}

/// Clamps negatives to zero then divides by the L2 norm.
pub fn normalize_nonneg(image: &ImageTensor) -> Result<ImageTensor> {
    let clamped: Vec<f64> = image.pixels.iter().map(|&p| p.max(0.0)).collect();
    let norm = clamped.iter().map(|p| p * p).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Encoding("image is all zero after clamping".into()));
    }
    let mut out = image.with_pixels(clamped.into_iter().map(|p| p / norm).collect())?;
    out.norm_scale = norm;
    Ok(out)
}

/// Amplitude-encodes `image` into a register of `total_qubits` qubits.
///
/// Pixels are zero-padded to the data-register size and divided by their L2
/// norm; the ancilla stays in `|0⟩`. Returns the state together with the
/// divisor.
pub fn amplitude_encode(image: &ImageTensor, total_qubits: usize) -> Result<(StateVector, f64)> {
    if total_qubits == 0 {
        return Err(Error::Structural("register needs at least the ancilla".into()));
    }
    let data_dim = 1usize << (total_qubits - 1);
    if image.len() > data_dim {
        return Err(Error::Capacity { pixels: image.len(), amplitudes: data_dim });
    }
    if let Some(neg) = image.pixels.iter().find(|&&p| p < 0.0) {
        return Err(Error::Encoding(format!("negative pixel {neg} cannot be an amplitude")));
    }
    let norm = image.l2_norm();
    if norm == 0.0 {
        return Err(Error::Encoding("all-zero image has no direction".into()));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 2 * data_dim];
    for (amp, &p) in amplitudes.iter_mut().zip(&image.pixels) {
        *amp = Complex64::new(p / norm, 0.0);
    }
    Ok((StateVector::from_amplitudes(amplitudes)?, norm))
}

/// Probability of each data basis state with the ancilla traced out.
pub fn data_marginal(state: &StateVector) -> Vec<f64> {
    let amps = state.amplitudes();
    let half = amps.len() / 2;
    amps[..half].iter().zip(&amps[half..]).map(|(lo, hi)| lo.norm_sqr() + hi.norm_sqr()).collect()
}

/// Reads an image back out of a register: pixel `i` is the square root of
/// the ancilla-marginalised probability of data basis state `i`.
pub fn decode_state(state: &StateVector, width: usize, height: usize) -> Result<ImageTensor> {
    let pixels = width * height;
    let data_dim = state.amplitudes().len() / 2;
    if pixels > data_dim {
        return Err(Error::Capacity { pixels, amplitudes: data_dim });
    }
    let probs = data_marginal(state);
    ImageTensor::new(width, height, probs[..pixels].iter().map(|p| p.sqrt()).collect())
}

/// ITU-R BT.601 luma of 8-bit RGB pixels, scaled to `[0, 1]`.
pub fn grayscale_convert(rgb: &[[u8; 3]], width: usize, height: usize) -> Result<ImageTensor> {
    let pixels =
        rgb.iter().map(|&[r, g, b]| (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64) / 255.0).collect();
    ImageTensor::new(width, height, pixels)
}
