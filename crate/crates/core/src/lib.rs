//! Quantum denoising diffusion on a classical statevector simulator.
//!
//! The crate is organised bottom-up:
//!
//! - [`qsim`]: statevector, gate set and the dense-matrix test oracle.
//! - [`encoding`]: amplitude encoding of images and sqrt-probability decoding.
//! - [`circuit`]: the entangled half-register layout (EEQDM) and the
//!   full-register baseline (QDDM) as gate programs.
//! - [`grad`] and [`adam`]: adjoint gradients of the pixel MSE and the optimizer.
//! - [`diffusion`]: noise schedule, training pairs and reverse sampling.
//! - [`train`]: the mini-batch epoch loop tying the above together.
//! - [`datasets`]: MNIST IDX and CIFAR-10 binary parsers plus resizing.
//! - [`metrics`]: MSE, global SSIM, PSNR and the Fréchet distance.

pub mod adam;
pub mod circuit;
pub mod datasets;
pub mod diffusion;
pub mod encoding;
mod error;
pub mod grad;
pub mod metrics;
pub mod qsim;
pub mod rng;
pub mod train;

pub use error::{Error, Result};
