//! Synthetic on-disk datasets for command-level tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use eeqdm::datasets::{encode_idx_images, encode_idx_labels, CIFAR_RECORD};
use eeqdm::rng::RngStream;

/// Seven-segment masks, bits a..g = top, upper right, lower right, bottom,
/// lower left, upper left, middle.
const SEGMENTS: [u8; 10] = [0x3F, 0x06, 0x5B, 0x4F, 0x66, 0x6D, 0x7D, 0x07, 0x7F, 0x6F];

/// 28×28 seven-segment rendering of `digit` with random offset, stroke width
/// and brightness.
pub fn synthetic_digit(digit: u8, rng: &mut RngStream) -> Vec<u8> {
    let mut img = vec![0u8; 28 * 28];
    let (w, h) = (10 + rng.below(3), 16 + rng.below(3));
    let x0 = (28 - w) / 2 + rng.below(3) - 1;
    let y0 = (28 - h) / 2 + rng.below(3) - 1;
    let thick = 2 + rng.below(2);
    let level = 180 + rng.below(76) as u8;
    let mid = y0 + h / 2;
    let mut fill = |xa: usize, xb: usize, ya: usize, yb: usize| {
        for y in ya..yb.min(28) {
            for x in xa..xb.min(28) {
                img[y * 28 + x] = level;
            }
        }
    };
    let mask = SEGMENTS[digit as usize];
    let bars = [
        (x0, x0 + w, y0, y0 + thick),
        (x0 + w - thick, x0 + w, y0, mid),
        (x0 + w - thick, x0 + w, mid, y0 + h),
        (x0, x0 + w, y0 + h - thick, y0 + h),
        (x0, x0 + thick, mid, y0 + h),
        (x0, x0 + thick, y0, mid),
        (x0, x0 + w, mid - thick / 2, mid - thick / 2 + thick),
    ];
    for (bit, &(xa, xb, ya, yb)) in bars.iter().enumerate() {
        if mask & (1 << bit) != 0 {
            fill(xa, xb, ya, yb);
        }
    }
    img
}

/// `count` images with labels cycling through the ten digits.
pub fn synthetic_mnist(count: usize, seed: u64) -> (Vec<u8>, Vec<u8>) {
    let mut rng = RngStream::new(seed);
    let labels: Vec<u8> = (0..count).map(|i| (i % 10) as u8).collect();
    let images: Vec<Vec<u8>> = labels.iter().map(|&d| synthetic_digit(d, &mut rng)).collect();
    (encode_idx_images(28, 28, &images), encode_idx_labels(&labels))
}

/// Writes MNIST-named train and test files under `dir`.
pub fn write_mnist_dir(dir: &Path, train: usize, test: usize) {
    let (ti, tl) = synthetic_mnist(train, 1);
    std::fs::write(dir.join("train-images-idx3-ubyte"), ti).unwrap();
    std::fs::write(dir.join("train-labels-idx1-ubyte"), tl).unwrap();
    let (ei, el) = synthetic_mnist(test, 2);
    std::fs::write(dir.join("t10k-images-idx3-ubyte"), ei).unwrap();
    std::fs::write(dir.join("t10k-labels-idx1-ubyte"), el).unwrap();
}

/// Random CIFAR-10 records with cycling labels.
pub fn synthetic_cifar(records: usize, seed: u64) -> Vec<u8> {
    let mut rng = RngStream::new(seed);
    let mut out = Vec::with_capacity(records * CIFAR_RECORD);
    for i in 0..records {
        out.push((i % 10) as u8);
        out.extend((1..CIFAR_RECORD).map(|_| rng.next_u64() as u8));
    }
    out
}

/// Real MNIST directory when `EEQDM_MNIST_DIR` points at the four IDX files.
pub fn real_mnist_dir() -> Option<PathBuf> {
    let dir = PathBuf::from(std::env::var_os("EEQDM_MNIST_DIR")?);
    ["train-images-idx3-ubyte", "train-labels-idx1-ubyte"].iter().all(|f| dir.join(f).is_file()).then_some(dir)
}
