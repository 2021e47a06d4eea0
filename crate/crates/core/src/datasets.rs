//! MNIST (IDX) and CIFAR-10 (binary batch) readers and resizing.
//!
//! IDX files are big-endian: a 4-byte magic (`0x00000803` for images,
//! `0x00000801` for labels), one `u32` per dimension, then the unsigned-byte
//! payload. CIFAR-10 batches are a flat run of 3073-byte records: one label
//! byte followed by 1024 red, 1024 green and 1024 blue bytes, each plane
//! row-major over 32×32.
//!
//! MNIST digits are 28×28 and get zero-padded to 32×32 so every supported
//! resolution divides evenly; CIFAR images are converted to luma.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::encoding::{grayscale_convert, ImageTensor};
use crate::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const CIFAR_SIDE: usize = 32;
pub const CIFAR_PLANE: usize = CIFAR_SIDE * CIFAR_SIDE;
pub const CIFAR_RECORD: usize = 1 + 3 * CIFAR_PLANE;

/// Side length after padding MNIST digits.
pub const PADDED_SIDE: usize = 32;

pub const NUM_CLASSES: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    Mnist,
    Cifar10,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Mnist => "mnist",
            Source::Cifar10 => "cifar10",
        })
    }
}

impl FromStr for Source {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mnist" => Ok(Source::Mnist),
            "cifar10" | "cifar-10" | "cifar" => Ok(Source::Cifar10),
            other => Err(Error::Config(format!("unknown dataset '{other}'"))),
        }
    }
}

/// Square working resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Resolution {
    R8,
    R16,
    R32,
}

impl Resolution {
    pub fn side(self) -> usize {
        match self {
            Resolution::R8 => 8,
            Resolution::R16 => 16,
            Resolution::R32 => 32,
        }
    }

    pub fn pixels(self) -> usize {
        self.side() * self.side()
    }

    pub fn from_side(side: usize) -> Result<Self> {
        match side {
            8 => Ok(Resolution::R8),
            16 => Ok(Resolution::R16),
            32 => Ok(Resolution::R32),
            other => Err(Error::Config(format!("resolution {other} not in {{8, 16, 32}}"))),
        }
    }
}

/// Labelled images at one resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSlice {
    pub images: Vec<ImageTensor>,
    pub labels: Vec<u8>,
    pub source: Source,
    pub resolution: Resolution,
}

impl DatasetSlice {
    pub fn new(images: Vec<ImageTensor>, labels: Vec<u8>, source: Source, resolution: Resolution) -> Result<Self> {
        if images.len() != labels.len() {
            return Err(Error::Structural(format!("{} images but {} labels", images.len(), labels.len())));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= NUM_CLASSES) {
            return Err(Error::Format(format!("label {l} outside 0..{NUM_CLASSES}")));
        }
        Ok(Self { images, labels, source, resolution })
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// First `n` records (or all of them).
    pub fn truncated(mut self, n: usize) -> Self {
        self.images.truncate(n);
        self.labels.truncate(n);
        self
    }
}

/// Parsed IDX content.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdxData {
    Images { count: usize, rows: usize, cols: usize, pixels: Vec<u8> },
    Labels { count: usize, labels: Vec<u8> },
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or(Error::Length { expected: offset + 4, found: bytes.len() })
}

/// Parses an IDX image or label file held in memory.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxData> {
    let magic = read_u32_be(bytes, 0)?;
    let dims: usize = match magic {
        IDX_IMAGES_MAGIC => 3,
        IDX_LABELS_MAGIC => 1,
        other => return Err(Error::Format(format!("bad IDX magic {other:#010x}"))),
    };
    let header = 4 + 4 * dims;
    let sizes = (0..dims).map(|d| read_u32_be(bytes, 4 + 4 * d).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let payload = sizes
        .iter()
        .try_fold(1usize, |acc, &s| acc.checked_mul(s))
        .ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    let expected = payload.checked_add(header).ok_or_else(|| Error::Format("IDX dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Length { expected, found: bytes.len() });
    }
    let body = bytes[header..].to_vec();
    Ok(match dims {
        3 => IdxData::Images { count: sizes[0], rows: sizes[1], cols: sizes[2], pixels: body },
        _ => IdxData::Labels { count: sizes[0], labels: body },
    })
}

/// One CIFAR-10 record: label plus planar RGB bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CifarRecord {
    pub label: u8,
    pub pixels: Vec<u8>,
}

impl CifarRecord {
    /// Interleaved `(r, g, b)` triples in row-major order.
    pub fn rgb(&self) -> Vec<[u8; 3]> {
        let (r, rest) = self.pixels.split_at(CIFAR_PLANE);
        let (g, b) = rest.split_at(CIFAR_PLANE);
        r.iter().zip(g).zip(b).map(|((&r, &g), &b)| [r, g, b]).collect()
    }

    pub fn to_grayscale(&self) -> Result<ImageTensor> {
        grayscale_convert(&self.rgb(), CIFAR_SIDE, CIFAR_SIDE)
    }
}

/// Parses a CIFAR-10 binary batch held in memory.
pub fn parse_cifar10_batch(bytes: &[u8]) -> Result<Vec<CifarRecord>> {
    if !bytes.len().is_multiple_of(CIFAR_RECORD) {
        return Err(Error::Format(format!(
            "{} bytes is not a whole number of {CIFAR_RECORD}-byte records",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(CIFAR_RECORD)
        .enumerate()
        .map(|(i, rec)| {
            let label = rec[0];
            if label >= NUM_CLASSES {
                return Err(Error::Format(format!("record {i} has label {label}")));
            }
            Ok(CifarRecord { label, pixels: rec[1..].to_vec() })
        })
        .collect()
}

/// Zero-pads `image` to `width`×`height`, centred.
pub fn pad_center(image: &ImageTensor, width: usize, height: usize) -> Result<ImageTensor> {
    if width < image.width() || height < image.height() {
        return Err(Error::Config(format!("cannot pad {}x{} down to {width}x{height}", image.width(), image.height())));
    }
    let (left, top) = ((width - image.width()) / 2, (height - image.height()) / 2);
    let mut out = vec![0.0; width * height];
    for (y, row) in image.pixels().chunks(image.width()).enumerate() {
        let start = (top + y) * width + left;
        out[start..start + row.len()].copy_from_slice(row);
    }
    ImageTensor::new(width, height, out)
}

/// Area-average downsampling to `target`×`target`.
pub fn downsample(image: &ImageTensor, target: Resolution) -> Result<ImageTensor> {
    let side = target.side();
    let (w, h) = (image.width(), image.height());
    if w < side || h < side || w % side != 0 || h % side != 0 {
        return Err(Error::Config(format!("{w}x{h} does not divide into {side}x{side} blocks")));
    }
    let (fx, fy) = (w / side, h / side);
    let area = (fx * fy) as f64;
    let src = image.pixels();
    let mut out = Vec::with_capacity(side * side);
    for by in 0..side {
        for bx in 0..side {
            let mut sum = 0.0;
            for y in by * fy..(by + 1) * fy {
                sum += src[y * w + bx * fx..y * w + (bx + 1) * fx].iter().sum::<f64>();
            }
            out.push(sum / area);
        }
    }
    ImageTensor::new(side, side, out)
}

/// Records whose label equals `digit`, in order.
pub fn class_filter(slice: &DatasetSlice, digit: u8) -> Result<DatasetSlice> {
    if digit >= NUM_CLASSES {
        return Err(Error::Config(format!("class {digit} outside 0..{NUM_CLASSES}")));
    }
    let (images, labels) =
        slice.images.iter().zip(&slice.labels).filter(|(_, &l)| l == digit).map(|(im, &l)| (im.clone(), l)).unzip();
    Ok(DatasetSlice { images, labels, source: slice.source, resolution: slice.resolution })
}

/// Builds a slice from in-memory IDX image and label files.
pub fn mnist_from_idx(images: &[u8], labels: &[u8], resolution: Resolution) -> Result<DatasetSlice> {
    let (count, rows, cols, pixels) = match parse_idx(images)? {
        IdxData::Images { count, rows, cols, pixels } => (count, rows, cols, pixels),
        IdxData::Labels { .. } => return Err(Error::Format("expected an IDX image file".into())),
    };
    let label_bytes = match parse_idx(labels)? {
        IdxData::Labels { labels, .. } => labels,
        IdxData::Images { .. } => return Err(Error::Format("expected an IDX label file".into())),
    };
    if label_bytes.len() != count {
        return Err(Error::Structural(format!("{count} images but {} labels", label_bytes.len())));
    }
    if rows == 0 || cols == 0 {
        return Err(Error::Format(format!("degenerate image size {rows}x{cols}")));
    }
    let images = pixels
        .chunks_exact(rows * cols)
        .map(|raw| {
            let img = ImageTensor::new(cols, rows, raw.iter().map(|&b| b as f64 / 255.0).collect())?;
            let padded = if cols < PADDED_SIDE || rows < PADDED_SIDE {
                pad_center(&img, PADDED_SIDE.max(cols), PADDED_SIDE.max(rows))?
            } else {
                img
            };
            downsample(&padded, resolution)
        })
        .collect::<Result<Vec<_>>>()?;
    DatasetSlice::new(images, label_bytes, Source::Mnist, resolution)
}

/// Builds a grayscale slice from in-memory CIFAR-10 batches.
pub fn cifar10_from_batches(batches: &[Vec<u8>], resolution: Resolution) -> Result<DatasetSlice> {
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for batch in batches {
        for rec in parse_cifar10_batch(batch)? {
            images.push(downsample(&rec.to_grayscale()?, resolution)?);
            labels.push(rec.label);
        }
    }
    DatasetSlice::new(images, labels, Source::Cifar10, resolution)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn load_mnist(images: &Path, labels: &Path, resolution: Resolution) -> Result<DatasetSlice> {
    mnist_from_idx(&read(images)?, &read(labels)?, resolution)
}

pub fn load_cifar10(batches: &[&Path], resolution: Resolution) -> Result<DatasetSlice> {
    let bytes = batches.iter().map(|p| read(p)).collect::<Result<Vec<_>>>()?;
    cifar10_from_batches(&bytes, resolution)
}

/// Serialises images as an IDX image file (used for fixtures and exports).
pub fn encode_idx_images(rows: usize, cols: usize, images: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.extend_from_slice(&IDX_IMAGES_MAGIC.to_be_bytes());
    for d in [images.len(), rows, cols] {
        out.extend_from_slice(&(d as u32).to_be_bytes());
    }
    for img in images {
        out.extend_from_slice(img);
    }
    out
}

/// Serialises labels as an IDX label file.
pub fn encode_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&IDX_LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}
