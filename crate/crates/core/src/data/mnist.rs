//! MNIST in IDX format: big-endian `u32` magic, dimension counts, then `u8` payload.

use std::path::Path;

use crate::data::{Label, LabeledSample, SampleInput};
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Debug, Clone, PartialEq)]
pub struct MnistSet {
    rows: usize,
    cols: usize,
    pixels: Vec<u8>,
    labels: Vec<u8>,
}

impl MnistSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels_per_image(&self) -> usize {
        self.rows * self.cols
    }

    pub fn image(&self, i: usize) -> &[u8] {
        let n = self.pixels_per_image();
        &self.pixels[i * n..(i + 1) * n]
    }

    /// Pixels divided by 255.
    pub fn normalized(&self, i: usize) -> Vec<f64> {
        self.image(i).iter().map(|&p| p as f64 / 255.0).collect()
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i] as usize
    }

    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.labels.truncate(n);
            self.pixels.truncate(n * self.pixels_per_image());
        }
    }

    pub fn samples(&self) -> Vec<LabeledSample> {
        (0..self.len())
            .map(|i| LabeledSample {
                input: SampleInput::Analog(self.normalized(i)),
                label: Label::Class(self.label(i)),
            })
            .collect()
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], offset: usize, what: &str) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse {
            what: what.to_string(),
            offset: bytes.len() as u64,
            reason: format!("header truncated, needed 4 bytes at offset {offset}"),
        })
}

/// Returns `(count, rows, cols, pixels)`.
pub fn parse_idx_images(bytes: &[u8], what: &str) -> Result<(usize, usize, usize, Vec<u8>)> {
    let magic = be_u32(bytes, 0, what)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Parse {
            what: what.to_string(),
            offset: 0,
            reason: format!("bad magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, what)? as usize;
    let rows = be_u32(bytes, 8, what)? as usize;
    let cols = be_u32(bytes, 12, what)? as usize;
    let need = count * rows * cols;
    let payload = &bytes[16..];
    if payload.len() < need {
        return Err(Error::Parse {
            what: what.to_string(),
            offset: bytes.len() as u64,
            reason: format!("payload truncated: expected {} bytes in total", 16 + need),
        });
    }
    Ok((count, rows, cols, payload[..need].to_vec()))
}

pub fn parse_idx_labels(bytes: &[u8], what: &str) -> Result<Vec<u8>> {
    let magic = be_u32(bytes, 0, what)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Parse {
            what: what.to_string(),
            offset: 0,
            reason: format!("bad magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let count = be_u32(bytes, 4, what)? as usize;
    let payload = &bytes[8..];
    if payload.len() < count {
        return Err(Error::Parse {
            what: what.to_string(),
            offset: bytes.len() as u64,
            reason: format!("payload truncated: expected {} bytes in total", 8 + count),
        });
    }
    Ok(payload[..count].to_vec())
}

pub fn load_mnist_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<MnistSet> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    let (count, rows, cols, pixels) = parse_idx_images(&read(images)?, &images.display().to_string())?;
    let labels_bytes = parse_idx_labels(&read(labels)?, &labels.display().to_string())?;
    if labels_bytes.len() != count {
        return Err(Error::Parse {
            what: labels.display().to_string(),
            offset: 4,
            reason: format!("{} labels for {count} images", labels_bytes.len()),
        });
    }
    Ok(MnistSet {
        rows,
        cols,
        pixels,
        labels: labels_bytes,
    })
}
