//! IDX image/label files (the MNIST distribution format), optionally gzipped.

use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;

use crate::dataset::{class_names_from, ClassId, LabeledDataset};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn open(path: &Path) -> Result<Box<dyn Read>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    if path.extension().is_some_and(|e| e == "gz") {
        Ok(Box::new(GzDecoder::new(reader)))
    } else {
        Ok(Box::new(reader))
    }
}

fn read_u32(r: &mut dyn Read, path: &Path) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(u32::from_be_bytes(buf))
}

fn read_body(r: &mut dyn Read, len: usize, path: &Path) -> Result<Vec<u8>> {
    let mut data = vec![0u8; len];
    r.read_exact(&mut data).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(data)
}

/// Reads an idx3 file; returns `(count, rows, cols, pixels)`.
pub fn read_images(path: impl AsRef<Path>) -> Result<(usize, usize, usize, Vec<u8>)> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let magic = read_u32(&mut *r, path)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("bad image magic {magic:#010x}"),
        });
    }
    let n = read_u32(&mut *r, path)? as usize;
    let rows = read_u32(&mut *r, path)? as usize;
    let cols = read_u32(&mut *r, path)? as usize;
    let pixels = read_body(&mut *r, n * rows * cols, path)?;
    Ok((n, rows, cols, pixels))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    let mut r = open(path)?;
    let magic = read_u32(&mut *r, path)?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("bad label magic {magic:#010x}"),
        });
    }
    let n = read_u32(&mut *r, path)? as usize;
    read_body(&mut *r, n, path)
}

/// Loads an image/label pair as a dataset of flattened images scaled to
/// `[0, 1]`. Classes are the digits `0..=9`, named by their digit.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<LabeledDataset> {
    let (n, rows, cols, pixels) = read_images(&images)?;
    let raw_labels = read_labels(&labels)?;
    if raw_labels.len() != n {
        return Err(Error::Format {
            path: labels.as_ref().to_path_buf(),
            message: format!("{} labels for {n} images", raw_labels.len()),
        });
    }
    let max_label = raw_labels.iter().copied().max().unwrap_or(0) as usize;
    let class_count = max_label.max(9) + 1;
    let dim = rows * cols;
    let data: Vec<Vec<f64>> = pixels
        .chunks(dim.max(1))
        .take(n)
        .map(|img| img.iter().map(|&p| p as f64 / 255.0).collect())
        .collect();
    let labels = raw_labels.iter().map(|&l| ClassId(l as usize)).collect();
    LabeledDataset::from_rows(
        data,
        labels,
        class_names_from((0..class_count).map(|d| d.to_string())),
    )
}
