//! Format-sniffing image reader and extension-driven writer.

use std::path::Path;

use super::{pgm, png};
use crate::error::{Error, Result};
use crate::grid::{Grid, ImageGrid};

/// Reads an 8-bit grayscale PGM or PNG of any size.
pub fn read_grid(path: &Path) -> Result<Grid> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(png::MAGIC) {
        png::decode(path, &bytes)
    } else if bytes.starts_with(pgm::MAGIC) {
        pgm::decode(path, &bytes)
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            offset: 0,
            reason: "neither a binary PGM nor a PNG file".into(),
        })
    }
}

/// Reads a square power-of-two image.
pub fn read_image(path: &Path) -> Result<ImageGrid> {
    ImageGrid::new(read_grid(path)?)
}

/// Samples rounded and clamped to `0..=255`.
pub fn to_u8_clamped(g: &Grid) -> Vec<u8> {
    g.as_slice()
        .iter()
        .map(|&v| v.round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Samples stretched linearly so the grid's range spans `0..=255`.
pub fn to_u8_stretched(g: &Grid) -> Vec<u8> {
    let lo = g.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = g
        .as_slice()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return vec![128; g.len()];
    }
    g.as_slice()
        .iter()
        .map(|&v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

/// Writes 8-bit samples as PNG when the extension is `png`, PGM otherwise.
pub fn write_samples(path: &Path, samples: &[u8], width: usize, height: usize) -> Result<()> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png {
        png::encode(path, samples, width, height)?
    } else {
        pgm::encode(samples, width, height)
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes intensities, rounded and clamped to 8 bits.
pub fn write_image(path: &Path, g: &Grid) -> Result<()> {
    write_samples(path, &to_u8_clamped(g), g.cols(), g.rows())
}
