//! Image fidelity measures on the 8-bit intensity scale.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Mean squared error and PSNR against a 255 peak.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageMetrics {
    /// `+inf` when `mse` is zero.
    pub psnr_db: f64,
    pub mse: f64,
}

impl ImageMetrics {
    pub fn from_mse(mse: f64) -> Self {
        let psnr_db = if mse == 0.0 {
            f64::INFINITY
        } else {
            10.0 * (255.0 * 255.0 / mse).log10()
        };
        Self { psnr_db, mse }
    }
}

pub fn image_metrics(reference: &Grid, test: &Grid) -> Result<ImageMetrics> {
    image_metrics_masked(reference, test, None)
}

/// Metrics over the locations flagged in `mask`.
pub fn image_metrics_masked(
    reference: &Grid,
    test: &Grid,
    mask: Option<&[bool]>,
) -> Result<ImageMetrics> {
    if reference.rows() != test.rows() || reference.cols() != test.cols() {
        return Err(Error::Dimension(format!(
            "cannot compare {}x{} with {}x{}",
            reference.rows(),
            reference.cols(),
            test.rows(),
            test.cols()
        )));
    }
    if mask.is_some_and(|m| m.len() != reference.len()) {
        return Err(Error::Dimension("mask length does not match images".into()));
    }
    let mut sum = 0.0;
    let mut n = 0usize;
    for (idx, (a, b)) in reference.as_slice().iter().zip(test.as_slice()).enumerate() {
        if mask.is_some_and(|m| !m[idx]) {
            continue;
        }
        sum += (a - b) * (a - b);
        n += 1;
    }
    if n == 0 {
        return Err(Error::degenerate("metrics", "no pixels to compare"));
    }
    Ok(ImageMetrics::from_mse(sum / n as f64))
}
