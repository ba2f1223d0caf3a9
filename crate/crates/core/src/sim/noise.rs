//! Additive white Gaussian noise at a requested signal-to-noise ratio.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::grid::{Grid, ImageGrid};

/// Mean of squared mean-removed intensities.
pub fn signal_power(g: &Grid) -> f64 {
    let mean = g.mean();
    g.as_slice()
        .iter()
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / g.len() as f64
}

/// Noise standard deviation that yields `snr_db` for `img`.
pub fn noise_sd_for_snr(img: &Grid, snr_db: f64) -> f64 {
    (signal_power(img) / 10f64.powf(snr_db / 10.0)).sqrt()
}

/// Adds zero-mean Gaussian noise with variance `P / 10^(snr_db / 10)`.
///
/// An infinite `snr_db` returns the image unchanged. Values are not clamped.
pub fn add_gaussian_noise(img: &ImageGrid, snr_db: f64, seed: u64) -> Result<ImageGrid> {
    if snr_db == f64::INFINITY {
        return Ok(img.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::Range(format!("snr {snr_db} dB is not usable")));
    }
    let power = signal_power(img.grid());
    if power == 0.0 {
        return Err(Error::degenerate(
            "noise",
            "constant image has no signal power",
        ));
    }
    add_noise_sd(img, (power / 10f64.powf(snr_db / 10.0)).sqrt(), seed)
}

/// Adds zero-mean Gaussian noise of standard deviation `sd`.
pub fn add_noise_sd(img: &ImageGrid, sd: f64, seed: u64) -> Result<ImageGrid> {
    let normal = Normal::new(0.0, sd).map_err(|e| Error::Range(format!("noise sd {sd}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = img
        .grid()
        .as_slice()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    ImageGrid::new(Grid::from_vec(img.side(), img.side(), data)?)
}

/// Noise standard deviation estimated from the finest diagonal Haar
/// coefficients, `2 * median(|c|) / 0.6745`; the factor 2 undoes the
/// averaging normalization of `c`.
pub fn estimate_noise_sd(img: &ImageGrid) -> f64 {
    let g = img.grid();
    let side = img.side() / 2;
    let mut mags = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let (p00, p01) = (g[(2 * i, 2 * j)], g[(2 * i, 2 * j + 1)]);
            let (p10, p11) = (g[(2 * i + 1, 2 * j)], g[(2 * i + 1, 2 * j + 1)]);
            mags.push(((p00 - p01 - p10 + p11) / 4.0).abs());
        }
    }
    mags.sort_by(f64::total_cmp);
    let mid = mags.len() / 2;
    let median = if mags.len() % 2 == 1 {
        mags[mid]
    } else {
        0.5 * (mags[mid - 1] + mags[mid])
    };
    2.0 * median / 0.6745
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img() -> ImageGrid {
        ImageGrid::from_fn(128, |i, j| {
            ((i as f64) * 0.2).sin() * 50.0 + (j as f64) * 0.5
        })
        .unwrap()
    }

    #[test]
    fn infinite_snr_is_identity() {
        assert_eq!(add_gaussian_noise(&img(), f64::INFINITY, 1).unwrap(), img());
    }

    #[test]
    fn realized_snr_is_close() {
        let clean = img();
        for snr in [10.0, 20.0, 30.0, 40.0] {
            let noisy = add_gaussian_noise(&clean, snr, 42).unwrap();
            let noise = Grid::from_fn(128, 128, |i, j| noisy[(i, j)] - clean[(i, j)]);
            let p_noise = noise.as_slice().iter().map(|v| v * v).sum::<f64>() / noise.len() as f64;
            let realized = 10.0 * (signal_power(clean.grid()) / p_noise).log10();
            assert!((realized - snr).abs() < 0.1, "{snr} -> {realized}");
        }
    }

    #[test]
    fn deterministic_and_rejects_constant() {
        assert_eq!(
            add_gaussian_noise(&img(), 20.0, 9).unwrap(),
            add_gaussian_noise(&img(), 20.0, 9).unwrap()
        );
        let flat = ImageGrid::from_fn(8, |_, _| 3.0).unwrap();
        assert!(matches!(
            add_gaussian_noise(&flat, 20.0, 1),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn noise_level_estimate() {
        let flat = ImageGrid::from_fn(256, |_, _| 100.0).unwrap();
        let noisy = add_noise_sd(&flat, 5.0, 3).unwrap();
        let est = estimate_noise_sd(&noisy);
        assert!((est - 5.0).abs() < 0.3, "{est}");
    }
}
