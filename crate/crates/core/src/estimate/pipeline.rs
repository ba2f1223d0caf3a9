use std::time::{Duration, Instant};

use log::debug;

use super::rotation::{inscribed_disc, refine_window};
use super::{
    estimate_scale, estimate_translation_bnb, refine_rotation, rescale_to_levels,
    rotate_coeff_planes_with_support, rotation_candidates, wavelet_slope_histogram, BnbConfig,
    BnbState, ScaleEstimate, SensedPlanes, SimilarityParams, SlopeWeighting, TranslationEstimate,
};
use crate::error::{Error, Result};
use crate::grid::{Grid, ImageGrid};
use crate::haar::{compute_difference_field, forward_haar, DetailLevel, HaarPyramid};
use crate::inband::InBandShifter;
use crate::threshold::{
    fraction_count, hard_threshold, keep_largest, Band, SparseMask, ThresholdMode,
};

/// Settings for [`register_similarity`].
#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationConfig {
    /// Correlation acceptance level, at most 2.
    pub tau: f64,
    /// Reduction level for the translation search; `None` picks it from the scale.
    pub k: Option<u32>,
    pub h_max: u32,
    /// Slope histogram bins over 180 degrees.
    pub bins: usize,
    pub weighting: SlopeWeighting,
    /// Denoising threshold for the scale and rotation stages; `None` keeps
    /// every coefficient.
    pub threshold: Option<ThresholdMode>,
    /// Keep only this fraction of largest detail coefficients of each image.
    /// Replaces `threshold` when set. Translation then correlates over the
    /// retained sensed coefficients only, against the full reference.
    pub sparsity: Option<f64>,
    pub estimate_scale: bool,
    pub estimate_rotation: bool,
    pub refine_half_range: f64,
    pub refine_step: f64,
    /// Histogram correlation peaks refined before keeping the best fit.
    pub rotation_candidates: usize,
    /// Rotation is estimated this many levels above the finest common level.
    pub rotation_level_offset: u32,
    /// Cells dropped along each border of the correlation planes.
    pub border_margin: usize,
    pub max_iterations: usize,
    pub epsilon: Option<f64>,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            tau: 1.9,
            k: None,
            h_max: 6,
            bins: 180,
            weighting: SlopeWeighting::Count,
            threshold: Some(ThresholdMode::Universal),
            sparsity: None,
            estimate_scale: true,
            estimate_rotation: true,
            refine_half_range: 5.0,
            refine_step: 0.1,
            rotation_candidates: 24,
            rotation_level_offset: 0,
            border_margin: 1,
            max_iterations: 64,
            epsilon: None,
        }
    }
}

impl RegistrationConfig {
    /// Translation only: no scale or rotation stage.
    pub fn translation_only() -> Self {
        Self {
            estimate_scale: false,
            estimate_rotation: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistrationReport {
    pub params: SimilarityParams,
    /// Present when scale was estimated.
    pub scale: Option<ScaleEstimate>,
    /// Histogram lag whose refinement was kept.
    pub initial_theta: Option<f64>,
    /// Reduction level used for translation, counted from the reference's finest level.
    pub k: u32,
    pub correlation_level: u32,
    pub translation: TranslationEstimate,
    pub elapsed: Duration,
}

impl RegistrationReport {
    pub fn ncc(&self) -> f64 {
        self.translation.score
    }

    pub fn converged(&self) -> bool {
        self.translation.converged
    }

    pub fn iterations(&self) -> usize {
        self.translation.iterations
    }

    pub fn trace(&self) -> &[BnbState] {
        &self.translation.trace
    }
}

/// `1` when `sigma < 1`, otherwise `sigma + 1`.
pub fn auto_reduction_level(sigma: f64) -> u32 {
    if sigma < 1.0 {
        1
    } else {
        (sigma.round() as u32).saturating_add(1)
    }
}

fn prepare(pyr: &HaarPyramid, cfg: &RegistrationConfig) -> Result<(HaarPyramid, SparseMask)> {
    if let Some(p) = cfg.sparsity {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::Contract(format!(
                "sparsity fraction {p} outside (0, 1]"
            )));
        }
        return Ok(keep_largest(pyr, fraction_count(p, pyr.detail_count())));
    }
    match cfg.threshold {
        Some(mode) => hard_threshold(pyr, mode),
        None => Ok((pyr.clone(), SparseMask::full(pyr.levels()))),
    }
}

fn margin_mask(side: usize, margin: usize) -> Option<Vec<bool>> {
    if margin == 0 || side <= 2 * margin + 2 {
        return None;
    }
    Some(
        (0..side * side)
            .map(|idx| {
                let (i, j) = (idx / side, idx % side);
                i >= margin && j >= margin && i + margin < side && j + margin < side
            })
            .collect(),
    )
}

/// Locations of a rotated plane pair whose interpolation draws at least half
/// its weight from observed coefficients.
fn observed_after_rotation(ma: &[bool], mb: &[bool], side: usize, theta: f64) -> Result<Vec<bool>> {
    let seen = Grid::from_fn(side, side, |i, j| {
        let idx = i * side + j;
        f64::from(u8::from(ma[idx] || mb[idx]))
    });
    let (x, y, support) = rotate_coeff_planes_with_support(&seen, &Grid::zeros(side, side), theta)?;
    Ok(x.as_slice()
        .iter()
        .zip(y.as_slice())
        .zip(&support)
        .map(|((&u, &v), &s)| s && u.hypot(v) >= 0.5)
        .collect())
}

/// Locations inside `region` whose gradient magnitude reaches the smallest
/// coefficient magnitude kept by thresholding at this level.
///
/// Thresholding `a` and `b` separately would leave one channel zeroed at
/// many locations and pile slopes onto the axes; a magnitude cut does not
/// depend on orientation.
fn slope_locations(full: &DetailLevel, kept: &DetailLevel, region: &[bool]) -> Vec<bool> {
    let cutoff = kept
        .a
        .as_slice()
        .iter()
        .chain(kept.b.as_slice())
        .map(|v| v.abs())
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    full.a
        .as_slice()
        .iter()
        .zip(full.b.as_slice())
        .zip(region)
        .map(|((&a, &b), &r)| r && a.hypot(b) >= cutoff)
        .collect()
}

/// Full similarity registration of `sensed` against `reference`.
///
/// Stages: analysis of both images, scale from curvature radii of the
/// thresholded coefficients, rotation from slope histograms refined by a
/// residual search, then translation by branch and bound on in-band shifted
/// reference planes against de-rotated sensed planes.
pub fn register_similarity(
    reference: &ImageGrid,
    sensed: &ImageGrid,
    cfg: &RegistrationConfig,
) -> Result<RegistrationReport> {
    let start = Instant::now();
    let pyr_i = forward_haar(reference);
    let pyr_j = forward_haar(sensed);
    let (thr_i, mask_i) = prepare(&pyr_i, cfg)?;
    let (thr_j, mask_j) = prepare(&pyr_j, cfg)?;
    let n = thr_i.levels();
    // The reference is fully known to the translation stage. Under sparsity
    // only the retained sensed coefficients count as observed.
    let trans_i = &pyr_i;
    let (trans_j, observed) = if cfg.sparsity.is_some() {
        (&thr_j, Some(&mask_j))
    } else {
        (&pyr_j, None)
    };

    let scale = if cfg.estimate_scale {
        let s = estimate_scale(&thr_i, &mask_i, &thr_j, &mask_j)?;
        debug!("scale: raw {:.4}, snapped {}", s.raw, s.sigma);
        Some(s)
    } else {
        None
    };
    let exponent = match scale {
        Some(s) => s.exponent,
        None => thr_j.levels() as i32 - n as i32,
    };
    let sigma = 2f64.powi(exponent);
    let sen = rescale_to_levels(&thr_j, sigma, n)?;
    let sen_full = rescale_to_levels(trans_j, sigma, n)?;
    // Finest level at which the rescaled sensed pyramid still carries data.
    let common = n - (-exponent).max(0) as u32;
    if common < 2 {
        return Err(Error::degenerate(
            "scale",
            "images too small for the estimated scale",
        ));
    }

    let (theta, initial_theta) = if cfg.estimate_rotation {
        let level = (common - 1).saturating_sub(cfg.rotation_level_offset);
        let (fi, fj) = (trans_i.level(level), sen_full.level(level));
        let disc = inscribed_disc(fi.side());
        let sel_i = slope_locations(fi, thr_i.level(level), &disc);
        let sel_j = slope_locations(fj, sen.level(level), &disc);
        let h_i = wavelet_slope_histogram(&fi.a, &fi.b, &sel_i, cfg.bins, cfg.weighting)?;
        let h_j = wavelet_slope_histogram(&fj.a, &fj.b, &sel_j, cfg.bins, cfg.weighting)?;
        let candidates = rotation_candidates(&h_i, &h_j, cfg.rotation_candidates)?;
        let planes_i = (&fi.a, &fi.b);
        let planes_j = (&fj.a, &fj.b);
        let mut pick: Option<(f64, f64)> = None;
        for &theta0 in &candidates {
            let r = refine_window(
                planes_i,
                planes_j,
                theta0,
                cfg.refine_half_range,
                cfg.refine_step,
            )?;
            if pick.is_none_or(|(_, res)| r.residual < res) {
                pick = Some((theta0, r.residual));
            }
        }
        let (theta0, _) = pick.expect("at least one rotation candidate");
        let refined = refine_rotation(
            planes_i,
            planes_j,
            theta0,
            cfg.refine_half_range,
            cfg.refine_step,
        )?;
        debug!(
            "rotation: candidates {candidates:?}, initial {theta0}, refined {}",
            refined.theta
        );
        (refined.theta, Some(theta0))
    } else {
        (0.0, None)
    };

    let k_native = cfg.k.unwrap_or_else(|| auto_reduction_level(sigma));
    if k_native < 1 || k_native >= common {
        return Err(Error::Range(format!(
            "reduction level {k_native} leaves no correlation level (finest common level {common})"
        )));
    }
    let level = common - k_native;
    let k = n - level;

    let planes = sen_full.level(level);
    let side = planes.side();
    let mut sensed_planes = if theta != 0.0 {
        let (a, b, support) = rotate_coeff_planes_with_support(&planes.a, &planes.b, -theta)?;
        let mut sp = SensedPlanes::new(level, a, b);
        sp.restrict(&support);
        sp
    } else {
        SensedPlanes::new(level, planes.a.clone(), planes.b.clone())
    };
    if let Some(observed) = observed {
        let (ma, mb) = (
            observed.plane(level, Band::A),
            observed.plane(level, Band::B),
        );
        if theta != 0.0 {
            let seen = observed_after_rotation(ma, mb, side, -theta)?;
            sensed_planes.restrict(&seen);
        } else {
            sensed_planes.restrict_bands(ma, mb);
        }
    }
    if let Some(border) = margin_mask(side, cfg.border_margin) {
        sensed_planes.restrict(&border);
    }

    let d_ref = compute_difference_field(trans_i, n)?;
    let shifter = InBandShifter::new(&d_ref);
    let bnb = BnbConfig {
        tau: cfg.tau,
        k,
        h_max: cfg.h_max,
        epsilon: cfg.epsilon,
        max_iterations: cfg.max_iterations,
    };
    let translation = estimate_translation_bnb(&shifter, &sensed_planes, &bnb)?;
    debug!(
        "translation: ({}, {}) score {:.6} after {} iterations ({:?})",
        translation.tx,
        translation.ty,
        translation.score,
        translation.iterations,
        translation.termination
    );

    Ok(RegistrationReport {
        params: SimilarityParams::new(sigma, theta, translation.tx, translation.ty),
        scale,
        initial_theta,
        k,
        correlation_level: level,
        translation,
        elapsed: start.elapsed(),
    })
}
