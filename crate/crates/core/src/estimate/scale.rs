use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::haar::{DetailLevel, HaarPyramid};
use crate::threshold::{Band, SparseMask};

/// Mean level-set radius of curvature over retained interior locations.
///
/// Curvature is `|fxx fy^2 - 2 fx fy fxy + fyy fx^2| / (fx^2 + fy^2)^(3/2)`
/// with central differences. Locations with `kappa <= kappa_min` (flat level
/// sets) are skipped; `None` uses `1 / side`.
pub fn mean_curvature_radius(plane: &Grid, mask: &[bool], kappa_min: Option<f64>) -> Result<f64> {
    if mask.len() != plane.len() {
        return Err(Error::Dimension("mask length does not match plane".into()));
    }
    let (rows, cols) = (plane.rows(), plane.cols());
    let kappa_min = kappa_min.unwrap_or(1.0 / rows.max(cols) as f64);
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 1..rows.saturating_sub(1) {
        for j in 1..cols.saturating_sub(1) {
            if !mask[i * cols + j] {
                continue;
            }
            let f = |di: isize, dj: isize| {
                plane[((i as isize + di) as usize, (j as isize + dj) as usize)]
            };
            let fx = (f(0, 1) - f(0, -1)) / 2.0;
            let fy = (f(1, 0) - f(-1, 0)) / 2.0;
            let fxx = f(0, 1) - 2.0 * f(0, 0) + f(0, -1);
            let fyy = f(1, 0) - 2.0 * f(0, 0) + f(-1, 0);
            let fxy = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / 4.0;
            let g2 = fx * fx + fy * fy;
            if g2 <= f64::MIN_POSITIVE {
                continue;
            }
            let kappa = (fxx * fy * fy - 2.0 * fx * fy * fxy + fyy * fx * fx).abs() / g2.powf(1.5);
            if kappa > kappa_min && kappa.is_finite() {
                sum += 1.0 / kappa;
                count += 1;
            }
        }
    }
    if count == 0 {
        return Err(Error::degenerate(
            "scale",
            "no retained location with curved level sets",
        ));
    }
    Ok(sum / count as f64)
}

/// Raw and power-of-two snapped scale estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleEstimate {
    pub raw: f64,
    /// `p` with `sigma = 2^p`.
    pub exponent: i32,
    pub sigma: f64,
}

/// Ratio of mean curvature radii of the finest horizontal and vertical
/// planes, sensed over reference, averaged and snapped to a power of two.
///
/// Magnifying an image by `sigma` magnifies its level sets, so the ratio is
/// `sigma` in the `sensed = sigma * reference` convention.
pub fn estimate_scale(
    pyr_i: &HaarPyramid,
    mask_i: &SparseMask,
    pyr_j: &HaarPyramid,
    mask_j: &SparseMask,
) -> Result<ScaleEstimate> {
    if mask_i.levels() != pyr_i.levels() || mask_j.levels() != pyr_j.levels() {
        return Err(Error::Dimension("mask does not match its pyramid".into()));
    }
    let (fi, fj) = (pyr_i.levels() - 1, pyr_j.levels() - 1);
    let radius = |pyr: &HaarPyramid, mask: &SparseMask, l: u32, band: Band| {
        let level = pyr.level(l);
        let plane = if band == Band::A { &level.a } else { &level.b };
        mean_curvature_radius(plane, mask.plane(l, band), None)
    };
    let ra = radius(pyr_j, mask_j, fj, Band::A)? / radius(pyr_i, mask_i, fi, Band::A)?;
    let rb = radius(pyr_j, mask_j, fj, Band::B)? / radius(pyr_i, mask_i, fi, Band::B)?;
    let raw = 0.5 * (ra + rb);
    if !raw.is_finite() || raw <= 0.0 {
        return Err(Error::degenerate(
            "scale",
            format!("radius ratio {raw} is not usable"),
        ));
    }
    let exponent = raw.log2().round() as i32;
    Ok(ScaleEstimate {
        raw,
        exponent,
        sigma: 2f64.powi(exponent),
    })
}

fn power_of_two_exponent(sigma: f64) -> Result<i32> {
    let p = sigma.log2();
    if !sigma.is_finite() || sigma <= 0.0 || (p - p.round()).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "scale {sigma} is not a power of two"
        )));
    }
    Ok(p.round() as i32)
}

/// Brings a sensed pyramid at scale `sigma = 2^p` to reference resolution.
///
/// `p > 0` drops the `p` finest levels (the same as block-averaging the
/// image `p` times); `p < 0` appends `-p` zero finest levels (block
/// replication). Coarser levels and the global approximation are kept.
pub fn rescale_coeffs(pyr: &HaarPyramid, sigma: f64) -> Result<HaarPyramid> {
    let p = power_of_two_exponent(sigma)?;
    let (approx, mut details) = pyr.clone().into_parts();
    if p > 0 {
        let keep = details.len() as i64 - p as i64;
        if keep < 1 {
            return Err(Error::Dimension(format!(
                "cannot reduce a {}-level pyramid by scale {sigma}",
                details.len()
            )));
        }
        details.truncate(keep as usize);
    } else {
        for _ in 0..(-p) {
            let side = 1usize << details.len();
            details.push(DetailLevel::zeros(side));
        }
    }
    HaarPyramid::from_parts(approx, details)
}

/// [`rescale_coeffs`] followed by a check that the result has `levels` levels.
pub fn rescale_to_levels(pyr: &HaarPyramid, sigma: f64, levels: u32) -> Result<HaarPyramid> {
    let out = rescale_coeffs(pyr, sigma)?;
    if out.levels() != levels {
        return Err(Error::degenerate(
            "scale",
            format!(
                "sensed pyramid has {} levels at scale {sigma}, reference has {levels}",
                out.levels()
            ),
        ));
    }
    Ok(out)
}
