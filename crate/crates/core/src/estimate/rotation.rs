use crate::error::{Error, Result};
use crate::grid::Grid;

/// Histogram of coefficient slopes `atan(b / a)` over a 180 degree period.
///
/// Bin `i` is centred at `-90 + (i + 1) * 180 / n`, so the centres run from
/// just above -90 up to and including 90.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeHistogram {
    counts: Vec<f64>,
}

/// How each retained coefficient contributes to its slope bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeWeighting {
    #[default]
    Count,
    /// Weight by `sqrt(a^2 + b^2)`.
    Magnitude,
}

impl SlopeHistogram {
    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::Range(format!(
                "need at least 2 bins, got {}",
                counts.len()
            )));
        }
        if counts.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(Error::Contract(
                "histogram counts must be finite and non-negative".into(),
            ));
        }
        Ok(Self { counts })
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn bin_width(&self) -> f64 {
        180.0 / self.counts.len() as f64
    }

    pub fn bin_center(&self, bin: usize) -> f64 {
        -90.0 + (bin + 1) as f64 * self.bin_width()
    }

    /// Bin holding a slope angle given in degrees (any value; reduced mod 180).
    pub fn bin_of(&self, angle: f64) -> usize {
        let n = self.counts.len() as i64;
        let a = reduce_slope(angle);
        ((((a + 90.0) / self.bin_width()).round() as i64) - 1).rem_euclid(n) as usize
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Centre of the fullest bin; the first one on ties.
    pub fn peak(&self) -> f64 {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        self.bin_center(best)
    }
}

/// Reduces an angle in degrees into `(-90, 90]`.
fn reduce_slope(angle: f64) -> f64 {
    let r = angle.rem_euclid(180.0);
    if r > 90.0 {
        r - 180.0
    } else {
        r
    }
}

fn check_pair(a: &Grid, b: &Grid) -> Result<()> {
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::Dimension(format!(
            "coefficient planes differ in shape: {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    Ok(())
}

/// Slope histogram of the retained `(a, b)` pairs.
///
/// `mask` flags retained locations in row-major order; pairs with
/// `a = b = 0` are skipped.
pub fn wavelet_slope_histogram(
    a: &Grid,
    b: &Grid,
    mask: &[bool],
    bins: usize,
    weighting: SlopeWeighting,
) -> Result<SlopeHistogram> {
    check_pair(a, b)?;
    if mask.len() != a.len() {
        return Err(Error::Dimension("mask length does not match planes".into()));
    }
    let mut hist = SlopeHistogram::from_counts(vec![0.0; bins])?;
    let mut used = 0usize;
    for ((&x, &y), &keep) in a.as_slice().iter().zip(b.as_slice()).zip(mask) {
        if !keep || (x == 0.0 && y == 0.0) {
            continue;
        }
        let bin = hist.bin_of(y.atan2(x).to_degrees());
        hist.counts[bin] += match weighting {
            SlopeWeighting::Count => 1.0,
            SlopeWeighting::Magnitude => x.hypot(y),
        };
        used += 1;
    }
    if used == 0 {
        return Err(Error::degenerate(
            "rotation",
            "no retained coefficient with a nonzero slope",
        ));
    }
    Ok(hist)
}

/// Lag (degrees, in `(-90, 90]`) maximizing `sum_phi hI(phi) hJ(phi + lag)`.
pub fn estimate_rotation_initial(h_i: &SlopeHistogram, h_j: &SlopeHistogram) -> Result<f64> {
    Ok(rotation_candidates(h_i, h_j, 1)?[0])
}

/// Up to `count` lags at local maxima of the histogram cross-correlation,
/// strongest first. The first is [`estimate_rotation_initial`].
pub fn rotation_candidates(
    h_i: &SlopeHistogram,
    h_j: &SlopeHistogram,
    count: usize,
) -> Result<Vec<f64>> {
    let n = h_i.bin_count();
    if h_j.bin_count() != n {
        return Err(Error::Dimension(format!(
            "histograms have {n} and {} bins",
            h_j.bin_count()
        )));
    }
    if h_i.total() == 0.0 || h_j.total() == 0.0 {
        return Err(Error::degenerate("rotation", "empty slope histogram"));
    }
    let corr: Vec<f64> = (0..n)
        .map(|lag| {
            (0..n)
                .map(|p| h_i.counts[p] * h_j.counts[(p + lag) % n])
                .sum()
        })
        .collect();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&l| corr[l] >= corr[(l + n - 1) % n] && corr[l] >= corr[(l + 1) % n])
        .collect();
    // Strongest first; the smaller lag wins ties so a flat correlation gives 0.
    peaks.sort_by(|&x, &y| corr[y].total_cmp(&corr[x]).then(x.cmp(&y)));
    peaks.truncate(count.max(1));
    Ok(peaks
        .into_iter()
        .map(|l| reduce_slope(l as f64 * h_i.bin_width()))
        .collect())
}

/// Cosine and sine with values that should be exactly 0 or 1 snapped.
fn cos_sin(theta: f64) -> (f64, f64) {
    let snap = |v: f64| {
        if v.abs() < 1e-12 {
            0.0
        } else if (v.abs() - 1.0).abs() < 1e-12 {
            v.signum()
        } else {
            v
        }
    };
    let r = theta.to_radians();
    (snap(r.cos()), snap(r.sin()))
}

/// Rotates a coefficient pair by `theta` degrees about the grid centre.
///
/// The output at `x` is the rotation matrix applied to the input pair at
/// `R(-theta) x`, sampled bilinearly; samples outside the grid are zero.
pub fn rotate_coeff_planes(a: &Grid, b: &Grid, theta: f64) -> Result<(Grid, Grid)> {
    rotate_coeff_planes_with_support(a, b, theta).map(|(a, b, _)| (a, b))
}

/// As [`rotate_coeff_planes`], also flagging outputs whose source lies inside the grid.
pub fn rotate_coeff_planes_with_support(
    a: &Grid,
    b: &Grid,
    theta: f64,
) -> Result<(Grid, Grid, Vec<bool>)> {
    check_pair(a, b)?;
    if !a.is_square() {
        return Err(Error::Dimension("coefficient planes must be square".into()));
    }
    let n = a.rows();
    let c = (n as f64 - 1.0) / 2.0;
    let (cs, sn) = cos_sin(theta);
    let mut out_a = Grid::zeros(n, n);
    let mut out_b = Grid::zeros(n, n);
    let mut support = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (j as f64 - c, i as f64 - c);
            let sx = cs * x + sn * y + c;
            let sy = -sn * x + cs * y + c;
            let Some((va, vb)) = bilinear_pair(a, b, sy, sx) else {
                continue;
            };
            out_a[(i, j)] = cs * va - sn * vb;
            out_b[(i, j)] = sn * va + cs * vb;
            support[i * n + j] = true;
        }
    }
    Ok((out_a, out_b, support))
}

fn bilinear_pair(a: &Grid, b: &Grid, y: f64, x: f64) -> Option<(f64, f64)> {
    let n = a.rows() as f64;
    let tol = 1e-9;
    if y < -tol || x < -tol || y > n - 1.0 + tol || x > n - 1.0 + tol {
        return None;
    }
    let y = y.clamp(0.0, n - 1.0);
    let x = x.clamp(0.0, n - 1.0);
    let (i0, j0) = (y.floor() as usize, x.floor() as usize);
    let (fy, fx) = (y - i0 as f64, x - j0 as f64);
    let i1 = (i0 + 1).min(a.rows() - 1);
    let j1 = (j0 + 1).min(a.cols() - 1);
    let sample = |g: &Grid| {
        let top = g[(i0, j0)] * (1.0 - fx) + g[(i0, j1)] * fx;
        let bottom = g[(i1, j0)] * (1.0 - fx) + g[(i1, j1)] * fx;
        top * (1.0 - fy) + bottom * fy
    };
    Some((sample(a), sample(b)))
}

/// Locations inside the disc inscribed in an `n x n` grid, one cell in from the border.
pub(crate) fn inscribed_disc(n: usize) -> Vec<bool> {
    let c = (n as f64 - 1.0) / 2.0;
    let r2 = (c - 1.0).max(0.0).powi(2);
    (0..n * n)
        .map(|idx| {
            let (i, j) = ((idx / n) as f64, (idx % n) as f64);
            (i - c).powi(2) + (j - c).powi(2) <= r2
        })
        .collect()
}

/// Result of the fine rotation search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationRefinement {
    /// Angle in degrees, in `(-180, 180]`.
    pub theta: f64,
    pub residual: f64,
}

fn masked_residual(x: &Grid, y: &Grid, mask: &[bool]) -> f64 {
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((p, q), _)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt()
}

/// Grid search over `theta0 +- half_range` in `step` increments minimizing
/// `||aJ - R aI|| + ||bJ - R bI||` over the inscribed disc.
///
/// The slope histogram cannot tell `theta` from `theta + 180`, so the window
/// around `theta0 + 180` is searched as well and the better fit returned.
pub fn refine_rotation(
    coeffs_i: (&Grid, &Grid),
    coeffs_j: (&Grid, &Grid),
    theta0: f64,
    half_range: f64,
    step: f64,
) -> Result<RotationRefinement> {
    let near = refine_window(coeffs_i, coeffs_j, theta0, half_range, step)?;
    let far = refine_window(coeffs_i, coeffs_j, theta0 + 180.0, half_range, step)?;
    Ok(if far.residual < near.residual {
        far
    } else {
        near
    })
}

/// [`refine_rotation`] without the half-turn check.
pub(crate) fn refine_window(
    (a_i, b_i): (&Grid, &Grid),
    (a_j, b_j): (&Grid, &Grid),
    theta0: f64,
    half_range: f64,
    step: f64,
) -> Result<RotationRefinement> {
    check_pair(a_i, b_i)?;
    check_pair(a_j, b_j)?;
    check_pair(a_i, a_j)?;
    if !(step > 0.0) || !(half_range >= 0.0) {
        return Err(Error::Range("refinement step must be positive".into()));
    }
    let disc = inscribed_disc(a_i.rows());
    let steps = (half_range / step).round() as i64;
    let mut best = RotationRefinement {
        theta: super::normalize_angle(theta0),
        residual: f64::INFINITY,
    };
    for s in -steps..=steps {
        // Round to the step grid so reported angles are clean decimals.
        let theta = ((theta0 + s as f64 * step) / step).round() * step;
        let (ra, rb) = rotate_coeff_planes(a_i, b_i, theta)?;
        let r = masked_residual(a_j, &ra, &disc) + masked_residual(b_j, &rb, &disc);
        if r < best.residual {
            best = RotationRefinement {
                theta: super::normalize_angle(theta),
                residual: r,
            };
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_layout() {
        let h = SlopeHistogram::from_counts(vec![0.0; 180]).unwrap();
        assert_eq!(h.bin_center(179), 90.0);
        assert_eq!(h.bin_center(89), 0.0);
        assert_eq!(h.bin_of(0.0), 89);
        assert_eq!(h.bin_of(45.0), 134);
        assert_eq!(h.bin_of(90.0), 179);
        assert_eq!(h.bin_of(-90.0), 179);
        assert_eq!(h.bin_of(-89.6), 179);
        assert_eq!(h.bin_of(-89.4), 0);
        assert_eq!(h.bin_of(135.0), h.bin_of(-45.0));
    }

    #[test]
    fn constant_slopes_fill_one_bin() {
        let a = Grid::filled(4, 4, 1.0);
        let b = Grid::filled(4, 4, 1.0);
        let h = wavelet_slope_histogram(&a, &b, &[true; 16], 180, SlopeWeighting::Count).unwrap();
        assert_eq!(h.counts()[h.bin_of(45.0)], 16.0);
        assert_eq!(h.total(), 16.0);
        assert_eq!(h.peak(), 45.0);

        let b = Grid::zeros(4, 4);
        let h = wavelet_slope_histogram(&a, &b, &[true; 16], 180, SlopeWeighting::Count).unwrap();
        assert_eq!(h.peak(), 0.0);
    }

    #[test]
    fn empty_mask_is_degenerate() {
        let a = Grid::filled(2, 2, 1.0);
        let err = wavelet_slope_histogram(&a, &a, &[false; 4], 180, SlopeWeighting::Count);
        assert!(matches!(err, Err(Error::Degenerate { .. })));
        let z = Grid::zeros(2, 2);
        let err = wavelet_slope_histogram(&z, &z, &[true; 4], 180, SlopeWeighting::Count);
        assert!(matches!(err, Err(Error::Degenerate { .. })));
        assert!(wavelet_slope_histogram(&a, &a, &[true; 4], 1, SlopeWeighting::Count).is_err());
    }

    #[test]
    fn cross_correlation_lag() {
        let mut counts = vec![0.0; 180];
        for (i, c) in counts.iter_mut().enumerate() {
            *c = ((i * 37) % 11) as f64 + if i == 40 { 50.0 } else { 0.0 };
        }
        let h_i = SlopeHistogram::from_counts(counts.clone()).unwrap();
        assert_eq!(estimate_rotation_initial(&h_i, &h_i).unwrap(), 0.0);
        let shifted: Vec<f64> = (0..180).map(|i| counts[(i + 180 - 12) % 180]).collect();
        let h_j = SlopeHistogram::from_counts(shifted).unwrap();
        assert_eq!(estimate_rotation_initial(&h_i, &h_j).unwrap(), 12.0);
        let zero = SlopeHistogram::from_counts(vec![0.0; 180]).unwrap();
        assert!(estimate_rotation_initial(&h_i, &zero).is_err());
    }

    #[test]
    fn quarter_turn_is_exact() {
        let a = Grid::from_fn(6, 6, |i, j| (i * 6 + j) as f64);
        let b = Grid::from_fn(6, 6, |i, j| (i as f64) - 2.0 * j as f64);
        let (ra, rb, support) = rotate_coeff_planes_with_support(&a, &b, 90.0).unwrap();
        assert!(support.iter().all(|&s| s));
        for i in 0..6 {
            for j in 0..6 {
                // source of (i, j) under a quarter turn
                let (si, sj) = (5 - j, i);
                assert_eq!(ra[(i, j)], -b[(si, sj)]);
                assert_eq!(rb[(i, j)], a[(si, sj)]);
            }
        }
        let (ia, ib) = rotate_coeff_planes(&a, &b, 0.0).unwrap();
        assert_eq!((ia, ib), (a, b));
    }

    #[test]
    fn refinement_finds_grid_angle() {
        let n = 48;
        let c = (n as f64 - 1.0) / 2.0;
        let a = Grid::from_fn(n, n, |i, j| {
            ((j as f64 - c) * 0.3).sin() + ((i as f64 - c) * 0.17).cos()
        });
        let b = Grid::from_fn(n, n, |i, j| {
            ((i as f64 - c) * 0.25).sin() * ((j as f64) * 0.11).cos()
        });
        let (ra, rb) = rotate_coeff_planes(&a, &b, 13.7).unwrap();
        let r = refine_rotation((&a, &b), (&ra, &rb), 12.0, 5.0, 0.1).unwrap();
        assert!((r.theta - 13.7).abs() < 1e-9, "{}", r.theta);
        let r = refine_rotation((&a, &b), (&a, &b), 0.0, 5.0, 0.1).unwrap();
        assert_eq!(r.theta, 0.0);
    }
}
