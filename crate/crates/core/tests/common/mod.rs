//! Structural checks shared by the property suite and the acceptance report.
#![allow(dead_code)]

use std::collections::HashMap;

use inband_core::estimate::{
    estimate_rotation_initial, estimate_translation_bnb, wavelet_slope_histogram, BnbConfig,
    BnbState, SensedPlanes, SlopeHistogram, SlopeWeighting,
};
use inband_core::grid::{Grid, ImageGrid};
use inband_core::haar::{compute_difference_field, forward_haar};
use inband_core::inband::{Axis, DyadicShift, InBandShifter};

pub fn lcg(seed: u64) -> impl FnMut() -> u64 {
    let mut s = seed ^ 0x9e37_79b9_7f4a_7c15;
    move || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        s >> 33
    }
}

/// Uniform integer intensities in `0..256`.
pub fn random_image(side: usize, seed: u64) -> ImageGrid {
    let mut next = lcg(seed);
    ImageGrid::from_fn(side, |_, _| (next() % 256) as f64).unwrap()
}

/// The image replicated onto a grid `2^h` times finer, rolled by `(sy, sx)`
/// fine pixels and analysed from scratch.
pub fn brute_force_pyramid(
    img: &ImageGrid,
    sx: i64,
    sy: i64,
    h: u32,
) -> inband_core::haar::HaarPyramid {
    let f = 1usize << h;
    let side = img.side() * f;
    let up = Grid::from_fn(side, side, |i, j| img[(i / f, j / f)]);
    forward_haar(&ImageGrid::new(up.roll(sy, sx)).unwrap())
}

/// Largest deviation between in-band shifted planes and the brute-force
/// reference over every shift in `[-1, 1]^2` on each lattice `1/2^h`,
/// `h <= h_top`, plus the full-period shifts, for every reduction level.
pub fn oracle_max_error(img: &ImageGrid, h_top: u32) -> f64 {
    let n = img.levels();
    let d = compute_difference_field(&forward_haar(img), n).unwrap();
    let shifter = InBandShifter::new(&d);
    let mut worst = 0.0f64;
    for h in 0..=h_top {
        let half = 1i64 << h;
        let period = (img.side() as i64) << h;
        let mut shifts: Vec<(i64, i64)> = (-half..=half)
            .flat_map(|sx| (-half..=half).map(move |sy| (sx, sy)))
            .collect();
        shifts.extend([(period, 0), (0, -period), (period + 1, 1 - period)]);
        for (sx, sy) in shifts {
            let pyr = brute_force_pyramid(img, sx, sy, h);
            for k in 1..=n + h {
                let level = pyr.level(n + h - k);
                let (a, b) = shifter.detail_planes(sx, sy, h, k).unwrap();
                worst = worst.max(a.max_abs_diff(&level.a));
                worst = worst.max(b.max_abs_diff(&level.b));
            }
            for k in 0..=n + h {
                let want = compute_difference_field(&pyr, n + h - k).unwrap();
                let got = shifter.approximation(sx, sy, h, k).unwrap();
                worst = worst.max(got.max_abs_diff(want.values()));
            }
        }
    }
    worst
}

/// Largest deviation between `A^0 + D^l` and the mean of each
/// `2^(N-l)` block, over every level; includes `D^0 = 0`.
pub fn block_mean_max_error(img: &ImageGrid) -> f64 {
    let pyr = forward_haar(img);
    let n = img.levels();
    let mut worst = 0.0f64;
    for l in 0..=n {
        let d = compute_difference_field(&pyr, l).unwrap();
        let f = 1usize << (n - l);
        let side = 1usize << l;
        for i in 0..side {
            for j in 0..side {
                let mut sum = 0.0;
                for y in 0..f {
                    for x in 0..f {
                        sum += img[(i * f + y, j * f + x)];
                    }
                }
                let mean = sum / (f * f) as f64;
                worst = worst.max((pyr.global_approx() + d.values()[(i, j)] - mean).abs());
            }
        }
        if l == 0 {
            worst = worst.max(d.values()[(0, 0)].abs());
        }
    }
    worst
}

fn ncc_term(x: &Grid, y: &Grid) -> f64 {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (&p, &q) in x.as_slice().iter().zip(y.as_slice()) {
        xy += p * q;
        xx += p * p;
        yy += q * q;
    }
    if xx == 0.0 || yy == 0.0 {
        0.0
    } else {
        xy / (xx.sqrt() * yy.sqrt())
    }
}

/// Every lattice point of `[-1, 1]^2` at spacing `1/2^h`, with the detail
/// planes of the image translated by it.
fn lattice_planes(
    shifter: &InBandShifter,
    h: u32,
    level: u32,
) -> HashMap<(i64, i64), (Grid, Grid)> {
    let half = 1i64 << h;
    let mut out = HashMap::new();
    for x in -half..=half {
        for y in -half..=half {
            let sx = DyadicShift::new(x, h, Axis::Horizontal).reduced();
            let sy = DyadicShift::new(y, h, Axis::Vertical).reduced();
            out.insert(
                (x, y),
                shifter.detail_planes_at_level(sx, sy, level).unwrap(),
            );
        }
    }
    out
}

#[derive(Debug, Default, Clone, Copy)]
pub struct BnbTally {
    pub instances: usize,
    /// Sensed planes without energy; the estimator refuses these.
    pub degenerate: usize,
    pub mismatches: usize,
}

/// Runs the branch and bound on every noise-free instance of an image: each
/// lattice truth in `[-1, 1]^2` at `1/2^h_max` and every reduction level.
/// An instance matches when the returned shift is a lattice point whose
/// exhaustive score equals the exhaustive maximum. Every trace is also
/// checked with [`contraction_violation`].
pub fn bnb_against_exhaustive(img: &ImageGrid, h_max: u32, tau: f64) -> Result<BnbTally, String> {
    let n = img.levels();
    let d = compute_difference_field(&forward_haar(img), n).unwrap();
    let shifter = InBandShifter::new(&d);
    let unit = 1.0 / (1u64 << h_max) as f64;
    let mut tally = BnbTally::default();
    for k in 1..=n {
        let level = n - k;
        let planes = lattice_planes(&shifter, h_max, level);
        let mut truths: Vec<_> = planes.keys().copied().collect();
        truths.sort_unstable();
        for truth in truths {
            let (sa, sb) = &planes[&truth];
            if sa.as_slice().iter().all(|&v| v == 0.0) || sb.as_slice().iter().all(|&v| v == 0.0) {
                tally.degenerate += 1;
                continue;
            }
            tally.instances += 1;
            let exhaustive: HashMap<(i64, i64), f64> = planes
                .iter()
                .map(|(&p, (a, b))| (p, ncc_term(a, sa) + ncc_term(b, sb)))
                .collect();
            let best = exhaustive
                .values()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let sensed = SensedPlanes::new(level, sa.clone(), sb.clone());
            let cfg = BnbConfig {
                tau,
                k,
                h_max,
                ..BnbConfig::default()
            };
            let est =
                estimate_translation_bnb(&shifter, &sensed, &cfg).map_err(|e| e.to_string())?;
            if let Some(why) = contraction_violation(&est.trace, h_max) {
                return Err(format!("truth {truth:?} k={k} h_max={h_max}: {why}"));
            }
            let p = (
                (est.tx / unit).round() as i64,
                (est.ty / unit).round() as i64,
            );
            let on_lattice = p.0 as f64 * unit == est.tx && p.1 as f64 * unit == est.ty;
            let ok = on_lattice && exhaustive.get(&p).is_some_and(|&s| s >= best - 1e-12);
            if !ok {
                tally.mismatches += 1;
            }
        }
    }
    Ok(tally)
}

/// `None` when every descent halves the rectangle width and the search
/// reaches lattice width within `h_max + 1` splits (or stops earlier).
pub fn contraction_violation(trace: &[BnbState], h_max: u32) -> Option<String> {
    let unit = 1.0 / (1u64 << h_max) as f64;
    if trace.is_empty() {
        return Some("empty trace".into());
    }
    if trace[0].width() != 2.0 {
        return Some(format!("root width {}", trace[0].width()));
    }
    for w in trace.windows(2) {
        if w[1].descended && w[1].width() != w[0].width() / 2.0 {
            return Some(format!(
                "split from width {} to {}",
                w[0].width(),
                w[1].width()
            ));
        }
    }
    match trace.iter().position(|s| s.width() <= unit) {
        Some(i) => {
            let splits = trace[1..=i].iter().filter(|s| s.descended).count();
            if i as u32 > h_max + 1 || splits != i {
                Some(format!(
                    "lattice width after {i} steps, {splits} of them splits"
                ))
            } else {
                None
            }
        }
        None => None,
    }
}

/// Coefficient pairs with one dominant slope `theta0` plus isotropic clutter.
pub fn oriented_planes(side: usize, theta0: f64, seed: u64) -> (Grid, Grid) {
    let mut next = lcg(seed);
    let mut uniform = move || (next() % 1_000_000) as f64 / 1_000_000.0;
    let mut a = Grid::zeros(side, side);
    let mut b = Grid::zeros(side, side);
    for idx in 0..side * side {
        let dominant = uniform() < 0.6;
        let angle = if dominant {
            theta0 + 0.2 * (uniform() - 0.5)
        } else {
            360.0 * uniform()
        };
        let r = 1.0 + 9.0 * uniform();
        let sign = if uniform() < 0.5 { -1.0 } else { 1.0 };
        let (s, c) = angle.to_radians().sin_cos();
        a.as_mut_slice()[idx] = sign * r * c;
        b.as_mut_slice()[idx] = sign * r * s;
    }
    (a, b)
}

/// `(a, b) -> R(phi) (a, b)` at every location.
pub fn mix(a: &Grid, b: &Grid, phi: f64) -> (Grid, Grid) {
    let (s, c) = phi.to_radians().sin_cos();
    let mut ma = a.clone();
    let mut mb = b.clone();
    for i in 0..a.len() {
        let (x, y) = (a.as_slice()[i], b.as_slice()[i]);
        ma.as_mut_slice()[i] = c * x - s * y;
        mb.as_mut_slice()[i] = s * x + c * y;
    }
    (ma, mb)
}

fn peak_bin(h: &SlopeHistogram) -> usize {
    h.bin_of(h.peak())
}

fn bin_distance(h: &SlopeHistogram, x: usize, y: usize) -> usize {
    let n = h.bin_count();
    let d = x.abs_diff(y);
    d.min(n - d)
}

/// Largest bin offset between the mixed histogram's peak and the original
/// peak moved by `phi`, and between the estimated lag and `phi`.
pub fn hws_equivariance_error(a: &Grid, b: &Grid, phi: f64, bins: usize) -> usize {
    let mask = vec![true; a.len()];
    let h_i = wavelet_slope_histogram(a, b, &mask, bins, SlopeWeighting::Count).unwrap();
    let (ma, mb) = mix(a, b, phi);
    let h_j = wavelet_slope_histogram(&ma, &mb, &mask, bins, SlopeWeighting::Count).unwrap();
    let moved = h_i.bin_of(h_i.peak() + phi);
    let peak_err = bin_distance(&h_i, peak_bin(&h_j), moved);
    let lag = estimate_rotation_initial(&h_i, &h_j).unwrap();
    let lag_err = bin_distance(&h_i, h_i.bin_of(lag), h_i.bin_of(phi));
    peak_err.max(lag_err)
}
