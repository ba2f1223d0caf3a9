//! Hard thresholding and coefficient masks.

use crate::error::{Error, Result};
use crate::haar::HaarPyramid;

/// One of the three detail orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Band {
    A,
    B,
    C,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::A, Band::B, Band::C];

    fn index(self) -> usize {
        match self {
            Band::A => 0,
            Band::B => 1,
            Band::C => 2,
        }
    }
}

/// Per-level boolean planes marking which detail coefficients survive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseMask {
    levels: Vec<[Vec<bool>; 3]>,
    retained: usize,
}

impl SparseMask {
    /// Mask retaining every detail coefficient of a pyramid with `levels` levels.
    pub fn full(levels: u32) -> Self {
        Self::from_fn(levels, |_, _, _| true)
    }

    pub fn empty(levels: u32) -> Self {
        Self::from_fn(levels, |_, _, _| false)
    }

    /// Builds a mask from a predicate over (level, band, flat index).
    pub fn from_fn(levels: u32, mut keep: impl FnMut(u32, Band, usize) -> bool) -> Self {
        let mut retained = 0;
        let levels = (0..levels)
            .map(|l| {
                let n = 1usize << (2 * l);
                Band::ALL.map(|band| {
                    (0..n)
                        .map(|idx| {
                            let k = keep(l, band, idx);
                            retained += k as usize;
                            k
                        })
                        .collect()
                })
            })
            .collect();
        Self { levels, retained }
    }

    pub fn levels(&self) -> u32 {
        self.levels.len() as u32
    }

    /// Number of retained coefficients (`M` in the scale estimator).
    pub fn retained_count(&self) -> usize {
        self.retained
    }

    /// Row-major flags for one plane.
    pub fn plane(&self, level: u32, band: Band) -> &[bool] {
        &self.levels[level as usize][band.index()]
    }

    pub fn is_retained(&self, level: u32, band: Band, idx: usize) -> bool {
        self.levels[level as usize][band.index()][idx]
    }

    pub fn is_subset_of(&self, other: &SparseMask) -> bool {
        self.levels.len() == other.levels.len()
            && self.levels.iter().zip(&other.levels).all(|(x, y)| {
                x.iter()
                    .zip(y)
                    .all(|(p, q)| p.iter().zip(q).all(|(&u, &v)| !u || v))
            })
    }

    /// Zeroes every coefficient of `pyr` that the mask drops.
    pub fn apply(&self, pyr: &mut HaarPyramid) -> Result<()> {
        if pyr.levels() != self.levels() {
            return Err(Error::Dimension(format!(
                "mask has {} levels, pyramid has {}",
                self.levels(),
                pyr.levels()
            )));
        }
        for l in 0..pyr.levels() {
            let flags = &self.levels[l as usize];
            for (plane, keep) in pyr.level_mut(l).planes_mut().into_iter().zip(flags) {
                for (v, &k) in plane.as_mut_slice().iter_mut().zip(keep) {
                    if !k {
                        *v = 0.0;
                    }
                }
            }
        }
        Ok(())
    }
}

/// How [`hard_threshold`] chooses its cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdMode {
    /// Donoho-Johnstone universal threshold, noise level from the finest diagonal plane.
    Universal,
    /// Keep the `ceil(p * count)` largest-magnitude detail coefficients.
    KeepFraction(f64),
}

/// `sigma * sqrt(2 ln n)` with `sigma = median(|finest c|) / 0.6745` and `n` the pixel count.
pub fn universal_threshold(pyr: &HaarPyramid) -> f64 {
    let mut mags: Vec<f64> = pyr.finest().c.as_slice().iter().map(|v| v.abs()).collect();
    let sigma = median(&mut mags) / 0.6745;
    let n = (pyr.side() * pyr.side()) as f64;
    sigma * (2.0 * n.ln()).sqrt()
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Zeroes detail coefficients with magnitude below `lambda`; the global
/// approximation is never touched.
pub fn threshold_with(pyr: &HaarPyramid, lambda: f64) -> (HaarPyramid, SparseMask) {
    let mask = SparseMask::from_fn(pyr.levels(), |l, band, idx| {
        let level = pyr.level(l);
        let v = match band {
            Band::A => level.a.as_slice()[idx],
            Band::B => level.b.as_slice()[idx],
            Band::C => level.c.as_slice()[idx],
        };
        v.abs() >= lambda
    });
    let mut out = pyr.clone();
    mask.apply(&mut out).expect("mask built from this pyramid");
    (out, mask)
}

/// Keeps exactly `count` detail coefficients, largest magnitude first; ties
/// are broken by traversal order so the kept set grows monotonically in `count`.
pub fn keep_largest(pyr: &HaarPyramid, count: usize) -> (HaarPyramid, SparseMask) {
    let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(pyr.detail_count());
    let mut pos = 0;
    pyr.for_each_detail(|v| {
        ranked.push((v.abs(), pos));
        pos += 1;
    });
    ranked.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut keep = vec![false; ranked.len()];
    for &(_, p) in ranked.iter().take(count) {
        keep[p] = true;
    }
    mask_from_flat(pyr, &keep)
}

/// Builds the mask for per-coefficient flags given in traversal order and applies it.
pub(crate) fn mask_from_flat(pyr: &HaarPyramid, keep: &[bool]) -> (HaarPyramid, SparseMask) {
    let mut cursor = 0;
    let mask = SparseMask::from_fn(pyr.levels(), |_, _, _| {
        let k = keep[cursor];
        cursor += 1;
        k
    });
    let mut out = pyr.clone();
    mask.apply(&mut out).expect("mask built from this pyramid");
    (out, mask)
}

/// `ceil(p * total)`, tolerant of representation error in `p * total`.
pub(crate) fn fraction_count(p: f64, total: usize) -> usize {
    let raw = p * total as f64;
    let count = (raw - 1e-9 * raw.max(1.0)).ceil().max(0.0) as usize;
    count.min(total)
}

/// Hard thresholding of all detail planes.
pub fn hard_threshold(pyr: &HaarPyramid, mode: ThresholdMode) -> Result<(HaarPyramid, SparseMask)> {
    match mode {
        ThresholdMode::Universal => Ok(threshold_with(pyr, universal_threshold(pyr))),
        ThresholdMode::KeepFraction(p) => {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Contract(format!("keep fraction {p} outside [0, 1]")));
            }
            Ok(keep_largest(pyr, fraction_count(p, pyr.detail_count())))
        }
    }
}
