//! Detail coefficients of a translated image, computed from the reference
//! difference field without resampling anything in the spatial domain.
//!
//! A sub-pixel shift `s / 2^h` is modelled by virtually appending `h`
//! zero-detail levels below the pyramid (the image becomes piecewise constant
//! on `2^h x 2^h` blocks at level `N' = N + h`) and shifting that virtual grid
//! by the integer `s`. A detail coefficient at level `N' - k` is then a signed
//! box sum over the shifted virtual grid, which collapses to a weighted sum of
//! `D^N` values: cells fully covered by a box half count twice, cells cut by a
//! box edge count once, and the cell straddling the centre line cancels.
//!
//! Boundaries are periodic. Content near one border wraps to the other.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::haar::DifferenceField;
use crate::threshold::Band;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// A translation of `numerator / 2^added_levels` pixels along one axis.
///
/// Positive values move image content towards larger column (horizontal)
/// or row (vertical) indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DyadicShift {
    pub numerator: i64,
    pub added_levels: u32,
    pub axis: Axis,
}

impl DyadicShift {
    pub fn new(numerator: i64, added_levels: u32, axis: Axis) -> Self {
        Self {
            numerator,
            added_levels,
            axis,
        }
    }

    pub fn zero(axis: Axis) -> Self {
        Self::new(0, 0, axis)
    }

    /// Shift in pixels, exact for every representable numerator.
    pub fn pixels(&self) -> f64 {
        self.numerator as f64 / (1u64 << self.added_levels) as f64
    }

    /// Largest `t` with `2^t | numerator`; 0 for odd and for zero numerators.
    pub fn trailing_power(&self) -> u32 {
        if self.numerator == 0 {
            0
        } else {
            self.numerator.trailing_zeros()
        }
    }

    /// Same shift expressed with `h` added levels (`h` must not be smaller).
    pub fn with_added_levels(self, h: u32) -> Self {
        assert!(h >= self.added_levels, "cannot coarsen a dyadic shift");
        Self {
            numerator: self.numerator << (h - self.added_levels),
            added_levels: h,
            axis: self.axis,
        }
    }

    /// Halves numerator and level count while the numerator stays even.
    pub fn reduced(mut self) -> Self {
        if self.numerator == 0 {
            self.added_levels = 0;
            return self;
        }
        while self.added_levels > 0 && self.numerator % 2 == 0 {
            self.numerator /= 2;
            self.added_levels -= 1;
        }
        self
    }
}

/// Rounds `shift` to the `1/2^h_max` lattice and reduces to lowest terms.
pub fn quantize_shift(shift: f64, h_max: u32, axis: Axis) -> DyadicShift {
    let scaled = shift * (1u64 << h_max) as f64;
    DyadicShift::new(scaled.round() as i64, h_max, axis).reduced()
}

/// `D^{N+h0}` from `D^N` by replicating each entry into a `2^h0` block.
pub fn lift_dfield(d: &DifferenceField, h0: u32) -> DifferenceField {
    let side = d.side() << h0;
    let values = Grid::from_fn(side, side, |i, j| d.values()[(i >> h0, j >> h0)]);
    DifferenceField::new(d.level() + h0, values).expect("side matches level")
}

/// Shifted detail coefficients at level `N' - k` of the virtual pyramid.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedDetailPlane {
    /// `k`, counted from the finest virtual level.
    pub reduction_level: u32,
    /// Pyramid level of the plane, `N + h - k`.
    pub level: u32,
    pub values: Grid,
}

#[derive(Debug, Clone, Copy)]
struct Run {
    start: i64,
    len: i64,
    weight: f64,
}

/// Weighted index runs over the working grid along one axis.
#[derive(Debug, Clone, Copy)]
struct Profile {
    runs: [Run; 6],
    count: usize,
}

impl Profile {
    fn new() -> Self {
        Self {
            runs: [Run {
                start: 0,
                len: 0,
                weight: 0.0,
            }; 6],
            count: 0,
        }
    }

    fn push(&mut self, start: i64, len: i64, weight: f64) {
        if len > 0 && weight != 0.0 {
            self.runs[self.count] = Run { start, len, weight };
            self.count += 1;
        }
    }

    fn runs(&self) -> &[Run] {
        &self.runs[..self.count]
    }

    fn apply(&self, line: &PeriodicLine<'_>) -> f64 {
        self.runs()
            .iter()
            .map(|r| r.weight * line.range_sum(r.start, r.len))
            .sum()
    }

    /// Dense weight vector over one period of the working grid (test helper).
    #[cfg(test)]
    fn dense(&self, period: i64) -> Vec<f64> {
        let mut w = vec![0.0; period as usize];
        for r in self.runs() {
            for x in r.start..r.start + r.len {
                w[x.rem_euclid(period) as usize] += r.weight;
            }
        }
        w
    }
}

/// Adds the virtual-pixel interval `[x0, x0 + len)` to `profile`.
///
/// With `h >= 1` the working grid is level `N' - 1`, whose cells are two
/// virtual pixels wide, so covered cells weigh 2 and cut cells weigh 1.
/// With `h = 0` the working grid is the virtual grid itself.
fn push_interval(profile: &mut Profile, x0: i64, len: i64, h: u32, weight: f64) {
    if h == 0 {
        profile.push(x0, len, weight);
        return;
    }
    let end = x0 + len;
    if x0.rem_euclid(2) == 1 {
        profile.push(x0.div_euclid(2), 1, weight);
    }
    let first_full = (x0 + 1).div_euclid(2);
    let last_full = end.div_euclid(2);
    profile.push(first_full, last_full - first_full, 2.0 * weight);
    if end.rem_euclid(2) == 1 {
        profile.push(end.div_euclid(2), 1, weight);
    }
}

/// Left-minus-right profile for output index `j` with the reading offset
/// `s` (virtual pixels): the box at `j` samples the source starting at
/// `2^k j + s`.
fn detail_profile(j: i64, k: u32, s: i64, h: u32) -> Profile {
    if h >= 1 && s.rem_euclid(2) == 1 {
        return odd_shift_detail_profile(j, k, s);
    }
    let half = 1i64 << (k - 1);
    let mut p = Profile::new();
    push_interval(&mut p, (j << k) + s, half, h, 1.0);
    push_interval(&mut p, (j << k) + half + s, half, h, -1.0);
    p
}

/// The closed form for odd offsets: weight 1 at `j1`, 2 strictly between
/// `j1` and `j2`, 0 at `j2`, -2 strictly between `j2` and `j3`, -1 at `j3`.
/// For `k = 1` the `j2` terms vanish and only `j1` and `j3` remain.
fn odd_shift_detail_profile(j: i64, k: u32, s: i64) -> Profile {
    let q = s.div_euclid(2);
    let width = 1i64 << (k - 1);
    let j1 = width * j + q;
    let j3 = width * (j + 1) + q;
    let mut p = Profile::new();
    p.push(j1, 1, 1.0);
    if k >= 2 {
        let j2 = (1i64 << (k - 2)) * (2 * j + 1) + q;
        p.push(j1 + 1, j2 - j1 - 1, 2.0);
        p.push(j2 + 1, j3 - j2 - 1, -2.0);
    }
    p.push(j3, 1, -1.0);
    p
}

/// Plain box profile of width `2^k` used across the detail direction.
fn smooth_profile(i: i64, k: u32, s: i64, h: u32) -> Profile {
    let mut p = Profile::new();
    push_interval(&mut p, (i << k) + s, 1i64 << k, h, 1.0);
    p
}

/// A row of `D^N` seen as a periodic sequence on a grid `2^expand` times finer.
struct PeriodicLine<'a> {
    values: &'a [f64],
    prefix: &'a [f64],
    expand: u32,
}

impl PeriodicLine<'_> {
    /// Sum over working indices `[start, start + len)`, wrapping periodically.
    fn range_sum(&self, start: i64, len: i64) -> f64 {
        self.cumulative(start + len) - self.cumulative(start)
    }

    fn cumulative(&self, x: i64) -> f64 {
        let n = self.values.len();
        let period = (n as i64) << self.expand;
        let laps = x.div_euclid(period);
        let y = x.rem_euclid(period);
        let idx = (y >> self.expand) as usize;
        let rem = y & ((1i64 << self.expand) - 1);
        let mut acc =
            self.prefix[idx] * (1i64 << self.expand) as f64 + rem as f64 * self.values[idx];
        if laps != 0 {
            acc += laps as f64 * self.prefix[n] * (1i64 << self.expand) as f64;
        }
        acc
    }
}

fn prefix_rows(g: &Grid) -> Vec<f64> {
    let cols = g.cols();
    let mut out = Vec::with_capacity(g.rows() * (cols + 1));
    for i in 0..g.rows() {
        let mut acc = 0.0;
        out.push(0.0);
        for &v in g.row(i) {
            acc += v;
            out.push(acc);
        }
    }
    out
}

fn transpose(g: &Grid) -> Grid {
    Grid::from_fn(g.cols(), g.rows(), |i, j| g[(j, i)])
}

/// What the separable engine produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Output {
    Horizontal,
    Vertical,
    Approximation,
}

/// Precomputed view of a reference `D^N` that produces shifted planes.
///
/// Reuse one shifter for many candidate shifts: the per-row prefix sums are
/// built once.
#[derive(Debug, Clone)]
pub struct InBandShifter {
    levels: u32,
    rows: Grid,
    row_prefix: Vec<f64>,
    cols: Grid,
    col_prefix: Vec<f64>,
}

impl InBandShifter {
    /// `d` must be the full-resolution difference field `D^N`.
    pub fn new(d: &DifferenceField) -> Self {
        let rows = d.values().clone();
        let cols = transpose(&rows);
        Self {
            levels: d.level(),
            row_prefix: prefix_rows(&rows),
            col_prefix: prefix_rows(&cols),
            rows,
            cols,
        }
    }

    /// `N`, the level of the reference field.
    pub fn levels(&self) -> u32 {
        self.levels
    }

    fn check_k(&self, k: u32, h: u32, min_k: u32) -> Result<()> {
        if k < min_k || k > self.levels + h {
            return Err(Error::Range(format!(
                "reduction level {k} outside {min_k}..={} (N = {}, h = {h})",
                self.levels + h,
                self.levels
            )));
        }
        Ok(())
    }

    /// Horizontal and vertical detail planes at level `N + h - k` of the
    /// image translated by `(sx, sy) / 2^h` pixels.
    pub fn detail_planes(&self, sx: i64, sy: i64, h: u32, k: u32) -> Result<(Grid, Grid)> {
        self.check_k(k, h, 1)?;
        Ok((
            self.evaluate(Output::Horizontal, sx, sy, h, k),
            self.evaluate(Output::Vertical, sx, sy, h, k),
        ))
    }

    /// Difference field (`A - A^0`) at level `N + h - k` of the translated image.
    pub fn approximation(&self, sx: i64, sy: i64, h: u32, k: u32) -> Result<Grid> {
        self.check_k(k, h, 0)?;
        Ok(self.evaluate(Output::Approximation, sx, sy, h, k))
    }

    /// Detail planes at an absolute pyramid level for a lattice shift.
    pub fn detail_planes_at_level(
        &self,
        shift_x: DyadicShift,
        shift_y: DyadicShift,
        level: u32,
    ) -> Result<(Grid, Grid)> {
        let (sx, sy) = common_levels(shift_x, shift_y);
        let h = sx.added_levels;
        if level >= self.levels + h {
            return Err(Error::Range(format!(
                "level {level} is not a detail level of a {}-level pyramid",
                self.levels + h
            )));
        }
        self.detail_planes(sx.numerator, sy.numerator, h, self.levels + h - level)
    }

    fn evaluate(&self, what: Output, sx: i64, sy: i64, h: u32, k: u32) -> Grid {
        // The closed form reads the source at `x + offset`, so content that
        // moves by `+s` is read at offset `-s`.
        let (ox, oy) = (-sx, -sy);
        let out_side = 1usize << (self.levels + h - k);
        let (lines, prefix, inner, outer): (
            _,
            _,
            Box<dyn Fn(i64) -> Profile>,
            Box<dyn Fn(i64) -> Profile>,
        ) = match what {
            Output::Horizontal => (
                &self.rows,
                &self.row_prefix,
                Box::new(move |j| detail_profile(j, k, ox, h)),
                Box::new(move |i| smooth_profile(i, k, oy, h)),
            ),
            Output::Vertical => (
                &self.cols,
                &self.col_prefix,
                Box::new(move |i| detail_profile(i, k, oy, h)),
                Box::new(move |j| smooth_profile(j, k, ox, h)),
            ),
            Output::Approximation => (
                &self.rows,
                &self.row_prefix,
                Box::new(move |j| smooth_profile(j, k, ox, h)),
                Box::new(move |i| smooth_profile(i, k, oy, h)),
            ),
        };
        let expand = h.saturating_sub(1);
        let n = lines.rows();

        // Stage 1: filter every source line along its own axis. `partial` is
        // stored one output index per row so stage 2 reads contiguous lines.
        let mut partial = Grid::zeros(out_side, n);
        for o in 0..out_side {
            let profile = inner(o as i64);
            for r in 0..n {
                let line = PeriodicLine {
                    values: lines.row(r),
                    prefix: &prefix[r * (n + 1)..(r + 1) * (n + 1)],
                    expand,
                };
                partial[(o, r)] = profile.apply(&line);
            }
        }

        // Stage 2: filter across lines.
        let partial_prefix = prefix_rows(&partial);
        let norm = 4f64.powi(k as i32);
        let mut out = Grid::zeros(out_side, out_side);
        for o in 0..out_side {
            let line = PeriodicLine {
                values: partial.row(o),
                prefix: &partial_prefix[o * (n + 1)..(o + 1) * (n + 1)],
                expand,
            };
            for p in 0..out_side {
                out[(p, o)] = outer(p as i64).apply(&line) / norm;
            }
        }
        match what {
            Output::Vertical => transpose(&out),
            _ => out,
        }
    }
}

/// Brings two shifts to the larger of their level counts.
pub fn common_levels(x: DyadicShift, y: DyadicShift) -> (DyadicShift, DyadicShift) {
    let h = x.added_levels.max(y.added_levels);
    (x.with_added_levels(h), y.with_added_levels(h))
}

fn check_field(d: &DifferenceField) -> Result<()> {
    if d.level() == 0 {
        return Err(Error::Dimension(
            "difference field must be at level N >= 1".into(),
        ));
    }
    Ok(())
}

/// One shifted detail plane: the horizontal plane (`Band::A`) for a horizontal
/// shift or the vertical plane (`Band::B`) for a vertical shift.
///
/// `d` is `D^N`; `k` counts from the finest virtual level, `1..=N+h`.
pub fn shifted_detail_plane(
    d: &DifferenceField,
    shift: DyadicShift,
    k: u32,
    band: Band,
) -> Result<ShiftedDetailPlane> {
    check_field(d)?;
    let expected = match band {
        Band::A => Axis::Horizontal,
        Band::B => Axis::Vertical,
        Band::C => {
            return Err(Error::Contract(
                "only horizontal and vertical planes can be shifted".into(),
            ))
        }
    };
    if shift.axis != expected {
        return Err(Error::Contract(format!(
            "{:?} plane requested for a {:?} shift",
            band, shift.axis
        )));
    }
    let shifter = InBandShifter::new(d);
    let h = shift.added_levels;
    let (sx, sy) = match shift.axis {
        Axis::Horizontal => (shift.numerator, 0),
        Axis::Vertical => (0, shift.numerator),
    };
    let (a, b) = shifter.detail_planes(sx, sy, h, k)?;
    Ok(ShiftedDetailPlane {
        reduction_level: k,
        level: d.level() + h - k,
        values: if band == Band::A { a } else { b },
    })
}

/// Horizontal and vertical planes for a diagonal shift, modelled as the
/// horizontal shift followed by the vertical one. Both shifts are brought to
/// a common `h` first; `k` counts from level `N + h` of that common grid.
pub fn shifted_detail_pair(
    d: &DifferenceField,
    shift_x: DyadicShift,
    shift_y: DyadicShift,
    k: u32,
) -> Result<(ShiftedDetailPlane, ShiftedDetailPlane)> {
    check_field(d)?;
    if shift_x.axis != Axis::Horizontal || shift_y.axis != Axis::Vertical {
        return Err(Error::Contract(
            "expected (horizontal, vertical) shifts".into(),
        ));
    }
    let (sx, sy) = common_levels(shift_x, shift_y);
    let h = sx.added_levels;
    let (a, b) = InBandShifter::new(d).detail_planes(sx.numerator, sy.numerator, h, k)?;
    let level = d.level() + h - k;
    Ok((
        ShiftedDetailPlane {
            reduction_level: k,
            level,
            values: a,
        },
        ShiftedDetailPlane {
            reduction_level: k,
            level,
            values: b,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantization_examples() {
        let q = quantize_shift(0.5, 6, Axis::Horizontal);
        assert_eq!((q.numerator, q.added_levels), (1, 1));
        let q = quantize_shift(0.33, 6, Axis::Horizontal);
        assert_eq!((q.numerator, q.added_levels), (21, 6));
        assert_eq!(q.pixels(), 0.328125);
        let q = quantize_shift(-0.125, 6, Axis::Vertical);
        assert_eq!((q.numerator, q.added_levels), (-1, 3));
        let q = quantize_shift(0.0, 6, Axis::Vertical);
        assert_eq!((q.numerator, q.added_levels), (0, 0));
        let q = quantize_shift(2.0, 6, Axis::Vertical);
        assert_eq!((q.numerator, q.added_levels, q.trailing_power()), (2, 0, 1));
    }

    #[test]
    fn common_levels_scale_numerators() {
        let (x, y) = common_levels(
            quantize_shift(0.25, 6, Axis::Horizontal),
            quantize_shift(-0.125, 6, Axis::Vertical),
        );
        assert_eq!((x.numerator, x.added_levels), (2, 3));
        assert_eq!((y.numerator, y.added_levels), (-1, 3));
    }

    #[test]
    fn closed_form_matches_interval_weights_for_odd_offsets() {
        for h in 1..4u32 {
            for k in 1..6u32 {
                for s in [-7i64, -3, -1, 1, 3, 5, 9] {
                    for j in 0..4i64 {
                        let half = 1i64 << (k - 1);
                        let mut generic = Profile::new();
                        push_interval(&mut generic, (j << k) + s, half, h, 1.0);
                        push_interval(&mut generic, (j << k) + half + s, half, h, -1.0);
                        let period = 256;
                        assert_eq!(
                            generic.dense(period),
                            odd_shift_detail_profile(j, k, s).dense(period),
                            "h={h} k={k} s={s} j={j}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn k_one_drops_the_centre_terms() {
        let p = odd_shift_detail_profile(3, 1, 5);
        let runs: Vec<_> = p
            .runs()
            .iter()
            .map(|r| (r.start, r.len, r.weight))
            .collect();
        assert_eq!(runs, vec![(5, 1, 1.0), (6, 1, -1.0)]);
    }

    #[test]
    fn periodic_line_wraps() {
        let values = [1.0, 2.0, 3.0, 4.0];
        let prefix = [0.0, 1.0, 3.0, 6.0, 10.0];
        let line = PeriodicLine {
            values: &values,
            prefix: &prefix,
            expand: 1,
        };
        // expanded: 1 1 2 2 3 3 4 4 | 1 1 ...
        assert_eq!(line.range_sum(0, 3), 4.0);
        assert_eq!(line.range_sum(7, 3), 4.0 + 1.0 + 1.0);
        assert_eq!(line.range_sum(-1, 2), 4.0 + 1.0);
        assert_eq!(line.range_sum(-9, 1), 4.0);
    }

    #[test]
    fn axis_mismatch_is_a_contract_error() {
        let d = DifferenceField::new(2, Grid::zeros(4, 4)).unwrap();
        let err = shifted_detail_plane(&d, DyadicShift::new(1, 1, Axis::Vertical), 1, Band::A);
        assert!(matches!(err, Err(Error::Contract(_))));
        let err = shifted_detail_plane(&d, DyadicShift::new(1, 1, Axis::Horizontal), 1, Band::C);
        assert!(matches!(err, Err(Error::Contract(_))));
        let err = shifted_detail_plane(&d, DyadicShift::new(1, 1, Axis::Horizontal), 4, Band::A);
        assert!(matches!(err, Err(Error::Range(_))));
        let err = shifted_detail_plane(&d, DyadicShift::new(1, 1, Axis::Horizontal), 0, Band::A);
        assert!(matches!(err, Err(Error::Range(_))));
    }

    #[test]
    fn lift_replicates_blocks() {
        let d = DifferenceField::new(1, Grid::from_rows(&[&[-3.0, -1.0], &[1.0, 3.0]])).unwrap();
        let lifted = lift_dfield(&d, 1);
        assert_eq!(lifted.level(), 2);
        assert_eq!(
            lifted.values().as_slice(),
            &[
                -3.0, -3.0, -1.0, -1.0, //
                -3.0, -3.0, -1.0, -1.0, //
                1.0, 1.0, 3.0, 3.0, //
                1.0, 1.0, 3.0, 3.0,
            ]
        );
        assert_eq!(lift_dfield(&d, 0), d);
    }
}
