//! Haar analysis and synthesis on power-of-two grids.
//!
//! Normalization is the averaging convention: a parent approximation is the
//! mean of its 2x2 children, and the children are recovered from the parent
//! approximation `A` and the details `a`, `b`, `c` by
//!
//! ```text
//! (even row, even col) = A + a + b + c      (even row, odd col) = A - a + b - c
//! (odd row,  even col) = A + a - b - c      (odd row,  odd col) = A - a - b + c
//! ```
//!
//! so `a` is the left-minus-right (horizontal) difference, `b` is
//! top-minus-bottom (vertical) and `c` is the diagonal one. Under this
//! convention the difference field `D^l = A^l - A^0` follows from the details
//! alone with unit weights, see [`compute_difference_field`].

use crate::error::{Error, Result};
use crate::grid::{Grid, ImageGrid};

/// The three detail planes of one pyramid level.
#[derive(Debug, Clone, PartialEq)]
pub struct DetailLevel {
    /// Horizontal detail.
    pub a: Grid,
    /// Vertical detail.
    pub b: Grid,
    /// Diagonal detail.
    pub c: Grid,
}

impl DetailLevel {
    pub fn zeros(side: usize) -> Self {
        Self {
            a: Grid::zeros(side, side),
            b: Grid::zeros(side, side),
            c: Grid::zeros(side, side),
        }
    }

    pub fn side(&self) -> usize {
        self.a.rows()
    }

    pub fn planes(&self) -> [&Grid; 3] {
        [&self.a, &self.b, &self.c]
    }

    pub fn planes_mut(&mut self) -> [&mut Grid; 3] {
        [&mut self.a, &mut self.b, &mut self.c]
    }
}

/// Global approximation plus detail planes for levels `0..N`.
///
/// Level `l` holds `2^l x 2^l` planes; level `N - 1` is the finest.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarPyramid {
    global_approx: f64,
    details: Vec<DetailLevel>,
}

impl HaarPyramid {
    pub fn from_parts(global_approx: f64, details: Vec<DetailLevel>) -> Result<Self> {
        if details.is_empty() {
            return Err(Error::Dimension("pyramid needs at least one level".into()));
        }
        for (l, level) in details.iter().enumerate() {
            let side = 1usize << l;
            for plane in level.planes() {
                if plane.rows() != side || plane.cols() != side {
                    return Err(Error::Dimension(format!(
                        "level {l} plane is {}x{}, expected {side}x{side}",
                        plane.rows(),
                        plane.cols()
                    )));
                }
            }
        }
        Ok(Self {
            global_approx,
            details,
        })
    }

    /// Number of detail levels `N`; the synthesized image is `2^N` wide.
    pub fn levels(&self) -> u32 {
        self.details.len() as u32
    }

    pub fn side(&self) -> usize {
        1 << self.details.len()
    }

    pub fn global_approx(&self) -> f64 {
        self.global_approx
    }

    pub fn set_global_approx(&mut self, value: f64) {
        self.global_approx = value;
    }

    pub fn level(&self, l: u32) -> &DetailLevel {
        &self.details[l as usize]
    }

    pub fn level_mut(&mut self, l: u32) -> &mut DetailLevel {
        &mut self.details[l as usize]
    }

    pub fn finest(&self) -> &DetailLevel {
        self.details.last().expect("non-empty pyramid")
    }

    pub fn details(&self) -> &[DetailLevel] {
        &self.details
    }

    pub fn into_parts(self) -> (f64, Vec<DetailLevel>) {
        (self.global_approx, self.details)
    }

    /// Total count of detail coefficients, `4^N - 1`.
    pub fn detail_count(&self) -> usize {
        self.details.iter().map(|d| 3 * d.side() * d.side()).sum()
    }

    /// Visits every detail coefficient in a fixed order (level, plane, row-major).
    pub fn for_each_detail(&self, mut f: impl FnMut(f64)) {
        for level in &self.details {
            for plane in level.planes() {
                plane.as_slice().iter().for_each(|&v| f(v));
            }
        }
    }

    pub fn for_each_detail_mut(&mut self, mut f: impl FnMut(&mut f64)) {
        for level in &mut self.details {
            for plane in level.planes_mut() {
                plane.as_mut_slice().iter_mut().for_each(&mut f);
            }
        }
    }

    /// Coefficient-wise `alpha * self + beta * other`.
    pub fn linear_combination(&self, alpha: f64, other: &HaarPyramid, beta: f64) -> Result<Self> {
        if self.levels() != other.levels() {
            return Err(Error::Dimension("pyramids differ in level count".into()));
        }
        let details = self
            .details
            .iter()
            .zip(&other.details)
            .map(|(x, y)| {
                let mix = |p: &Grid, q: &Grid| {
                    let data = p
                        .as_slice()
                        .iter()
                        .zip(q.as_slice())
                        .map(|(u, v)| alpha * u + beta * v)
                        .collect();
                    Grid::from_vec(p.rows(), p.cols(), data).expect("same shape")
                };
                DetailLevel {
                    a: mix(&x.a, &y.a),
                    b: mix(&x.b, &y.b),
                    c: mix(&x.c, &y.c),
                }
            })
            .collect();
        Ok(Self {
            global_approx: alpha * self.global_approx + beta * other.global_approx,
            details,
        })
    }
}

/// Full Haar analysis of a `2^N x 2^N` image into `N` detail levels.
pub fn forward_haar(img: &ImageGrid) -> HaarPyramid {
    let n = img.levels() as usize;
    let mut details = vec![DetailLevel::zeros(1); n];
    let mut approx = img.grid().clone();
    for l in (0..n).rev() {
        let side = 1usize << l;
        let mut parent = Grid::zeros(side, side);
        let mut level = DetailLevel::zeros(side);
        for i in 0..side {
            for j in 0..side {
                let p00 = approx[(2 * i, 2 * j)];
                let p01 = approx[(2 * i, 2 * j + 1)];
                let p10 = approx[(2 * i + 1, 2 * j)];
                let p11 = approx[(2 * i + 1, 2 * j + 1)];
                parent[(i, j)] = (p00 + p01 + p10 + p11) / 4.0;
                level.a[(i, j)] = (p00 - p01 + p10 - p11) / 4.0;
                level.b[(i, j)] = (p00 + p01 - p10 - p11) / 4.0;
                level.c[(i, j)] = (p00 - p01 - p10 + p11) / 4.0;
            }
        }
        details[l] = level;
        approx = parent;
    }
    HaarPyramid {
        global_approx: approx[(0, 0)],
        details,
    }
}

/// Exact synthesis of the image encoded by `pyr`.
pub fn inverse_haar(pyr: &HaarPyramid) -> Result<ImageGrid> {
    let mut approx = Grid::filled(1, 1, pyr.global_approx);
    for (l, level) in pyr.details.iter().enumerate() {
        let side = 1usize << l;
        if level.side() != side {
            return Err(Error::Dimension(format!("malformed level {l}")));
        }
        let mut child = Grid::zeros(2 * side, 2 * side);
        for i in 0..side {
            for j in 0..side {
                let p = approx[(i, j)];
                let (a, b, c) = (level.a[(i, j)], level.b[(i, j)], level.c[(i, j)]);
                child[(2 * i, 2 * j)] = p + a + b + c;
                child[(2 * i, 2 * j + 1)] = p - a + b - c;
                child[(2 * i + 1, 2 * j)] = p + a - b - c;
                child[(2 * i + 1, 2 * j + 1)] = p - a - b + c;
            }
        }
        approx = child;
    }
    ImageGrid::new(approx)
}

/// `D^l = A^l - A^0_{0,0}` at one level, obtained from details only.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceField {
    level: u32,
    values: Grid,
}

impl DifferenceField {
    pub fn new(level: u32, values: Grid) -> Result<Self> {
        let side = 1usize << level;
        if values.rows() != side || values.cols() != side {
            return Err(Error::Dimension(format!(
                "difference field at level {level} must be {side}x{side}"
            )));
        }
        Ok(Self { level, values })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn side(&self) -> usize {
        self.values.rows()
    }

    pub fn values(&self) -> &Grid {
        &self.values
    }

    pub fn into_values(self) -> Grid {
        self.values
    }
}

/// Difference field at `level` (0..=N) via the parent recursion
/// `D^l = D^{l-1} + {X, Y, Z, W}` where X..W are signed sums of the
/// level `l-1` details. Level `N` is the full-resolution field.
pub fn compute_difference_field(pyr: &HaarPyramid, level: u32) -> Result<DifferenceField> {
    if level > pyr.levels() {
        return Err(Error::Range(format!(
            "difference level {level} exceeds pyramid depth {}",
            pyr.levels()
        )));
    }
    let mut d = Grid::zeros(1, 1);
    for l in 1..=level as usize {
        let parent = &pyr.details[l - 1];
        let side = 1usize << l;
        let mut next = Grid::zeros(side, side);
        for i in 0..side {
            for j in 0..side {
                let (pi, pj) = (i / 2, j / 2);
                let (a, b, c) = (parent.a[(pi, pj)], parent.b[(pi, pj)], parent.c[(pi, pj)]);
                let step = match (i % 2, j % 2) {
                    (0, 0) => a + b + c,  // X
                    (0, _) => -a + b - c, // Y
                    (_, 0) => a - b - c,  // Z
                    _ => -a - b + c,      // W
                };
                next[(i, j)] = d[(pi, pj)] + step;
            }
        }
        d = next;
    }
    DifferenceField::new(level, d)
}
