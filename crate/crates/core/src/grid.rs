//! Dense row-major grids of `f64`.
//!
//! [`Grid`] is the general container used for images of arbitrary size and
//! for coefficient planes. [`ImageGrid`] wraps a grid that is square with a
//! power-of-two side, which is what the Haar machinery requires.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major 2D grid. Index `(i, j)` is (row, column).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a grid from nested rows; panics on ragged input (test helper).
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Value at `(i, j)` with both indices wrapped into range.
    #[inline]
    pub fn get_wrapped(&self, i: i64, j: i64) -> f64 {
        let r = i.rem_euclid(self.rows as i64) as usize;
        let c = j.rem_euclid(self.cols as i64) as usize;
        self.data[r * self.cols + c]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Grid {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn max_abs_diff(&self, other: &Grid) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of the `rows x cols` window whose top-left corner is `(top, left)`.
    pub fn crop(&self, top: usize, left: usize, rows: usize, cols: usize) -> Result<Grid> {
        if top + rows > self.rows || left + cols > self.cols {
            return Err(Error::Dimension(format!(
                "crop {rows}x{cols} at ({top},{left}) exceeds {}x{}",
                self.rows, self.cols
            )));
        }
        Ok(Grid::from_fn(rows, cols, |i, j| self[(top + i, left + j)]))
    }

    /// Circular shift: output `(i, j)` takes input `(i - di, j - dj)`.
    pub fn roll(&self, di: i64, dj: i64) -> Grid {
        Grid::from_fn(self.rows, self.cols, |i, j| {
            self.get_wrapped(i as i64 - di, j as i64 - dj)
        })
    }
}

impl Index<(usize, usize)> for Grid {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Grid {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Square grayscale image whose side is `2^N` with `N >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    grid: Grid,
    levels: u32,
}

impl ImageGrid {
    pub fn new(grid: Grid) -> Result<Self> {
        if !grid.is_square() {
            return Err(Error::Dimension(format!(
                "image must be square, got {}x{}",
                grid.rows(),
                grid.cols()
            )));
        }
        let side = grid.rows();
        if side < 2 || !side.is_power_of_two() {
            return Err(Error::Dimension(format!(
                "image side must be a power of two >= 2, got {side}"
            )));
        }
        if !grid.is_finite() {
            return Err(Error::Dimension("image contains non-finite values".into()));
        }
        Ok(Self {
            levels: side.trailing_zeros(),
            grid,
        })
    }

    pub fn from_fn(side: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(Grid::from_fn(side, side, f))
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.grid.rows()
    }

    /// `N` such that the side is `2^N`.
    #[inline]
    pub fn levels(&self) -> u32 {
        self.levels
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn into_grid(self) -> Grid {
        self.grid
    }
}

impl Index<(usize, usize)> for ImageGrid {
    type Output = f64;

    #[inline]
    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.grid[idx]
    }
}

/// Centered crop of the largest `2^N x 2^N` square that fits in `img`.
pub fn extract_pow2_subregion(img: &Grid) -> Result<ImageGrid> {
    let (top, left, side) = pow2_subregion_window(img.rows(), img.cols())?;
    ImageGrid::new(img.crop(top, left, side, side)?)
}

/// `(top, left, side)` of the window chosen by [`extract_pow2_subregion`].
pub fn pow2_subregion_window(rows: usize, cols: usize) -> Result<(usize, usize, usize)> {
    let min_dim = rows.min(cols);
    if min_dim < 2 {
        return Err(Error::Dimension(format!(
            "cannot extract a power-of-two region from a {rows}x{cols} grid"
        )));
    }
    let side = 1usize << (usize::BITS - 1 - min_dim.leading_zeros());
    Ok(((rows - side) / 2, (cols - side) / 2, side))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subregion_sizes() {
        assert_eq!(pow2_subregion_window(300, 400).unwrap(), (22, 72, 256));
        assert_eq!(pow2_subregion_window(256, 256).unwrap(), (0, 0, 256));
        assert_eq!(pow2_subregion_window(257, 512).unwrap(), (0, 128, 256));
        assert!(pow2_subregion_window(1, 512).is_err());
        assert!(pow2_subregion_window(0, 0).is_err());
    }

    #[test]
    fn subregion_identity_for_pow2() {
        let g = Grid::from_fn(16, 16, |i, j| (i * 16 + j) as f64);
        let img = extract_pow2_subregion(&g).unwrap();
        assert_eq!(img.grid(), &g);
    }

    #[test]
    fn subregion_crop_content() {
        let g = Grid::from_fn(257, 512, |i, j| (i * 1000 + j) as f64);
        let img = extract_pow2_subregion(&g).unwrap();
        assert_eq!(img.side(), 256);
        assert_eq!(img[(0, 0)], 128.0);
        assert_eq!(img[(255, 255)], (255 * 1000 + 383) as f64);
    }

    #[test]
    fn image_grid_rejects_bad_shapes() {
        assert!(ImageGrid::new(Grid::zeros(6, 6)).is_err());
        assert!(ImageGrid::new(Grid::zeros(4, 8)).is_err());
        assert!(ImageGrid::new(Grid::zeros(1, 1)).is_err());
        assert!(ImageGrid::new(Grid::filled(2, 2, f64::NAN)).is_err());
        assert_eq!(ImageGrid::new(Grid::zeros(8, 8)).unwrap().levels(), 3);
    }

    #[test]
    fn roll_moves_content_forward() {
        let g = Grid::from_rows(&[&[1.0, 2.0, 3.0, 4.0]]);
        assert_eq!(g.roll(0, 1).as_slice(), &[4.0, 1.0, 2.0, 3.0]);
        assert_eq!(g.roll(0, -1).as_slice(), &[2.0, 3.0, 4.0, 1.0]);
    }
}
