//! Spatial resampling used to synthesize test pairs and to warp results back.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Catmull-Rom cubic convolution kernel (`a = -0.5`).
pub fn catmull_rom(t: f64) -> f64 {
    let t = t.abs();
    if t < 1.0 {
        1.5 * t * t * t - 2.5 * t * t + 1.0
    } else if t < 2.0 {
        -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0
    } else {
        0.0
    }
}

/// Bicubic sample at `(y, x)` with edge replication outside the grid.
pub fn sample_bicubic(g: &Grid, y: f64, x: f64) -> f64 {
    let (iy, ix) = (y.floor(), x.floor());
    let (fy, fx) = (y - iy, x - ix);
    let (iy, ix) = (iy as i64, ix as i64);
    let max_i = g.rows() as i64 - 1;
    let max_j = g.cols() as i64 - 1;
    let wy = [
        catmull_rom(1.0 + fy),
        catmull_rom(fy),
        catmull_rom(1.0 - fy),
        catmull_rom(2.0 - fy),
    ];
    let wx = [
        catmull_rom(1.0 + fx),
        catmull_rom(fx),
        catmull_rom(1.0 - fx),
        catmull_rom(2.0 - fx),
    ];
    let mut acc = 0.0;
    for (m, wym) in wy.iter().enumerate() {
        let r = (iy - 1 + m as i64).clamp(0, max_i) as usize;
        let row = g.row(r);
        let mut s = 0.0;
        for (n, wxn) in wx.iter().enumerate() {
            let c = (ix - 1 + n as i64).clamp(0, max_j) as usize;
            s += wxn * row[c];
        }
        acc += wym * s;
    }
    acc
}

/// True when the bicubic footprint of `(y, x)` lies inside the grid.
pub fn bicubic_supported(g: &Grid, y: f64, x: f64) -> bool {
    y >= 1.0 && x >= 1.0 && y <= g.rows() as f64 - 3.0 && x <= g.cols() as f64 - 3.0
}

/// `rows x cols` grid whose pixel `(i, j)` samples `src` at `map(i, j) = (y, x)`.
pub fn warp(
    src: &Grid,
    rows: usize,
    cols: usize,
    map: impl Fn(usize, usize) -> (f64, f64),
) -> Grid {
    Grid::from_fn(rows, cols, |i, j| {
        let (y, x) = map(i, j);
        sample_bicubic(src, y, x)
    })
}

/// Mean of every `f x f` block.
pub fn block_mean(g: &Grid, f: usize) -> Result<Grid> {
    if f == 0 || g.rows() % f != 0 || g.cols() % f != 0 {
        return Err(Error::Dimension(format!(
            "{}x{} grid cannot be reduced by {f}",
            g.rows(),
            g.cols()
        )));
    }
    let norm = (f * f) as f64;
    Ok(Grid::from_fn(g.rows() / f, g.cols() / f, |i, j| {
        let mut s = 0.0;
        for di in 0..f {
            s += g.row(i * f + di)[j * f..(j + 1) * f].iter().sum::<f64>();
        }
        s / norm
    }))
}

/// Each pixel replicated into an `f x f` block.
pub fn replicate(g: &Grid, f: usize) -> Grid {
    Grid::from_fn(g.rows() * f, g.cols() * f, |i, j| g[(i / f, j / f)])
}

/// Bicubic magnification by an integer factor, pixel centres aligned.
pub fn upsample_bicubic(g: &Grid, f: usize) -> Grid {
    let s = f as f64;
    warp(g, g.rows() * f, g.cols() * f, |i, j| {
        ((i as f64 + 0.5) / s - 0.5, (j as f64 + 0.5) / s - 0.5)
    })
}

/// Periodic translation by `(tx, ty)` with linear interpolation:
/// `out(x) = g(x - t)`.
///
/// For dyadic `t` this equals replicating `g` onto a finer grid, rolling it by
/// an integer and block-averaging back.
pub fn shift_linear_periodic(g: &Grid, tx: f64, ty: f64) -> Grid {
    let shift_rows = |g: &Grid, t: f64| {
        let n = t.floor();
        let f = t - n;
        let n = n as i64;
        Grid::from_fn(g.rows(), g.cols(), |i, j| {
            let i = i as i64;
            (1.0 - f) * g.get_wrapped(i - n, j as i64) + f * g.get_wrapped(i - n - 1, j as i64)
        })
    };
    let shift_cols = |g: &Grid, t: f64| {
        let n = t.floor();
        let f = t - n;
        let n = n as i64;
        Grid::from_fn(g.rows(), g.cols(), |i, j| {
            let j = j as i64;
            (1.0 - f) * g.get_wrapped(i as i64, j - n) + f * g.get_wrapped(i as i64, j - n - 1)
        })
    };
    shift_rows(&shift_cols(g, tx), ty)
}
