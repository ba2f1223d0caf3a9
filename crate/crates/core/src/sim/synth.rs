//! Procedural test scenes and pair synthesis.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::interp::{block_mean, replicate, shift_linear_periodic, upsample_bicubic, warp};
use crate::error::{Error, Result};
use crate::estimate::SimilarityParams;
use crate::grid::{Grid, ImageGrid};

/// Families of procedural scenes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Deserialize, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneKind {
    /// Superposed oriented waves over a few smooth blobs.
    Textured,
    Blobs,
    /// Soft-edged discs and rotated rectangles.
    Shapes,
    /// Nested pentagonal rings, radial roads and fine ground texture,
    /// resembling an aerial view of a large building.
    PentagonLike,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [
        SceneKind::Textured,
        SceneKind::Blobs,
        SceneKind::Shapes,
        SceneKind::PentagonLike,
    ];
}

#[derive(Debug, Clone)]
enum Layer {
    Wave {
        kx: f64,
        ky: f64,
        phase: f64,
        amp: f64,
    },
    Blob {
        x: f64,
        y: f64,
        r: f64,
        amp: f64,
    },
    Disk {
        x: f64,
        y: f64,
        r: f64,
        amp: f64,
    },
    Rect {
        x: f64,
        y: f64,
        hw: f64,
        hh: f64,
        angle: f64,
        amp: f64,
    },
    Ring {
        x: f64,
        y: f64,
        inner: f64,
        outer: f64,
        rot: f64,
        amp: f64,
    },
    Road {
        x: f64,
        y: f64,
        angle: f64,
        width: f64,
        amp: f64,
    },
}

/// Edge softness in scene units; about one pixel of a 512-pixel render.
const SOFT: f64 = 0.002;

fn step(d: f64) -> f64 {
    0.5 * (1.0 - (d / SOFT).tanh())
}

/// Signed distance-like measure to a regular pentagon with apothem `a`.
fn pentagon_sdf(px: f64, py: f64, rot: f64, a: f64) -> f64 {
    (0..5)
        .map(|k| {
            let phi = rot + 2.0 * PI * k as f64 / 5.0;
            px * phi.cos() + py * phi.sin() - a
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

impl Layer {
    fn eval(&self, u: f64, v: f64) -> f64 {
        match *self {
            Layer::Wave { kx, ky, phase, amp } => {
                amp * (2.0 * PI * (kx * u + ky * v) + phase).sin()
            }
            Layer::Blob { x, y, r, amp } => {
                amp * (-((u - x).powi(2) + (v - y).powi(2)) / (2.0 * r * r)).exp()
            }
            Layer::Disk { x, y, r, amp } => amp * step((u - x).hypot(v - y) - r),
            Layer::Rect {
                x,
                y,
                hw,
                hh,
                angle,
                amp,
            } => {
                let (c, s) = (angle.cos(), angle.sin());
                let (dx, dy) = (u - x, v - y);
                let (lx, ly) = (c * dx + s * dy, -s * dx + c * dy);
                amp * step((lx.abs() - hw).max(ly.abs() - hh))
            }
            Layer::Ring {
                x,
                y,
                inner,
                outer,
                rot,
                amp,
            } => {
                let (dx, dy) = (u - x, v - y);
                amp * (step(pentagon_sdf(dx, dy, rot, outer))
                    - step(pentagon_sdf(dx, dy, rot, inner)))
            }
            Layer::Road {
                x,
                y,
                angle,
                width,
                amp,
            } => {
                let d = (-(angle.sin()) * (u - x) + angle.cos() * (v - y)).abs();
                amp * step(d - width)
            }
        }
    }
}

/// A deterministic procedural scene defined on the whole plane; the unit
/// square is the nominal field of view.
#[derive(Debug, Clone)]
pub struct Scene {
    kind: SceneKind,
    layers: Vec<Layer>,
    gain: f64,
}

impl Scene {
    pub fn new(kind: SceneKind, seed: u64) -> Self {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (kind as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut layers = Vec::new();
        let pos = |rng: &mut ChaCha8Rng| (rng.random_range(-0.1..1.1), rng.random_range(-0.1..1.1));
        match kind {
            SceneKind::Textured => {
                for _ in 0..10 {
                    let f: f64 = rng.random_range(2.0..14.0);
                    let dir: f64 = rng.random_range(0.0..PI);
                    layers.push(Layer::Wave {
                        kx: f * dir.cos(),
                        ky: f * dir.sin(),
                        phase: rng.random_range(0.0..2.0 * PI),
                        amp: rng.random_range(0.3..1.0) / f.sqrt(),
                    });
                }
                for _ in 0..6 {
                    let (x, y) = pos(&mut rng);
                    layers.push(Layer::Blob {
                        x,
                        y,
                        r: rng.random_range(0.03..0.12),
                        amp: rng.random_range(-1.0..1.0),
                    });
                }
            }
            SceneKind::Blobs => {
                for _ in 0..40 {
                    let (x, y) = pos(&mut rng);
                    layers.push(Layer::Blob {
                        x,
                        y,
                        r: rng.random_range(0.015..0.1),
                        amp: rng.random_range(-1.0..1.0),
                    });
                }
            }
            SceneKind::Shapes => {
                for i in 0..24 {
                    let (x, y) = pos(&mut rng);
                    let amp = rng.random_range(-0.8..0.8);
                    if i % 2 == 0 {
                        layers.push(Layer::Disk {
                            x,
                            y,
                            r: rng.random_range(0.02..0.12),
                            amp,
                        });
                    } else {
                        layers.push(Layer::Rect {
                            x,
                            y,
                            hw: rng.random_range(0.02..0.15),
                            hh: rng.random_range(0.02..0.1),
                            angle: rng.random_range(0.0..PI),
                            amp,
                        });
                    }
                }
                for _ in 0..3 {
                    let (x, y) = pos(&mut rng);
                    layers.push(Layer::Blob {
                        x,
                        y,
                        r: rng.random_range(0.1..0.3),
                        amp: rng.random_range(-0.5..0.5),
                    });
                }
            }
            SceneKind::PentagonLike => {
                let (cx, cy) = (rng.random_range(0.4..0.6), rng.random_range(0.4..0.6));
                let rot: f64 = rng.random_range(0.0..2.0 * PI / 5.0);
                let mut a = 0.06;
                for ring in 0..5 {
                    let width = 0.03 + 0.01 * (ring % 2) as f64;
                    layers.push(Layer::Ring {
                        x: cx,
                        y: cy,
                        inner: a,
                        outer: a + width,
                        rot,
                        amp: if ring % 2 == 0 { 0.9 } else { 0.55 },
                    });
                    a += width + 0.012;
                }
                for k in 0..5 {
                    layers.push(Layer::Road {
                        x: cx,
                        y: cy,
                        angle: rot + 2.0 * PI * k as f64 / 5.0 + PI / 5.0,
                        width: 0.008,
                        amp: -0.35,
                    });
                }
                for _ in 0..14 {
                    let (x, y) = pos(&mut rng);
                    layers.push(Layer::Rect {
                        x,
                        y,
                        hw: rng.random_range(0.01..0.06),
                        hh: rng.random_range(0.01..0.04),
                        angle: rng.random_range(0.0..PI),
                        amp: rng.random_range(-0.4..0.4),
                    });
                }
                for _ in 0..6 {
                    let f: f64 = rng.random_range(20.0..45.0);
                    let dir: f64 = rng.random_range(0.0..PI);
                    layers.push(Layer::Wave {
                        kx: f * dir.cos(),
                        ky: f * dir.sin(),
                        phase: rng.random_range(0.0..2.0 * PI),
                        amp: 0.06,
                    });
                }
            }
        }
        let total: f64 = layers
            .iter()
            .map(|l| match *l {
                Layer::Wave { amp, .. }
                | Layer::Blob { amp, .. }
                | Layer::Disk { amp, .. }
                | Layer::Rect { amp, .. }
                | Layer::Ring { amp, .. }
                | Layer::Road { amp, .. } => amp.abs(),
            })
            .sum();
        // Keep typical values well inside the 8-bit range.
        let gain = 100.0 / (0.35 * total).max(1e-9);
        Self { kind, layers, gain }
    }

    pub fn kind(&self) -> SceneKind {
        self.kind
    }

    /// Intensity at scene coordinates `(u, v)` (`u` across, `v` down).
    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let s: f64 = self.layers.iter().map(|l| l.eval(u, v)).sum();
        (128.0 + self.gain * s).clamp(0.0, 255.0)
    }

    /// `side x side` render covering `extent` times the unit square, centred on it.
    pub fn render(&self, side: usize, extent: f64) -> Grid {
        let n = side as f64;
        Grid::from_fn(side, side, |i, j| {
            let u = ((j as f64 + 0.5) / n - 0.5) * extent + 0.5;
            let v = ((i as f64 + 0.5) / n - 0.5) * extent + 0.5;
            self.eval(u, v)
        })
    }
}

/// `side x side` render of a scene over the unit square.
pub fn test_image(kind: SceneKind, seed: u64, side: usize) -> Result<ImageGrid> {
    ImageGrid::new(Scene::new(kind, seed).render(side, 1.0))
}

/// How a sensed image is produced from its reference.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Deserialize, serde::Serialize,
)]
#[serde(rename_all = "kebab-case")]
pub enum SynthesisMode {
    /// Bicubic shift and rotation on a double-resolution source, then block averaging.
    #[default]
    Resampled,
    /// Periodic linear-interpolation shift of the reference itself; equal to an
    /// integer shift of the zero-detail upsampled grid for dyadic shifts.
    Exact,
}

fn scale_exponent(sigma: f64) -> Result<i32> {
    let p = sigma.log2();
    if !sigma.is_finite() || sigma <= 0.0 || (p - p.round()).abs() > 1e-12 {
        return Err(Error::Contract(format!(
            "synthesis scale {sigma} is not a power of two"
        )));
    }
    Ok(p.round() as i32)
}

fn apply_scale(j: Grid, p: i32, bicubic: bool) -> Result<Grid> {
    let f = 1usize << p.unsigned_abs();
    match p.cmp(&0) {
        std::cmp::Ordering::Equal => Ok(j),
        std::cmp::Ordering::Less => block_mean(&j, f),
        std::cmp::Ordering::Greater if bicubic => Ok(upsample_bicubic(&j, f)),
        std::cmp::Ordering::Greater => Ok(replicate(&j, f)),
    }
}

/// Reference and sensed images of side `side` (the sensed side is
/// `sigma * side`) following `q = S R T p` about the image centre.
///
/// `hi_res` is a source at twice the working resolution whose centre is the
/// field of view; anything beyond the central `2 side` window is margin that
/// fills in content rotated or shifted into view.
pub fn synthesize_pair(
    hi_res: &Grid,
    params: &SimilarityParams,
    mode: SynthesisMode,
    side: usize,
) -> Result<(ImageGrid, ImageGrid)> {
    let w = 2 * side;
    if hi_res.rows() < w || hi_res.cols() < w {
        return Err(Error::Dimension(format!(
            "source {}x{} is smaller than twice the target side {side}",
            hi_res.rows(),
            hi_res.cols()
        )));
    }
    let p = scale_exponent(params.sigma)?;
    let cy = (hi_res.rows() as f64 - 1.0) / 2.0;
    let cx = (hi_res.cols() as f64 - 1.0) / 2.0;
    let half = (w as f64 - 1.0) / 2.0;
    let reference = warp(hi_res, w, w, |i, j| {
        (cy - half + i as f64, cx - half + j as f64)
    });
    let reference = block_mean(&reference, 2)?;

    let sensed = match mode {
        SynthesisMode::Exact => {
            if params.theta != 0.0 {
                return Err(Error::Contract(
                    "exact synthesis supports translation only".into(),
                ));
            }
            apply_scale(
                shift_linear_periodic(&reference, params.tx, params.ty),
                p,
                false,
            )?
        }
        SynthesisMode::Resampled => {
            let r = params.theta.to_radians();
            let (c, s) = (r.cos(), r.sin());
            let (tx, ty) = (2.0 * params.tx, 2.0 * params.ty);
            let hi = warp(hi_res, w, w, |i, j| {
                let (x, y) = (j as f64 - half, i as f64 - half);
                // Undo the rotation, then the translation.
                let sx = c * x + s * y - tx;
                let sy = -s * x + c * y - ty;
                (cy + sy, cx + sx)
            });
            apply_scale(block_mean(&hi, 2)?, p, true)?
        }
    };
    Ok((ImageGrid::new(reference)?, ImageGrid::new(sensed)?))
}
