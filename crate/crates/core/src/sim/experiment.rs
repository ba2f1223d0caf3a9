//! End-to-end scenarios: synthesize, degrade, register, score.

use std::sync::Arc;
use std::time::Instant;

use log::warn;
use rayon::prelude::*;

use super::interp::{bicubic_supported, sample_bicubic, shift_linear_periodic};
use super::metrics::{image_metrics, image_metrics_masked, ImageMetrics};
use super::noise::{add_gaussian_noise, add_noise_sd, estimate_noise_sd};
use super::synth::{synthesize_pair, Scene, SceneKind, SynthesisMode};
use crate::error::{Error, Result};
use crate::estimate::{register_similarity, rescale_coeffs, RegistrationConfig, SimilarityParams};
use crate::grid::{Grid, ImageGrid};
use crate::haar::{compute_difference_field, forward_haar, inverse_haar};
use crate::inband::{common_levels, quantize_shift, Axis, InBandShifter};

/// Where a scenario's high-resolution source comes from.
#[derive(Debug, Clone)]
pub enum ImageSource {
    Scene {
        kind: SceneKind,
        seed: u64,
    },
    /// A pre-rendered source at least twice the scenario side.
    Grid(Arc<Grid>),
}

impl ImageSource {
    /// Source for a scenario of side `side`: procedural scenes are rendered
    /// at `3 side`, covering 1.5 times the field of view.
    pub fn render(&self, side: usize) -> Grid {
        match self {
            ImageSource::Scene { kind, seed } => Scene::new(*kind, *seed).render(3 * side, 1.5),
            ImageSource::Grid(g) => (**g).clone(),
        }
    }
}

/// Which images of a pair receive noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseTarget {
    /// Only the sensed image; the reference stays clean.
    #[default]
    Sensed,
    /// Both images, with independent noise fields.
    Both,
}

/// One synthetic registration experiment.
#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub id: String,
    pub source: ImageSource,
    /// Side of the reference image.
    pub side: usize,
    pub truth: SimilarityParams,
    pub mode: SynthesisMode,
    /// Noise level; `None` keeps both images clean.
    pub snr_db: Option<f64>,
    pub noise_target: NoiseTarget,
    /// Largest-magnitude fraction of detail coefficients kept for estimation.
    pub sparsity: Option<f64>,
    pub seed: u64,
    pub config: RegistrationConfig,
    /// Choose `tau` by cross-validation on the noisy reference.
    pub cross_validate_tau: bool,
}

impl ScenarioSpec {
    pub fn new(
        id: impl Into<String>,
        source: ImageSource,
        side: usize,
        truth: SimilarityParams,
    ) -> Self {
        Self {
            id: id.into(),
            source,
            side,
            truth,
            mode: SynthesisMode::Resampled,
            snr_db: None,
            noise_target: NoiseTarget::default(),
            sparsity: None,
            seed: 0,
            config: RegistrationConfig::default(),
            cross_validate_tau: false,
        }
    }
}

/// Outcome of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub scenario: String,
    pub truth: SimilarityParams,
    /// All NaN when the pipeline failed.
    pub estimate: SimilarityParams,
    pub psnr_db: f64,
    pub mse: f64,
    pub ncc: f64,
    pub iterations: usize,
    /// The translation search did not converge, or the run failed.
    pub outlier: bool,
    pub tau: f64,
    pub elapsed_ms: f64,
    pub error: Option<String>,
}

impl ExperimentRecord {
    /// Largest absolute translation error in pixels.
    pub fn shift_error(&self) -> f64 {
        (self.estimate.tx - self.truth.tx)
            .abs()
            .max((self.estimate.ty - self.truth.ty).abs())
    }

    /// Equality ignoring wall time.
    pub fn same_result(&self, other: &ExperimentRecord) -> bool {
        let strip = |r: &ExperimentRecord| ExperimentRecord {
            elapsed_ms: 0.0,
            ..r.clone()
        };
        let (a, b) = (strip(self), strip(other));
        // NaN fields compare by bit pattern.
        format!("{a:?}") == format!("{b:?}")
    }
}

/// Runs every scenario; failures are recorded per scenario.
pub fn run_experiment(specs: &[ScenarioSpec]) -> Result<Vec<ExperimentRecord>> {
    if specs.is_empty() {
        return Err(Error::Contract("no scenarios to run".into()));
    }
    Ok(specs.par_iter().map(run_scenario).collect())
}

pub fn run_scenario(spec: &ScenarioSpec) -> ExperimentRecord {
    let start = Instant::now();
    let mut record = ExperimentRecord {
        scenario: spec.id.clone(),
        truth: spec.truth,
        estimate: SimilarityParams {
            sigma: f64::NAN,
            theta: f64::NAN,
            tx: f64::NAN,
            ty: f64::NAN,
        },
        psnr_db: f64::NAN,
        mse: f64::NAN,
        ncc: f64::NAN,
        iterations: 0,
        outlier: true,
        tau: spec.config.tau,
        elapsed_ms: 0.0,
        error: None,
    };
    if let Err(e) = run_into(spec, &mut record) {
        warn!("scenario {} failed: {e}", spec.id);
        record.error = Some(e.to_string());
    }
    record.elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    record
}

fn run_into(spec: &ScenarioSpec, record: &mut ExperimentRecord) -> Result<()> {
    let source = spec.source.render(spec.side);
    let (clean_i, clean_j) = synthesize_pair(&source, &spec.truth, spec.mode, spec.side)?;
    let (noisy_i, noisy_j) = match spec.snr_db {
        Some(snr) => {
            let j = add_gaussian_noise(&clean_j, snr, spec.seed.wrapping_add(0x9E37_79B9))?;
            let i = match spec.noise_target {
                NoiseTarget::Sensed => clean_i.clone(),
                NoiseTarget::Both => add_gaussian_noise(&clean_i, snr, spec.seed)?,
            };
            (i, j)
        }
        None => (clean_i.clone(), clean_j.clone()),
    };
    let mut cfg = spec.config.clone();
    if spec.sparsity.is_some() {
        cfg.sparsity = spec.sparsity;
    }
    if spec.cross_validate_tau && spec.snr_db.is_some() {
        let sd = estimate_noise_sd(&noisy_j);
        cfg.tau = cross_validate_tau(&noisy_i, sd, &default_tau_candidates(), &cfg, spec.seed)?.tau;
    }
    record.tau = cfg.tau;
    let report = register_similarity(&noisy_i, &noisy_j, &cfg)?;
    record.estimate = report.params;
    record.ncc = report.ncc();
    record.iterations = report.iterations();
    record.outlier = !report.converged();
    let m = evaluate_registration(&clean_i, &clean_j, &report.params, spec.mode, cfg.h_max)?;
    record.psnr_db = m.psnr_db;
    record.mse = m.mse;
    Ok(())
}

/// Fidelity of an estimate on the clean pair.
///
/// In exact mode the reference is shifted in-band by the estimate and compared
/// with the sensed image brought to reference resolution. In resampled mode the
/// sensed image is warped back onto the reference grid with bicubic sampling
/// and compared over the region where that warp has full support, four pixels
/// in from the border.
pub fn evaluate_registration(
    reference: &ImageGrid,
    sensed: &ImageGrid,
    estimate: &SimilarityParams,
    mode: SynthesisMode,
    h_max: u32,
) -> Result<ImageMetrics> {
    match mode {
        SynthesisMode::Exact => {
            let shifted = inband_shifted_image(reference, estimate.tx, estimate.ty, h_max + 2)?;
            let sensed = rescale_coeffs(&forward_haar(sensed), estimate.sigma)
                .and_then(|p| inverse_haar(&p))
                .map_err(|_| {
                    Error::degenerate(
                        "metrics",
                        "sensed image cannot be brought to reference scale",
                    )
                })?;
            if sensed.side() != reference.side() {
                return Err(Error::degenerate(
                    "metrics",
                    "estimated scale does not match image sizes",
                ));
            }
            image_metrics(&shifted, sensed.grid())
        }
        SynthesisMode::Resampled => {
            let n = reference.side();
            let ci = (n as f64 - 1.0) / 2.0;
            let cj = (sensed.side() as f64 - 1.0) / 2.0;
            let r = estimate.theta.to_radians();
            let (c, s) = (r.cos(), r.sin());
            let border = 4.0;
            let mut mask = vec![false; n * n];
            let back = Grid::from_fn(n, n, |i, j| {
                let x = j as f64 + estimate.tx - ci;
                let y = i as f64 + estimate.ty - ci;
                let qx = cj + estimate.sigma * (c * x - s * y);
                let qy = cj + estimate.sigma * (s * x + c * y);
                let inside = (i as f64) >= border
                    && (j as f64) >= border
                    && (i as f64) < n as f64 - border
                    && (j as f64) < n as f64 - border;
                if inside && bicubic_supported(sensed.grid(), qy, qx) {
                    mask[i * n + j] = true;
                }
                sample_bicubic(sensed.grid(), qy, qx)
            });
            image_metrics_masked(reference.grid(), &back, Some(&mask))
        }
    }
}

/// The reference translated by `(tx, ty)`, computed in-band from its details
/// and global mean, on the `1 / 2^h` lattice.
pub fn inband_shifted_image(reference: &ImageGrid, tx: f64, ty: f64, h: u32) -> Result<Grid> {
    if !tx.is_finite() || !ty.is_finite() {
        return Err(Error::degenerate("metrics", "non-finite shift estimate"));
    }
    let pyr = forward_haar(reference);
    let d = compute_difference_field(&pyr, pyr.levels())?;
    let (sx, sy) = common_levels(
        quantize_shift(tx, h, Axis::Horizontal),
        quantize_shift(ty, h, Axis::Vertical),
    );
    let hh = sx.added_levels;
    let field = InBandShifter::new(&d).approximation(sx.numerator, sy.numerator, hh, hh)?;
    Ok(field.map(|v| v + pyr.global_approx()))
}

/// Candidate acceptance levels tried by [`cross_validate_tau`].
pub fn default_tau_candidates() -> Vec<f64> {
    vec![
        1.0, 1.2, 1.4, 1.5, 1.6, 1.7, 1.8, 1.85, 1.9, 1.95, 1.98, 1.99, 1.995, 1.999,
    ]
}

/// Known shifts used to score each candidate `tau`.
const VALIDATION_SHIFTS: [(f64, f64); 3] = [(0.375, -0.625), (-0.25, 0.125), (0.75, 0.5)];

/// Chosen `tau` and the mean validation error of every candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct TauSelection {
    pub tau: f64,
    /// `(tau, mean max-axis error, converged fraction)`.
    pub scores: Vec<(f64, f64, f64)>,
}

/// Picks `tau` by registering validation pairs built from `reference`:
/// each pair is the reference against a known periodic shift of itself with
/// fresh noise of standard deviation `noise_sd`, usually estimated from the
/// sensed image.
///
/// The candidate with the lowest mean error wins; ties go to the candidate
/// that converges more often, then to the larger `tau`.
pub fn cross_validate_tau(
    reference: &ImageGrid,
    noise_sd: f64,
    candidates: &[f64],
    cfg: &RegistrationConfig,
    seed: u64,
) -> Result<TauSelection> {
    if candidates.is_empty() {
        return Err(Error::Contract("no tau candidates".into()));
    }
    let mut pairs = Vec::with_capacity(VALIDATION_SHIFTS.len());
    for (n, &(tx, ty)) in VALIDATION_SHIFTS.iter().enumerate() {
        let shifted = ImageGrid::new(shift_linear_periodic(reference.grid(), tx, ty))?;
        let sensed = if noise_sd > 0.0 {
            add_noise_sd(&shifted, noise_sd, seed.wrapping_add(1000 + n as u64))?
        } else {
            shifted
        };
        pairs.push((tx, ty, sensed));
    }
    let base = RegistrationConfig {
        estimate_scale: false,
        estimate_rotation: false,
        ..cfg.clone()
    };
    let scores: Vec<(f64, f64, f64)> = candidates
        .iter()
        .map(|&tau| {
            let cfg = RegistrationConfig {
                tau,
                ..base.clone()
            };
            let mut err = 0.0;
            let mut converged = 0usize;
            for (tx, ty, sensed) in &pairs {
                match register_similarity(reference, sensed, &cfg) {
                    Ok(r) => {
                        err += (r.params.tx - tx).abs().max((r.params.ty - ty).abs());
                        converged += r.converged() as usize;
                    }
                    Err(_) => err += 2.0,
                }
            }
            let n = pairs.len() as f64;
            (tau, err / n, converged as f64 / n)
        })
        .collect();
    let best = scores
        .iter()
        .copied()
        .reduce(|b, c| {
            let better = c.1 < b.1 || (c.1 == b.1 && (c.2 > b.2 || (c.2 == b.2 && c.0 > b.0)));
            if better {
                c
            } else {
                b
            }
        })
        .expect("non-empty");
    Ok(TauSelection {
        tau: best.0,
        scores,
    })
}

/// `tau x k` grid around a base scenario.
pub fn tau_k_grid(base: &ScenarioSpec, taus: &[f64], ks: &[u32]) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for &tau in taus {
        for &k in ks {
            let mut s = base.clone();
            s.id = format!("{}/tau={tau}/k={k}", base.id);
            s.config.tau = tau;
            s.config.k = Some(k);
            out.push(s);
        }
    }
    out
}

/// `tau x snr` grid around a base scenario.
pub fn noise_grid(base: &ScenarioSpec, taus: &[f64], snrs: &[f64]) -> Vec<ScenarioSpec> {
    let mut out = Vec::new();
    for &tau in taus {
        for &snr in snrs {
            let mut s = base.clone();
            s.id = format!("{}/tau={tau}/snr={snr}", base.id);
            s.config.tau = tau;
            s.snr_db = Some(snr);
            s.cross_validate_tau = false;
            out.push(s);
        }
    }
    out
}

/// One scenario per retained fraction.
pub fn sparsity_grid(base: &ScenarioSpec, fractions: &[f64]) -> Vec<ScenarioSpec> {
    fractions
        .iter()
        .map(|&p| {
            let mut s = base.clone();
            s.id = format!("{}/p={p}", base.id);
            s.sparsity = Some(p);
            s
        })
        .collect()
}

/// Exact shifts of the eight translation rows used for the shift table.
pub fn shift_table_rows() -> Vec<(SceneKind, f64, f64)> {
    vec![
        (SceneKind::Textured, 0.5, 0.5),
        (SceneKind::Textured, 0.25, -0.125),
        (SceneKind::Textured, -0.375, -0.4),
        (SceneKind::Textured, -0.625, 0.75),
        (SceneKind::Shapes, 0.33, -0.33),
        (SceneKind::Shapes, 0.167, 0.5),
        (SceneKind::Shapes, -0.875, -0.33),
        (SceneKind::Shapes, -0.125, 0.67),
    ]
}
