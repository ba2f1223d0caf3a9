//! Scenario files: TOML with an optional `[defaults]` table and one
//! `[[scenario]]` table per experiment.
//!
//! ```toml
//! [defaults]
//! scene = "textured"
//! side = 256
//! mode = "exact"
//! estimate_scale = false
//! estimate_rotation = false
//!
//! [[scenario]]
//! id = "half"
//! tx = 0.5
//! ty = 0.5
//! ```
//!
//! Every key may appear in either table; scenario values win. `image` names
//! a PGM or PNG source relative to the scenario file and replaces `scene`.

use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::image::read_grid;
use super::{parse_k, parse_threshold};
use crate::error::{Error, Result};
use crate::estimate::{RegistrationConfig, SimilarityParams};
use crate::sim::{ImageSource, NoiseTarget, ScenarioSpec, SceneKind, SynthesisMode};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    id: Option<String>,
    scene: Option<SceneKind>,
    scene_seed: Option<u64>,
    image: Option<String>,
    side: Option<usize>,
    tx: Option<f64>,
    ty: Option<f64>,
    theta: Option<f64>,
    sigma: Option<f64>,
    mode: Option<SynthesisMode>,
    snr_db: Option<f64>,
    noise: Option<String>,
    sparsity: Option<f64>,
    seed: Option<u64>,
    tau: Option<f64>,
    k: Option<toml::Value>,
    h_max: Option<u32>,
    bins: Option<usize>,
    threshold: Option<String>,
    estimate_scale: Option<bool>,
    estimate_rotation: Option<bool>,
    cross_validate_tau: Option<bool>,
    max_iterations: Option<usize>,
}

macro_rules! overlay {
    ($base:expr, $top:expr, $($field:ident),*) => {
        Entry { $($field: $top.$field.clone().or_else(|| $base.$field.clone()),)* }
    };
}

impl Entry {
    fn over(&self, base: &Entry) -> Entry {
        overlay!(
            base,
            self,
            id,
            scene,
            scene_seed,
            image,
            side,
            tx,
            ty,
            theta,
            sigma,
            mode,
            snr_db,
            noise,
            sparsity,
            seed,
            tau,
            k,
            h_max,
            bins,
            threshold,
            estimate_scale,
            estimate_rotation,
            cross_validate_tau,
            max_iterations
        )
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    defaults: Entry,
    #[serde(default)]
    scenario: Vec<Entry>,
}

fn contract(id: &str, msg: impl std::fmt::Display) -> Error {
    Error::Contract(format!("scenario {id}: {msg}"))
}

fn build(e: &Entry, index: usize, dir: &Path) -> Result<ScenarioSpec> {
    let id = e.id.clone().unwrap_or_else(|| format!("s{index}"));
    let side = e.side.unwrap_or(128);
    let truth = SimilarityParams::new(
        e.sigma.unwrap_or(1.0),
        e.theta.unwrap_or(0.0),
        e.tx.unwrap_or(0.0),
        e.ty.unwrap_or(0.0),
    );
    let source = match (&e.image, e.scene) {
        (Some(path), _) => ImageSource::Grid(Arc::new(read_grid(&dir.join(path))?)),
        (None, kind) => ImageSource::Scene {
            kind: kind.unwrap_or(SceneKind::Textured),
            seed: e.scene_seed.unwrap_or(0),
        },
    };
    let mut spec = ScenarioSpec::new(id.clone(), source, side, truth);
    spec.mode = e.mode.unwrap_or_default();
    spec.seed = e.seed.unwrap_or(0);
    if let Some(snr) = e.snr_db {
        if !snr.is_finite() {
            return Err(contract(&id, "snr_db must be finite"));
        }
        spec.snr_db = Some(snr);
    }
    spec.noise_target = match e.noise.as_deref() {
        None | Some("sensed") => NoiseTarget::Sensed,
        Some("both") => NoiseTarget::Both,
        Some(other) => return Err(contract(&id, format!("unknown noise target {other:?}"))),
    };
    if let Some(p) = e.sparsity {
        if !(p > 0.0 && p <= 1.0) {
            return Err(contract(&id, format!("sparsity {p} outside (0, 1]")));
        }
        spec.sparsity = Some(p);
    }
    spec.cross_validate_tau = e.cross_validate_tau.unwrap_or(false);

    let d = RegistrationConfig::default();
    let k = match &e.k {
        None => None,
        Some(toml::Value::Integer(v)) if *v >= 0 => Some(*v as u32),
        Some(toml::Value::String(s)) => parse_k(s)?,
        Some(v) => {
            return Err(contract(
                &id,
                format!("k must be an integer or \"auto\", got {v}"),
            ))
        }
    };
    spec.config = RegistrationConfig {
        tau: e.tau.unwrap_or(d.tau),
        k,
        h_max: e.h_max.unwrap_or(d.h_max),
        bins: e.bins.unwrap_or(d.bins),
        threshold: match &e.threshold {
            Some(s) => parse_threshold(s)?,
            None => d.threshold,
        },
        estimate_scale: e.estimate_scale.unwrap_or(d.estimate_scale),
        estimate_rotation: e.estimate_rotation.unwrap_or(d.estimate_rotation),
        max_iterations: e.max_iterations.unwrap_or(d.max_iterations),
        ..d
    };
    Ok(spec)
}

/// Parses scenario text; relative image paths resolve against `dir`.
pub fn parse_scenarios(text: &str, dir: &Path) -> Result<Vec<ScenarioSpec>> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Format {
        path: dir.to_path_buf(),
        offset: e.span().map_or(0, |s| s.start),
        reason: e.message().to_string(),
    })?;
    file.scenario
        .iter()
        .enumerate()
        .map(|(i, e)| build(&e.over(&file.defaults), i, dir))
        .collect()
}

pub fn read_scenarios(path: &Path) -> Result<Vec<ScenarioSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    parse_scenarios(&text, dir).map_err(|e| match e {
        Error::Format { offset, reason, .. } => Error::Format {
            path: path.to_path_buf(),
            offset,
            reason,
        },
        other => other,
    })
}
