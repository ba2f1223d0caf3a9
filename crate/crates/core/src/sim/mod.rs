//! Synthetic experiments: pair synthesis, degradation, metrics and sweeps.

pub mod experiment;
pub mod interp;
pub mod metrics;
pub mod noise;
pub mod sparsify;
pub mod synth;

pub use experiment::{
    cross_validate_tau, default_tau_candidates, evaluate_registration, inband_shifted_image,
    noise_grid, run_experiment, run_scenario, shift_table_rows, sparsity_grid, tau_k_grid,
    ExperimentRecord, ImageSource, NoiseTarget, ScenarioSpec, TauSelection,
};
pub use metrics::{image_metrics, image_metrics_masked, ImageMetrics};
pub use noise::{add_gaussian_noise, estimate_noise_sd, signal_power};
pub use sparsify::{sparsify_pyramid, SparsifyMode};
pub use synth::{synthesize_pair, test_image, Scene, SceneKind, SynthesisMode};
