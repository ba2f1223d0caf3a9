//! Recovery of similarity parameters from Haar coefficients.
//!
//! The model maps a reference point `p` to a sensed point `q = S R T p`:
//! translate by `t`, rotate by `theta` about the image centre, then scale by
//! `sigma`. Rotation, scale and translation are estimated one after another
//! by [`register_similarity`].

mod pipeline;
mod rotation;
mod scale;
mod translation;

pub use pipeline::{
    auto_reduction_level, register_similarity, RegistrationConfig, RegistrationReport,
};
pub use rotation::{
    estimate_rotation_initial, refine_rotation, rotate_coeff_planes,
    rotate_coeff_planes_with_support, rotation_candidates, wavelet_slope_histogram,
    RotationRefinement, SlopeHistogram, SlopeWeighting,
};
pub use scale::{
    estimate_scale, mean_curvature_radius, rescale_coeffs, rescale_to_levels, ScaleEstimate,
};
pub use translation::{
    estimate_translation_bnb, ncc_score, ncc_score_masked, BnbConfig, BnbState, SensedPlanes,
    Termination, TranslationEstimate,
};

/// Scale, rotation (degrees) and translation (reference pixels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParams {
    pub sigma: f64,
    pub theta: f64,
    pub tx: f64,
    pub ty: f64,
}

impl SimilarityParams {
    pub fn new(sigma: f64, theta: f64, tx: f64, ty: f64) -> Self {
        Self {
            sigma,
            theta: normalize_angle(theta),
            tx,
            ty,
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self::new(1.0, 0.0, tx, ty)
    }
}

impl Default for SimilarityParams {
    fn default() -> Self {
        Self::identity()
    }
}

/// Maps an angle in degrees into `(-180, 180]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}
