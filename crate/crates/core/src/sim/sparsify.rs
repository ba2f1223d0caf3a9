//! Retaining a fraction of detail coefficients.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::haar::HaarPyramid;
use crate::threshold::{fraction_count, keep_largest, mask_from_flat, SparseMask};

/// Which coefficients survive sparsification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SparsifyMode {
    #[default]
    Largest,
    /// A uniformly random subset drawn with this seed.
    Random(u64),
}

/// Keeps `ceil(p * detail_count)` detail coefficients and zeroes the rest.
pub fn sparsify_pyramid(
    pyr: &HaarPyramid,
    p: f64,
    mode: SparsifyMode,
) -> Result<(HaarPyramid, SparseMask)> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Contract(format!(
            "sparsity fraction {p} outside (0, 1]"
        )));
    }
    let total = pyr.detail_count();
    let count = fraction_count(p, total);
    Ok(match mode {
        SparsifyMode::Largest => keep_largest(pyr, count),
        SparsifyMode::Random(seed) => {
            let mut order: Vec<usize> = (0..total).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut keep = vec![false; total];
            for &i in &order[..count] {
                keep[i] = true;
            }
            mask_from_flat(pyr, &keep)
        }
    })
}
