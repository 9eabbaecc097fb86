use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::rms;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseMeta {
    /// Absolute standard deviation of the Gaussian noise.
    pub gaussian_std: f64,
    pub gauss_rel_std: f64,
    pub outlier_frac: f64,
    pub outlier_scale: f64,
    /// Entries that received an outlier, ascending.
    pub outlier_indices: Vec<usize>,
    pub seed: u64,
}

/// Gaussian noise of standard deviation `gauss_rel_std·rms(b_clean)`, then
/// `⌈outlier_frac·m⌉` outliers on distinct entries, each of magnitude
/// `outlier_scale·rms(b_clean)·U(0.5, 1)` with a random sign.
///
/// Returns `(b_noisy, b_outliers, meta)`.
pub fn add_noise_and_outliers(
    b_clean: &[f64],
    gauss_rel_std: f64,
    outlier_frac: f64,
    outlier_scale: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>, NoiseMeta)> {
    if !(gauss_rel_std >= 0.0) || !(0.0..=1.0).contains(&outlier_frac) || !(outlier_scale >= 0.0) {
        return Err(Error::invalid(format!(
            "noise parameters out of range: std {gauss_rel_std}, fraction {outlier_frac}, scale {outlier_scale}"
        )));
    }
    let m = b_clean.len();
    let scale = rms(b_clean);
    let std = gauss_rel_std * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let b_noisy: Vec<f64> = if std > 0.0 {
        let normal = Normal::new(0.0, std).map_err(|e| Error::invalid(e.to_string()))?;
        b_clean.iter().map(|b| b + normal.sample(&mut rng)).collect()
    } else {
        b_clean.to_vec()
    };

    // guard against 1/m·m rounding just above an integer
    let count = ((outlier_frac * m as f64) - 1e-9).ceil().max(0.0) as usize;
    let mut idx = sample(&mut rng, m, count.min(m)).into_vec();
    idx.sort_unstable();
    let mut b_outliers = b_noisy.clone();
    for &i in &idx {
        let mag = outlier_scale * scale * rng.random_range(0.5..=1.0);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        b_outliers[i] += sign * mag;
    }
    let meta = NoiseMeta {
        gaussian_std: std,
        gauss_rel_std,
        outlier_frac,
        outlier_scale,
        outlier_indices: idx,
        seed,
    };
    Ok((b_noisy, b_outliers, meta))
}
