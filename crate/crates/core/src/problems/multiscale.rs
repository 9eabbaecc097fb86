use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vector::norm_inf;

/// Piecewise-constant blocks plus Gaussian bumps at a coarse and a fine
/// scale, scaled to unit max-norm. `length` must be a power of two.
pub fn multiscale_model(length: usize, seed: u64) -> Result<Vec<f64>> {
    if length < 16 || !length.is_power_of_two() {
        return Err(Error::invalid(format!(
            "multiscale model needs a power-of-two length >= 16, got {length}"
        )));
    }
    let n = length as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; length];

    let jumps = 4;
    let mut cuts: Vec<usize> = (0..jumps).map(|_| rng.random_range(length / 16..length - length / 16)).collect();
    cuts.sort_unstable();
    let mut level = rng.random_range(-1.0..1.0);
    let mut next = cuts.iter().peekable();
    for (i, v) in x.iter_mut().enumerate() {
        while next.peek().is_some_and(|&&c| c <= i) {
            next.next();
            level = rng.random_range(-1.0..1.0);
        }
        *v = level;
    }

    for (count, width) in [(2, n / 24.0), (4, n / 256.0)] {
        for _ in 0..count {
            let centre = rng.random_range(0.1 * n..0.9 * n);
            let amp = rng.random_range(0.5..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            for (i, v) in x.iter_mut().enumerate() {
                let z = (i as f64 - centre) / width;
                *v += amp * (-0.5 * z * z).exp();
            }
        }
    }

    let peak = norm_inf(&x);
    if peak > 0.0 {
        x.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(x)
}
