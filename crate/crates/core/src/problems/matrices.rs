use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linop::DenseMatrix;

/// `A = U Σ Vᵀ` of size `m × n` with `k = min(m, n)` singular values spaced
/// geometrically from `10^exp_hi` down to `10^exp_lo`. `U` and `V` are the
/// orthonormal QR factors of seeded Gaussian matrices.
pub fn logspace_matrix(m: usize, n: usize, exp_hi: f64, exp_lo: f64, seed: u64) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("logspace_matrix needs m, n >= 1"));
    }
    let k = m.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gaussian = |rows: usize| -> DMatrix<f64> {
        DMatrix::from_fn(rows, k, |_, _| StandardNormal.sample(&mut rng))
    };
    let u = gaussian(m).qr().q();
    let v = gaussian(n).qr().q();
    let sv: Vec<f64> = (0..k)
        .map(|i| {
            let t = if k == 1 { 0.0 } else { i as f64 / (k - 1) as f64 };
            10f64.powf(exp_hi + (exp_lo - exp_hi) * t)
        })
        .collect();
    let mut us = u;
    for (j, s) in sv.iter().enumerate() {
        us.column_mut(j).scale_mut(*s);
    }
    let a = us * v.transpose();
    Ok(DenseMatrix::from_fn(m, n, |i, j| a[(i, j)]))
}

/// Length-`n` vector with `k` nonzeros at distinct random positions, each
/// drawn from `N(0, 1)`.
pub fn sparse_spikes(n: usize, k: usize, seed: u64) -> Result<Vec<f64>> {
    if k > n {
        return Err(Error::invalid(format!("cannot place {k} spikes in length {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; n];
    for i in sample(&mut rng, n, k) {
        x[i] = StandardNormal.sample(&mut rng);
    }
    Ok(x)
}
