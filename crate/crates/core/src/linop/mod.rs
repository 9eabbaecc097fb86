//! Linear operators, the inner conjugate-gradient solver and spectral-norm
//! estimation.
//!
//! Every solver in this crate touches the forward model only through
//! [`LinearOperator`]: a forward product `A x` and a transpose product
//! `Aᵀ y`. Dense and compressed-row matrices implement it directly; scaled
//! and composed operators (for example `A·W⁻¹` with a wavelet synthesis) wrap
//! other operators without materializing anything.

mod cg;
mod csr;
mod dense;
pub mod mtx;

pub use cg::{cg_solve, CgOutcome, SpdOperator, WeightedNormalOperator};
pub use csr::CsrMatrix;
pub use dense::DenseMatrix;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Result};
use crate::vector::{dot, norm2};

/// A real linear map `ℝ^cols → ℝ^rows` with a transpose.
///
/// The `*_into` methods panic on a length mismatch; the checked
/// [`apply`](LinearOperator::apply) and
/// [`apply_transpose`](LinearOperator::apply_transpose) report it as an error.
pub trait LinearOperator: Send + Sync {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;

    /// `y = A x`, overwriting `y`.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    /// `x = Aᵀ y`, overwriting `x`.
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]);

    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len("apply", self.cols(), x.len())?;
        let mut y = vec![0.0; self.rows()];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    fn apply_transpose(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("apply_transpose", self.rows(), y.len())?;
        let mut x = vec![0.0; self.cols()];
        self.apply_transpose_into(y, &mut x);
        Ok(x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for &T {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        (**self).apply_transpose_into(y, x)
    }
}

impl<T: LinearOperator + ?Sized> LinearOperator for Box<T> {
    fn rows(&self) -> usize {
        (**self).rows()
    }
    fn cols(&self) -> usize {
        (**self).cols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (**self).apply_into(x, y)
    }
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        (**self).apply_transpose_into(y, x)
    }
}

/// The `n × n` identity.
#[derive(Debug, Clone, Copy)]
pub struct Identity(pub usize);

impl LinearOperator for Identity {
    fn rows(&self) -> usize {
        self.0
    }
    fn cols(&self) -> usize {
        self.0
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.0);
        y.copy_from_slice(x);
    }
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        assert_eq!(y.len(), self.0);
        x.copy_from_slice(y);
    }
}

/// `factor · A` without copying `A`.
#[derive(Debug, Clone)]
pub struct Scaled<A> {
    pub inner: A,
    pub factor: f64,
}

impl<A: LinearOperator> LinearOperator for Scaled<A> {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        self.inner.apply_into(x, y);
        y.iter_mut().for_each(|v| *v *= self.factor);
    }
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        self.inner.apply_transpose_into(y, x);
        x.iter_mut().for_each(|v| *v *= self.factor);
    }
}

/// Power iteration on `AᵀA`; returns an estimate of the largest singular
/// value `‖A‖₂`. The start vector is drawn from `seed`, so the result is
/// deterministic. A zero operator yields 0.
pub fn spectral_norm_estimate<A: LinearOperator + ?Sized>(op: &A, iters: usize, seed: u64) -> f64 {
    let iters = iters.max(1);
    let n = op.cols();
    if n == 0 || op.rows() == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|e| *e /= nv);

    let mut av = vec![0.0; op.rows()];
    let mut atav = vec![0.0; n];
    let mut estimate = 0.0;
    for _ in 0..iters {
        op.apply_into(&v, &mut av);
        // Rayleigh quotient vᵀAᵀAv with ‖v‖ = 1
        estimate = dot(&av, &av).sqrt();
        op.apply_transpose_into(&av, &mut atav);
        let norm = norm2(&atav);
        if norm == 0.0 || !norm.is_finite() {
            return if norm == 0.0 { 0.0 } else { estimate };
        }
        for (vi, wi) in v.iter_mut().zip(&atav) {
            *vi = wi / norm;
        }
    }
    op.apply_into(&v, &mut av);
    estimate.max(norm2(&av))
}
