//! The target functional `F_{l,p}(x) = ‖Ax − b‖_l^l + λ‖x‖_p^p` and the
//! sparsification operators applied to iterates.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linop::LinearOperator;

/// Regularization weight and the two exponents of `F_{l,p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Penalty {
    pub lambda: f64,
    /// Residual exponent.
    pub l: f64,
    /// Solution exponent.
    pub p: f64,
    /// Admit exponents in (0, 1). The functional is then non-convex and the
    /// solvers may stop at a local minimum.
    #[serde(default)]
    pub allow_nonconvex: bool,
}

impl Penalty {
    pub fn new(lambda: f64, l: f64, p: f64) -> Result<Self> {
        let pen = Penalty {
            lambda,
            l,
            p,
            allow_nonconvex: false,
        };
        pen.validate()?;
        Ok(pen)
    }

    pub fn nonconvex(lambda: f64, l: f64, p: f64) -> Result<Self> {
        let pen = Penalty {
            lambda,
            l,
            p,
            allow_nonconvex: true,
        };
        pen.validate()?;
        Ok(pen)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        let lo = if self.allow_nonconvex { 0.0 } else { 1.0 };
        for (name, v) in [("l", self.l), ("p", self.p)] {
            let ok = if self.allow_nonconvex {
                v > lo && v <= 2.0
            } else {
                (lo..=2.0).contains(&v)
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "{name} = {v} outside the admitted range{}",
                    if self.allow_nonconvex {
                        " (0, 2]"
                    } else {
                        " [1, 2]; values below 1 need allow_nonconvex"
                    }
                )));
            }
        }
        Ok(())
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Penalty { lambda, ..self }
    }
}

/// `Σ |x_k|^p`, the p-th power of the p-norm.
pub fn lp_power_norm(x: &[f64], p: f64) -> f64 {
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum();
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    x.iter().map(|v| v.abs().powf(p)).sum()
}

/// `(Σ |x_k|^p)^{1/p}`.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    lp_power_norm(x, p).powf(1.0 / p)
}

/// `A x − b`.
pub fn residual<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check_len("residual b", a.rows(), b.len())?;
    let mut r = a.apply(x)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    Ok(r)
}

/// Exact, unsmoothed `F_{l,p}(x)`.
pub fn eval_flp<A: LinearOperator + ?Sized>(a: &A, b: &[f64], x: &[f64], pen: &Penalty) -> Result<f64> {
    let r = residual(a, b, x)?;
    Ok(flp_from_residual(&r, x, pen))
}

pub(crate) fn flp_from_residual(r: &[f64], x: &[f64], pen: &Penalty) -> f64 {
    let penalty = if pen.lambda == 0.0 {
        0.0
    } else {
        pen.lambda * lp_power_norm(x, pen.p)
    };
    lp_power_norm(r, pen.l) + penalty
}

/// `𝕊_τ(x)_k = sgn(x_k)·max(|x_k| − τ, 0)`; `|x_k| = τ` maps to 0.
pub fn soft_threshold(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter().map(|&v| soft_threshold_scalar(v, tau)).collect()
}

#[inline]
pub fn soft_threshold_scalar(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Keeps `x_k` when `|x_k| > τ`, zero otherwise.
pub fn hard_threshold(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| if v.abs() > tau { v } else { 0.0 })
        .collect()
}

/// Zeroes the components of `x` whose optimality residual
/// `v = Aᵀ(b − A x)` satisfies `|v_k| ≤ λ/2`.
///
/// The `λ/2` matches a squared-ℓ2 data term, whose gradient carries a factor 2.
pub fn optimality_prune<A: LinearOperator + ?Sized>(
    x: &[f64],
    a: &A,
    b: &[f64],
    lambda: f64,
) -> Result<Vec<f64>> {
    let r = residual(a, b, x)?;
    let mut v = a.apply_transpose(&r)?;
    // v currently holds Aᵀ(Ax − b); only |v| matters.
    v.iter_mut().for_each(|e| *e = e.abs());
    Ok(prune_by_magnitude(x, &v, lambda / 2.0))
}

pub(crate) fn prune_by_magnitude(x: &[f64], abs_v: &[f64], cut: f64) -> Vec<f64> {
    x.iter()
        .zip(abs_v)
        .map(|(&xi, &vi)| if vi <= cut { 0.0 } else { xi })
        .collect()
}
