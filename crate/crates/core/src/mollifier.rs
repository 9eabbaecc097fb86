//! Gaussian smoothing of `|t|` and the smoothed functional
//! `H_{p,σ}(x) = ‖Ax − b‖₂² + λ Σ φ_σ(x_k)^p`.
//!
//! Convolving `|·|` with the normal density of standard deviation σ gives
//!
//! ```text
//! φ_σ(t) = t·erf(t / (√2 σ)) + √(2/π) σ exp(−t² / (2σ²))
//! ```
//!
//! which is smooth, even, and satisfies `|t| ≤ φ_σ(t) ≤ |t| + √(2/π) σ`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::functional::{residual, Penalty};
use crate::linop::LinearOperator;
use crate::vector::dot;

/// `√(2/π)`
pub const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// Smallest σ accepted by [`SmoothAbs::new`].
pub const MIN_SIGMA: f64 = 1e-10;

/// How the value at the origin is corrected.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothVariant {
    /// The convolution itself.
    #[default]
    Plain,
    /// `φ_σ(t) − √(2/π)σ`, zero at the origin.
    SubtractConst,
    /// `φ_σ(t) − √(2/π)σ·e^{−t²}`, zero at the origin and exact far from it.
    SubtractGauss,
    /// `t·erf(t/(√2σ))`.
    DropTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothAbs {
    pub sigma: f64,
    pub variant: SmoothVariant,
}

impl SmoothAbs {
    pub fn new(sigma: f64, variant: SmoothVariant) -> Result<Self> {
        if !(sigma >= MIN_SIGMA) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be >= {MIN_SIGMA:e}, got {sigma}")));
        }
        Ok(SmoothAbs { sigma, variant })
    }

    pub fn plain(sigma: f64) -> Self {
        assert!(sigma >= MIN_SIGMA, "sigma {sigma} below {MIN_SIGMA:e}");
        SmoothAbs {
            sigma,
            variant: SmoothVariant::Plain,
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        assert!(sigma >= MIN_SIGMA, "sigma {sigma} below {MIN_SIGMA:e}");
        SmoothAbs { sigma, ..self }
    }
}

pub fn erf(t: f64) -> f64 {
    libm::erf(t)
}

/// `exp(−z)` for `z ≥ 0`, exactly zero once it would underflow.
fn exp_neg(z: f64) -> f64 {
    if z > 745.0 {
        0.0
    } else {
        (-z).exp()
    }
}

/// `exp(−t²/(2σ²))`
fn gauss(t: f64, sigma: f64) -> f64 {
    let u = t / sigma;
    exp_neg(0.5 * u * u)
}

pub fn phi(t: f64, s: &SmoothAbs) -> f64 {
    let sigma = s.sigma;
    let ramp = t * erf(t / (std::f64::consts::SQRT_2 * sigma));
    let bump = SQRT_2_OVER_PI * sigma;
    match s.variant {
        SmoothVariant::Plain => ramp + bump * gauss(t, sigma),
        SmoothVariant::SubtractConst => ramp + bump * (gauss(t, sigma) - 1.0),
        SmoothVariant::SubtractGauss => ramp + bump * (gauss(t, sigma) - exp_neg(t * t)),
        SmoothVariant::DropTerm => ramp,
    }
}

pub fn phi_prime(t: f64, s: &SmoothAbs) -> f64 {
    let sigma = s.sigma;
    let e = erf(t / (std::f64::consts::SQRT_2 * sigma));
    match s.variant {
        SmoothVariant::Plain | SmoothVariant::SubtractConst => e,
        SmoothVariant::SubtractGauss => e + 2.0 * SQRT_2_OVER_PI * sigma * t * exp_neg(t * t),
        SmoothVariant::DropTerm => e + SQRT_2_OVER_PI * t / sigma * gauss(t, sigma),
    }
}

pub fn phi_second(t: f64, s: &SmoothAbs) -> f64 {
    let sigma = s.sigma;
    let base = SQRT_2_OVER_PI / sigma * gauss(t, sigma);
    match s.variant {
        SmoothVariant::Plain | SmoothVariant::SubtractConst => base,
        SmoothVariant::SubtractGauss => {
            base + 2.0 * SQRT_2_OVER_PI * sigma * (1.0 - 2.0 * t * t) * exp_neg(t * t)
        }
        SmoothVariant::DropTerm => {
            let u = t / sigma;
            base * (2.0 - u * u)
        }
    }
}

/// `λ Σ φ(x_k)^p`
pub fn smooth_penalty(x: &[f64], pen: &Penalty, s: &SmoothAbs) -> f64 {
    let p = pen.p;
    let sum: f64 = if p == 1.0 {
        x.iter().map(|v| phi(*v, s)).sum()
    } else {
        x.iter().map(|v| phi(*v, s).powf(p)).sum()
    };
    pen.lambda * sum
}

/// `λ p φ(x_k)^{p−1} φ′(x_k)`, the penalty part of `∇H`.
pub fn smooth_penalty_grad(x: &[f64], pen: &Penalty, s: &SmoothAbs) -> Vec<f64> {
    let p = pen.p;
    let scale = pen.lambda * p;
    x.iter()
        .map(|v| {
            let d = phi_prime(*v, s);
            if p == 1.0 {
                scale * d
            } else {
                scale * phi(*v, s).powf(p - 1.0) * d
            }
        })
        .collect()
}

pub fn eval_h<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    pen: &Penalty,
    s: &SmoothAbs,
) -> Result<f64> {
    let r = residual(a, b, x)?;
    Ok(dot(&r, &r) + smooth_penalty(x, pen, s))
}

/// `∇H = 2Aᵀ(Ax − b) + λ p φ^{p−1} φ′`
pub fn grad_h<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    pen: &Penalty,
    s: &SmoothAbs,
) -> Result<Vec<f64>> {
    let r = residual(a, b, x)?;
    let mut g = a.apply_transpose(&r)?;
    let pg = smooth_penalty_grad(x, pen, s);
    for (gk, pk) in g.iter_mut().zip(&pg) {
        *gk = 2.0 * *gk + pk;
    }
    Ok(g)
}

/// Diagonal `w` of the penalty Hessian `λ p diag(w)`, with
/// `w_j = (p−1) φ^{p−2} φ′² + φ^{p−1} φ″`.
pub fn hessian_penalty_diag(x: &[f64], pen: &Penalty, s: &SmoothAbs) -> Vec<f64> {
    let p = pen.p;
    x.iter()
        .map(|v| {
            let dd = phi_second(*v, s);
            if p == 1.0 {
                return dd;
            }
            let f = phi(*v, s);
            let d = phi_prime(*v, s);
            (p - 1.0) * f.powf(p - 2.0) * d * d + f.powf(p - 1.0) * dd
        })
        .collect()
}

/// `∇²H(x)·dir = 2Aᵀ(A dir) + λ p (w ∘ dir)`; `hess_diag` is
/// [`hessian_penalty_diag`] at the expansion point.
pub fn apply_hessian_with_diag<A: LinearOperator + ?Sized>(
    a: &A,
    hess_diag: &[f64],
    lambda_p: f64,
    dir: &[f64],
) -> Result<Vec<f64>> {
    check_len("apply_hessian diagonal", dir.len(), hess_diag.len())?;
    let ad = a.apply(dir)?;
    let mut out = a.apply_transpose(&ad)?;
    for ((o, w), d) in out.iter_mut().zip(hess_diag).zip(dir) {
        *o = 2.0 * *o + lambda_p * w * d;
    }
    Ok(out)
}

pub fn apply_hessian<A: LinearOperator + ?Sized>(
    a: &A,
    x_point: &[f64],
    pen: &Penalty,
    s: &SmoothAbs,
    dir: &[f64],
) -> Result<Vec<f64>> {
    check_len("apply_hessian point", a.cols(), x_point.len())?;
    let w = hessian_penalty_diag(x_point, pen, s);
    apply_hessian_with_diag(a, &w, pen.lambda * pen.p, dir)
}

/// `R_i = l·max(|r_i|, eps_r)^{l−2}`, the residual weights of the
/// generalized data term.
pub fn general_residual_weights(r: &[f64], l: f64, eps_r: f64) -> Vec<f64> {
    if l == 2.0 {
        return vec![2.0; r.len()];
    }
    r.iter()
        .map(|ri| l * ri.abs().max(eps_r).powf(l - 2.0))
        .collect()
}

/// `Aᵀ R (Ax − b) + λ p φ^{p−1} φ′` with `R` from
/// [`general_residual_weights`]. Equal to [`grad_h`] at `l = 2`.
pub fn grad_h_general<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    pen: &Penalty,
    s: &SmoothAbs,
    eps_r: f64,
) -> Result<Vec<f64>> {
    let r = residual(a, b, x)?;
    let rw = general_residual_weights(&r, pen.l, eps_r);
    let weighted: Vec<f64> = r.iter().zip(&rw).map(|(ri, wi)| ri * wi).collect();
    let mut g = a.apply_transpose(&weighted)?;
    let pg = smooth_penalty_grad(x, pen, s);
    for (gk, pk) in g.iter_mut().zip(&pg) {
        *gk += pk;
    }
    Ok(g)
}
