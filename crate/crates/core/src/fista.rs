//! Soft-thresholded Landweber iteration (ISTA) and its accelerated variant
//! FISTA for `F̃₁(x) = ‖Ax − b‖₂² + λ‖x‖₁`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::functional::{residual, soft_threshold_scalar, Penalty};
use crate::linop::{spectral_norm_estimate, LinearOperator};
use crate::trace::{SolveTrace, TraceRecord};
use crate::vector::{dot, nnz};
use crate::SolveOutput;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FistaConfig {
    pub lambda: f64,
    pub iters: usize,
    /// Multiplies the step `1/L`; values above 1 void the convergence
    /// guarantee.
    pub step_scale: f64,
    /// Lipschitz constant `L = 2‖A‖₂²` of the data gradient. Estimated by
    /// power iteration when absent.
    pub lipschitz: Option<f64>,
}

impl Default for FistaConfig {
    fn default() -> Self {
        FistaConfig {
            lambda: 1.0,
            iters: 100,
            step_scale: 1.0,
            lipschitz: None,
        }
    }
}

impl FistaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !(self.step_scale > 0.0) {
            return Err(Error::invalid("step_scale must be > 0"));
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::invalid(format!("lipschitz must be > 0, got {l}")));
            }
        }
        Ok(())
    }

    pub fn penalty(&self) -> Penalty {
        Penalty {
            lambda: self.lambda,
            l: 2.0,
            p: 1.0,
            allow_nonconvex: false,
        }
    }

    /// `L` as configured, or `2‖A‖₂²` from power iteration.
    pub fn lipschitz_estimate<A: LinearOperator + ?Sized>(&self, a: &A) -> f64 {
        self.lipschitz.unwrap_or_else(|| {
            let s = spectral_norm_estimate(a, 200, 0x5eed) * (1.0 + 1e-6);
            2.0 * s * s
        })
    }

    /// The step actually taken, `step_scale / L`.
    pub fn step<A: LinearOperator + ?Sized>(&self, a: &A) -> f64 {
        let l = self.lipschitz_estimate(a);
        if l > 0.0 {
            self.step_scale / l
        } else {
            self.step_scale
        }
    }
}

/// `𝕊_{λ·step}(x − step·2Aᵀ(Ax − b))`
pub fn ista_step<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    lambda: f64,
    step: f64,
) -> Result<Vec<f64>> {
    let r = residual(a, b, x)?;
    let g = a.apply_transpose(&r)?;
    Ok(prox_step(x, &g, lambda, step))
}

fn prox_step(x: &[f64], data_grad_half: &[f64], lambda: f64, step: f64) -> Vec<f64> {
    x.iter()
        .zip(data_grad_half)
        .map(|(xk, gk)| soft_threshold_scalar(xk - 2.0 * step * gk, lambda * step))
        .collect()
}

fn record(iter: usize, r: &[f64], x: &[f64], lambda: f64) -> Result<TraceRecord> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    let data = dot(r, r);
    let f = data + lambda * l1;
    if !f.is_finite() {
        return Err(Error::NonFinite {
            quantity: "functional value",
            iteration: iter,
        });
    }
    Ok(TraceRecord {
        iter,
        f,
        residual_norm_l: Some(data.sqrt()),
        penalty_norm_p: Some(l1),
        nnz: nnz(x),
        ..Default::default()
    })
}

pub fn ista_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &FistaConfig,
    x0: &[f64],
) -> Result<SolveOutput> {
    cfg.validate()?;
    check_len("ista_solve b", a.rows(), b.len())?;
    check_len("ista_solve x0", a.cols(), x0.len())?;
    let step = cfg.step(a);
    let mut x = x0.to_vec();
    let mut r = residual(a, b, &x)?;
    let mut g = vec![0.0; a.cols()];
    let mut trace = SolveTrace::default();
    for k in 0..cfg.iters {
        a.apply_transpose_into(&r, &mut g);
        x = prox_step(&x, &g, cfg.lambda, step);
        r = residual(a, b, &x)?;
        trace.push(record(k, &r, &x, cfg.lambda)?);
    }
    Ok(SolveOutput { x, trace })
}

/// FISTA with the momentum sequence `t_{k+1} = (1 + √(1 + 4t_k²))/2` and no
/// restarts. Costs one forward and one transpose product per iteration.
pub fn fista_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &FistaConfig,
    x0: &[f64],
) -> Result<SolveOutput> {
    cfg.validate()?;
    check_len("fista_solve b", a.rows(), b.len())?;
    check_len("fista_solve x0", a.cols(), x0.len())?;
    let step = cfg.step(a);

    let mut x = x0.to_vec();
    // residuals Ax − b and Ay − b, updated by linearity
    let mut rx = residual(a, b, &x)?;
    let mut y = x.clone();
    let mut ry = rx.clone();
    let mut t = 1.0f64;
    let mut g = vec![0.0; a.cols()];
    let mut ax_new = vec![0.0; a.rows()];
    let mut trace = SolveTrace::default();

    for k in 0..cfg.iters {
        a.apply_transpose_into(&ry, &mut g);
        let x_new = prox_step(&y, &g, cfg.lambda, step);
        a.apply_into(&x_new, &mut ax_new);
        let rx_new: Vec<f64> = ax_new.iter().zip(b).map(|(v, bi)| v - bi).collect();
        trace.push(record(k, &rx_new, &x_new, cfg.lambda)?);

        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let theta = (t - 1.0) / t_new;
        for i in 0..y.len() {
            y[i] = x_new[i] + theta * (x_new[i] - x[i]);
        }
        for i in 0..ry.len() {
            ry[i] = rx_new[i] + theta * (rx_new[i] - rx[i]);
        }
        x = x_new;
        rx = rx_new;
        t = t_new;
    }
    Ok(SolveOutput { x, trace })
}
