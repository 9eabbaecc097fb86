//! Iteratively reweighted least squares for `F_{l,p}`.
//!
//! Each outer iteration replaces `|x_k|^p` by the weighted quadratic
//! `(p/2)·w_k·x_k²` with `w_k = (x_k² + ε²)^{(p−2)/2}` and `|r_i|^l` by
//! `R̃_i·r_i²` with `R̃_i = max(|r_i|, ε_r)^{l−2}`. Setting the gradient of the
//! reweighted problem to zero gives the SPD system
//!
//! ```text
//! (Aᵀ R̃ A + diag(λ p w / l)) x = Aᵀ R̃ b
//! ```
//!
//! which for `l = 2` is `(AᵀA + DᵀD) x = Aᵀb` with `D_kk = √(λ p w_k / 2)`.
//! A handful of warm-started CG steps per outer iteration is enough.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::functional::{flp_from_residual, lp_norm, residual, Penalty};
use crate::linop::{cg_solve, spectral_norm_estimate, LinearOperator, Scaled, WeightedNormalOperator};
use crate::trace::{SolveTrace, TraceRecord};
use crate::vector::{dist2, dot, nnz};
use crate::SolveOutput;

/// How the smoothing parameter ε of the weights evolves over outer iterations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsMode {
    /// `ε_{n+1} = min(ε_n, (‖x^{n+1} − xⁿ‖₂ + α)^{1/2})`
    Distance,
    /// `ε_{n+1} = min(ε_n, |G_{n−1} − G_n|^{γ/2} + α^{n+1})` with `G_n` the
    /// surrogate at iteration n.
    SurrogateGap,
    /// `ε_{n+1} = α ε_n`
    Geometric,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IrlsConfig {
    pub pen: Penalty,
    pub eps0: f64,
    pub eps_mode: EpsMode,
    pub alpha: f64,
    /// Exponent of the surrogate-gap schedule; ignored in other modes.
    pub gamma: f64,
    /// Floor applied to `|r_i|` before raising it to `l − 2`. Held fixed.
    pub eps_residual: f64,
    pub outer_iters: usize,
    pub inner_iters: usize,
    pub inner_tol: f64,
    pub eps_floor: f64,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        IrlsConfig {
            pen: Penalty {
                lambda: 1.0,
                l: 2.0,
                p: 1.0,
                allow_nonconvex: false,
            },
            eps0: 0.5,
            eps_mode: EpsMode::Distance,
            alpha: 0.1,
            gamma: 0.5,
            eps_residual: 1e-6,
            outer_iters: 30,
            inner_iters: 5,
            inner_tol: 1e-12,
            eps_floor: 1e-8,
        }
    }
}

impl IrlsConfig {
    pub fn validate(&self) -> Result<()> {
        self.pen.validate()?;
        if !(self.eps_floor > 0.0 && self.eps_floor <= self.eps0 && self.eps0 < 1.0) {
            return Err(Error::invalid(format!(
                "need 0 < eps_floor ({}) <= eps0 ({}) < 1",
                self.eps_floor, self.eps0
            )));
        }
        if self.eps_mode != EpsMode::Fixed && !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if self.eps_mode == EpsMode::SurrogateGap {
            let bound = 2.0 / (4.0 - self.pen.p * self.pen.p);
            if !(self.gamma > 0.0 && self.gamma < bound) {
                return Err(Error::invalid(format!(
                    "gamma must lie in (0, {bound}) for p = {}, got {}",
                    self.pen.p, self.gamma
                )));
            }
        }
        if !(self.eps_residual > 0.0) {
            return Err(Error::invalid("eps_residual must be > 0"));
        }
        if !(self.inner_tol > 0.0) {
            return Err(Error::invalid("inner_tol must be > 0"));
        }
        Ok(())
    }
}

/// Snapshot of one outer iteration, handed to observers.
#[derive(Debug, Clone)]
pub struct IrlsState {
    /// Iterate the weights below were computed from.
    pub x: Vec<f64>,
    pub eps: f64,
    pub weights: Vec<f64>,
    /// `D_kk = √(λ p w_k / 2)`.
    pub d_diag: Vec<f64>,
    pub r_diag: Vec<f64>,
    pub iteration: usize,
}

/// `w_k = (x_k² + ε²)^{−(2−p)/2}`.
pub fn irls_weights(x: &[f64], eps: f64, p: f64) -> Vec<f64> {
    debug_assert!(eps > 0.0);
    if p == 2.0 {
        return vec![1.0; x.len()];
    }
    let expo = -(2.0 - p) / 2.0;
    let e2 = eps * eps;
    x.iter().map(|v| (v * v + e2).powf(expo)).collect()
}

/// `d_k = √(λ p w_k / 2)`.
pub fn build_penalty_diag(w: &[f64], lambda: f64, p: f64) -> Vec<f64> {
    w.iter().map(|wk| (0.5 * lambda * p * wk).sqrt()).collect()
}

/// `R̃_i = max(|r_i|, ε_r)^{l−2}`.
pub fn build_residual_diag(r: &[f64], l: f64, eps_r: f64) -> Vec<f64> {
    if l == 2.0 {
        return vec![1.0; r.len()];
    }
    r.iter().map(|ri| ri.abs().max(eps_r).powf(l - 2.0)).collect()
}

/// Memory the ε schedules need from earlier iterations.
#[derive(Debug, Clone, Default)]
pub struct EpsHistory {
    /// Surrogate values `G_n` in iteration order.
    pub surrogate: Vec<f64>,
    /// Number of completed outer iterations.
    pub iteration: usize,
}

/// Next ε given the previous ε, the last two iterates and the history.
/// Never increases ε and never goes below `eps_floor`.
pub fn update_epsilon(
    eps: f64,
    x_prev: &[f64],
    x_new: &[f64],
    cfg: &IrlsConfig,
    history: &EpsHistory,
) -> f64 {
    let candidate = match cfg.eps_mode {
        EpsMode::Fixed => return cfg.eps0,
        EpsMode::Distance => (dist2(x_new, x_prev) + cfg.alpha).sqrt(),
        EpsMode::Geometric => cfg.alpha * eps,
        EpsMode::SurrogateGap => match history.surrogate.as_slice() {
            [.., g_older, g_newer] => {
                (g_older - g_newer).abs().powf(cfg.gamma / 2.0)
                    + cfg.alpha.powi(history.iteration as i32)
            }
            _ => eps,
        },
    };
    let next = eps.min(candidate);
    if next.is_nan() {
        eps.max(cfg.eps_floor)
    } else {
        next.max(cfg.eps_floor)
    }
}

/// `G(x, w, ε) = ‖Ax − b‖₂² + λ Σ [p w_k (x_k² + ε²) + (2 − p) w_k^{p/(p−2)}]`.
pub fn eval_surrogate<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    w: &[f64],
    eps: f64,
    pen: &Penalty,
) -> Result<f64> {
    check_len("eval_surrogate weights", x.len(), w.len())?;
    let r = residual(a, b, x)?;
    Ok(surrogate_from_residual(&r, x, w, eps, pen))
}

fn surrogate_from_residual(r: &[f64], x: &[f64], w: &[f64], eps: f64, pen: &Penalty) -> f64 {
    let p = pen.p;
    let e2 = eps * eps;
    let mut sum = 0.0;
    for (xk, wk) in x.iter().zip(w) {
        sum += p * wk * (xk * xk + e2);
        if p != 2.0 {
            sum += (2.0 - p) * wk.powf(p / (p - 2.0));
        }
    }
    dot(r, r) + pen.lambda * sum
}

/// One damped Landweber step
/// `x_k ← (x + Aᵀb − AᵀA x)_k / (1 + ½ λ p w_k)`. Requires `‖A‖₂ ≤ 1`.
pub fn irls_landweber_step<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x: &[f64],
    w: &[f64],
    pen: &Penalty,
) -> Result<Vec<f64>> {
    check_len("irls_landweber_step weights", x.len(), w.len())?;
    let r = residual(a, b, x)?;
    let g = a.apply_transpose(&r)?;
    Ok(x.iter()
        .zip(&g)
        .zip(w)
        .map(|((xk, gk), wk)| (xk - gk) / (1.0 + 0.5 * pen.lambda * pen.p * wk))
        .collect())
}

/// The Landweber-style IRLS scheme for `l = 2`. `A` and `b` are rescaled by
/// `1/s` with `s` an estimate of `‖A‖₂` and λ by `1/s²`, which leaves the
/// minimizer unchanged. `inner_iters` is ignored; each outer iteration is a
/// single step.
pub fn irls_landweber_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &IrlsConfig,
    x0: &[f64],
) -> Result<SolveOutput> {
    cfg.validate()?;
    if cfg.pen.l != 2.0 {
        return Err(Error::invalid("the Landweber scheme needs l = 2"));
    }
    check_len("irls_landweber_solve b", a.rows(), b.len())?;
    check_len("irls_landweber_solve x0", a.cols(), x0.len())?;

    // slightly above the estimate so the scaled norm stays <= 1
    let s = spectral_norm_estimate(a, 200, 0x5eed) * (1.0 + 1e-6);
    let s = if s > 0.0 { s } else { 1.0 };
    let scaled = Scaled { inner: a, factor: 1.0 / s };
    let bs: Vec<f64> = b.iter().map(|v| v / s).collect();
    let scaled_pen = cfg.pen.with_lambda(cfg.pen.lambda / (s * s));

    let mut x = x0.to_vec();
    let mut eps = cfg.eps0;
    let mut hist = EpsHistory::default();
    let mut trace = SolveTrace::default();
    for n in 0..cfg.outer_iters {
        let w = irls_weights(&x, eps, cfg.pen.p);
        if cfg.eps_mode == EpsMode::SurrogateGap {
            hist.surrogate
                .push(eval_surrogate(a, b, &x, &w, eps, &cfg.pen)?);
        }
        let x_new = irls_landweber_step(&scaled, &bs, &x, &w, &scaled_pen)?;
        hist.iteration = n + 1;
        let eps_used = eps;
        eps = update_epsilon(eps, &x, &x_new, cfg, &hist);
        x = x_new;
        let r = residual(a, b, &x)?;
        trace.push(record(n, &r, &x, &cfg.pen, eps_used)?);
    }
    Ok(SolveOutput { x, trace })
}

fn record(iter: usize, r: &[f64], x: &[f64], pen: &Penalty, eps: f64) -> Result<TraceRecord> {
    let f = flp_from_residual(r, x, pen);
    if !f.is_finite() {
        return Err(Error::NonFinite {
            quantity: "functional value",
            iteration: iter,
        });
    }
    Ok(TraceRecord {
        iter,
        f,
        residual_norm_l: Some(lp_norm(r, pen.l)),
        penalty_norm_p: Some(lp_norm(x, pen.p)),
        eps: Some(eps),
        nnz: nnz(x),
        ..Default::default()
    })
}

/// IRLS with a few warm-started CG steps per outer iteration.
pub fn irls_cg_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &IrlsConfig,
    x0: &[f64],
) -> Result<SolveOutput> {
    irls_cg_solve_observed(a, b, cfg, x0, |_| {})
}

/// [`irls_cg_solve`] that reports the weights and diagonals of every outer
/// iteration to `observe` before the inner solve.
pub fn irls_cg_solve_observed<A, F>(
    a: &A,
    b: &[f64],
    cfg: &IrlsConfig,
    x0: &[f64],
    mut observe: F,
) -> Result<SolveOutput>
where
    A: LinearOperator + ?Sized,
    F: FnMut(&IrlsState),
{
    cfg.validate()?;
    check_len("irls_cg_solve b", a.rows(), b.len())?;
    check_len("irls_cg_solve x0", a.cols(), x0.len())?;
    let pen = cfg.pen;

    let mut x = x0.to_vec();
    let mut r = residual(a, b, &x)?;
    let mut eps = cfg.eps0;
    let mut hist = EpsHistory::default();
    let mut trace = SolveTrace::default();
    let rhs_plain = if pen.l == 2.0 {
        Some(a.apply_transpose(b)?)
    } else {
        None
    };

    for n in 0..cfg.outer_iters {
        let w = irls_weights(&x, eps, pen.p);
        let penalty: Vec<f64> = w.iter().map(|wk| pen.lambda * pen.p * wk / pen.l).collect();
        let r_diag = build_residual_diag(&r, pen.l, cfg.eps_residual);

        observe(&IrlsState {
            x: x.clone(),
            eps,
            d_diag: build_penalty_diag(&w, pen.lambda, pen.p),
            weights: w.clone(),
            r_diag: r_diag.clone(),
            iteration: n,
        });

        if cfg.eps_mode == EpsMode::SurrogateGap {
            hist.surrogate
                .push(surrogate_from_residual(&r, &x, &w, eps, &pen));
        }

        let weights = if pen.l == 2.0 { None } else { Some(r_diag.as_slice()) };
        let sys = WeightedNormalOperator::new(a, weights, &penalty)?;
        let rhs = match &rhs_plain {
            Some(v) => v.clone(),
            None => sys.rhs(b)?,
        };
        let out = cg_solve(&sys, &rhs, &x, cfg.inner_iters, cfg.inner_tol)
            .map_err(|e| e.at_iteration(n))?;

        hist.iteration = n + 1;
        let eps_used = eps;
        eps = update_epsilon(eps, &x, &out.x, cfg, &hist);
        x = out.x;
        r = residual(a, b, &x)?;
        trace.push(record(n, &r, &x, &pen, eps_used)?);
    }
    Ok(SolveOutput { x, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::eval_flp;
    use crate::linop::{DenseMatrix, Identity};
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DenseMatrix::from_fn(m, n, |_, _| rng.random::<f64>() * 2.0 - 1.0)
    }

    fn random_vec(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
    }

    fn tikhonov_direct(a: &DenseMatrix, b: &[f64], lambda: f64) -> Vec<f64> {
        let n = a.cols();
        let g = a.gram();
        let mut m = DMatrix::from_row_slice(n, n, g.as_slice());
        for i in 0..n {
            m[(i, i)] += lambda;
        }
        let rhs = a.apply_transpose(b).unwrap();
        m.cholesky()
            .unwrap()
            .solve(&DVector::from_column_slice(&rhs))
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn weights_by_hand() {
        assert_eq!(irls_weights(&[3.0, -1.0, 0.0], 0.7, 2.0), vec![1.0; 3]);
        assert!((irls_weights(&[3.0], 4.0, 1.0)[0] - 0.2).abs() < 1e-15);
        assert!((irls_weights(&[0.0], 0.1, 1.0)[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn penalty_diag_by_hand() {
        assert_eq!(build_penalty_diag(&[1.0, 3.0], 0.0, 1.0), vec![0.0, 0.0]);
        assert!((build_penalty_diag(&[1.0], 2.0, 1.0)[0] - 1.0).abs() < 1e-15);
        assert!((build_penalty_diag(&[0.25], 2.0, 2.0)[0] - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn residual_diag_by_hand() {
        assert_eq!(build_residual_diag(&[1e-12, -3.0], 2.0, 1e-3), vec![1.0, 1.0]);
        assert!((build_residual_diag(&[4.0], 1.0, 1e-3)[0] - 0.25).abs() < 1e-15);
        assert!((build_residual_diag(&[1e-9], 1.0, 1e-3)[0] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn epsilon_updates() {
        let cfg = IrlsConfig {
            eps_mode: EpsMode::Fixed,
            eps0: 0.3,
            ..Default::default()
        };
        let h = EpsHistory::default();
        let mut eps = cfg.eps0;
        for _ in 0..10 {
            eps = update_epsilon(eps, &[1.0], &[2.0], &cfg, &h);
            assert_eq!(eps, 0.3);
        }
        let cfg = IrlsConfig {
            eps_mode: EpsMode::Distance,
            alpha: 0.01,
            eps0: 0.5,
            ..Default::default()
        };
        let e = update_epsilon(0.5, &[1.0, 2.0], &[1.0, 2.0], &cfg, &h);
        assert!((e - 0.1).abs() < 1e-15);
        assert_eq!(update_epsilon(0.05, &[1.0], &[1.0], &cfg, &h), 0.05);
        // floor
        let cfg = IrlsConfig {
            eps_floor: 0.2,
            ..cfg
        };
        assert_eq!(update_epsilon(0.5, &[0.0], &[0.0], &cfg, &h), 0.2);
    }

    #[test]
    fn surrogate_gap_needs_two_values() {
        let cfg = IrlsConfig {
            eps_mode: EpsMode::SurrogateGap,
            alpha: 0.5,
            gamma: 0.5,
            ..Default::default()
        };
        let mut h = EpsHistory {
            surrogate: vec![3.0],
            iteration: 1,
        };
        assert_eq!(update_epsilon(0.4, &[0.0], &[1.0], &cfg, &h), 0.4);
        h.surrogate.push(3.0 - 1e-4);
        h.iteration = 2;
        // |ΔG|^{γ/2} + α² = 1e-1 + 0.25
        let e = update_epsilon(0.4, &[0.0], &[1.0], &cfg, &h);
        assert!((e - (1e-4f64.powf(0.25) + 0.25)).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(IrlsConfig::default().validate().is_ok());
        let bad = IrlsConfig {
            eps0: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = IrlsConfig {
            eps_floor: 0.9,
            eps0: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        // p = 1: γ < 2/3
        let bad = IrlsConfig {
            eps_mode: EpsMode::SurrogateGap,
            gamma: 0.7,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn surrogate_special_cases() {
        let a = random_matrix(6, 4, 1);
        let b = random_vec(6, 2);
        let x = random_vec(4, 3);
        let r = residual(&a, &b, &x).unwrap();
        let data = dot(&r, &r);
        let eps = 0.3;
        let lam = 0.7;

        // p = 2, w = 1
        let pen = Penalty::new(lam, 2.0, 2.0).unwrap();
        let g = eval_surrogate(&a, &b, &x, &[1.0; 4], eps, &pen).unwrap();
        let expect = data + 2.0 * lam * x.iter().map(|v| v * v + eps * eps).sum::<f64>();
        assert!((g - expect).abs() < 1e-12);

        // tight weights, p = 1
        let pen = Penalty::new(lam, 2.0, 1.0).unwrap();
        let w = irls_weights(&x, eps, 1.0);
        let g = eval_surrogate(&a, &b, &x, &w, eps, &pen).unwrap();
        let expect = data + 2.0 * lam * x.iter().map(|v| (v * v + eps * eps).sqrt()).sum::<f64>();
        assert!((g - expect).abs() < 1e-12);

        // x = 0, ε = 0
        let pen = Penalty::new(lam, 2.0, 1.5).unwrap();
        let w = [0.5, 1.0, 2.0, 4.0];
        let g = eval_surrogate(&a, &b, &[0.0; 4], &w, 0.0, &pen).unwrap();
        let expect = dot(&b, &b) + lam * w.iter().map(|wk| 0.5 * wk.powf(1.5 / -0.5)).sum::<f64>();
        assert!((g - expect).abs() < 1e-12);
    }

    #[test]
    fn surrogate_is_minimized_by_tight_weights() {
        // w ↦ G(x, w, ε) is minimized at the IRLS weights
        let a = random_matrix(5, 3, 8);
        let b = random_vec(5, 9);
        let x = random_vec(3, 10);
        let pen = Penalty::new(0.9, 2.0, 1.3).unwrap();
        let w = irls_weights(&x, 0.2, pen.p);
        let g0 = eval_surrogate(&a, &b, &x, &w, 0.2, &pen).unwrap();
        for f in [0.5, 0.9, 1.1, 2.0] {
            let wp: Vec<f64> = w.iter().map(|v| v * f).collect();
            assert!(eval_surrogate(&a, &b, &x, &wp, 0.2, &pen).unwrap() > g0);
        }
    }

    #[test]
    fn landweber_step_cases() {
        let a = random_matrix(4, 3, 4);
        let b = random_vec(4, 5);
        let x = random_vec(3, 6);
        let pen = Penalty::new(0.0, 2.0, 1.0).unwrap();
        let got = irls_landweber_step(&a, &b, &x, &[1.0; 3], &pen).unwrap();
        let r = residual(&a, &b, &x).unwrap();
        let g = a.apply_transpose(&r).unwrap();
        for k in 0..3 {
            assert!((got[k] - (x[k] - g[k])).abs() < 1e-15);
        }
        // A = I, b = x
        let pen = Penalty::new(2.0, 2.0, 1.0).unwrap();
        let w = [0.5, 1.0, 3.0];
        let got = irls_landweber_step(&Identity(3), &x, &x, &w, &pen).unwrap();
        for k in 0..3 {
            assert!((got[k] - x[k] / (1.0 + 0.5 * 2.0 * 1.0 * w[k])).abs() < 1e-15);
        }
    }

    #[test]
    fn landweber_steps_reach_tikhonov() {
        let mut a = random_matrix(10, 6, 12);
        let s = spectral_norm_estimate(&a, 300, 1) * 1.01;
        a = DenseMatrix::from_fn(10, 6, |i, j| a.get(i, j) / s);
        let b = random_vec(10, 13);
        let lam = 0.5;
        let pen = Penalty::new(lam, 2.0, 2.0).unwrap();
        let mut x = vec![0.0; 6];
        for _ in 0..2000 {
            x = irls_landweber_step(&a, &b, &x, &[1.0; 6], &pen).unwrap();
        }
        let direct = tikhonov_direct(&a, &b, lam);
        for (u, v) in x.iter().zip(&direct) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn landweber_solve_rescales() {
        let a = random_matrix(12, 5, 30);
        let a = DenseMatrix::from_fn(12, 5, |i, j| 3.0 * a.get(i, j));
        let b = random_vec(12, 31);
        let lam = 4.0;
        let cfg = IrlsConfig {
            pen: Penalty::new(lam, 2.0, 2.0).unwrap(),
            outer_iters: 3000,
            ..Default::default()
        };
        let out = irls_landweber_solve(&a, &b, &cfg, &[0.0; 5]).unwrap();
        let direct = tikhonov_direct(&a, &b, lam);
        for (u, v) in out.x.iter().zip(&direct) {
            assert!((u - v).abs() < 1e-6, "{u} vs {v}");
        }
        let bad = IrlsConfig {
            pen: Penalty::new(1.0, 1.5, 2.0).unwrap(),
            ..cfg
        };
        assert!(irls_landweber_solve(&a, &b, &bad, &[0.0; 5]).is_err());
    }

    #[test]
    fn irls_cg_tikhonov_equivalence() {
        let a = random_matrix(50, 30, 40);
        let b = random_vec(50, 41);
        for lam in [0.01, 0.3, 2.0] {
            let cfg = IrlsConfig {
                pen: Penalty::new(lam, 2.0, 2.0).unwrap(),
                eps_mode: EpsMode::Fixed,
                outer_iters: 30,
                inner_iters: 10,
                ..Default::default()
            };
            let out = irls_cg_solve(&a, &b, &cfg, &[0.0; 30]).unwrap();
            let direct = tikhonov_direct(&a, &b, lam);
            let err = dist2(&out.x, &direct) / crate::vector::norm2(&direct);
            assert!(err < 1e-8, "lambda {lam}: rel err {err}");
        }
    }

    #[test]
    fn irls_cg_l1_stationarity() {
        // 2-sparse truth, small noise, λ at a tenth of the null threshold
        for seed in 0..3 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = DenseMatrix::from_fn(10, 4, |_, _| rng.random::<f64>() * 2.0 - 1.0);
            let mut xt = [0.0; 4];
            xt[seed as usize % 4] = 1.0;
            xt[(seed as usize + 2) % 4] = -0.7;
            let mut b = a.apply(&xt).unwrap();
            b.iter_mut().for_each(|v| *v += 0.05 * (rng.random::<f64>() - 0.5));
            let lam = 0.2 * crate::vector::norm_inf(&a.apply_transpose(&b).unwrap());
            let cfg = IrlsConfig {
                pen: Penalty::new(lam, 2.0, 1.0).unwrap(),
                eps0: 0.5,
                eps_mode: EpsMode::Geometric,
                alpha: 0.8,
                eps_floor: 1e-10,
                outer_iters: 200,
                inner_iters: 4,
                ..Default::default()
            };
            let out = irls_cg_solve(&a, &b, &cfg, &[0.0; 4]).unwrap();
            let r = residual(&a, &b, &out.x).unwrap();
            let g = a.apply_transpose(&r).unwrap();
            for k in 0..4 {
                let gk = 2.0 * g[k];
                if out.x[k].abs() > 1e-6 {
                    assert!(
                        (gk + lam * out.x[k].signum()).abs() <= 1e-3 * lam,
                        "seed {seed} k={k} x={} g={gk}",
                        out.x[k]
                    );
                } else {
                    assert!(gk.abs() <= lam * (1.0 + 1e-3), "seed {seed} k={k} g={gk}");
                }
            }
        }
    }

    #[test]
    fn irls_cg_zero_data() {
        let a = random_matrix(6, 4, 60);
        for l in [1.0, 1.5, 2.0] {
            let cfg = IrlsConfig {
                pen: Penalty::new(0.5, l, 1.0).unwrap(),
                outer_iters: 5,
                ..Default::default()
            };
            let out = irls_cg_solve(&a, &[0.0; 6], &cfg, &[0.0; 4]).unwrap();
            assert_eq!(out.x, vec![0.0; 4]);
            assert!(out.trace.functional_values().iter().all(|f| *f == 0.0));
        }
    }

    #[test]
    fn irls_cg_invariants_along_a_run() {
        let a = random_matrix(30, 20, 70);
        let b = random_vec(30, 71);
        for mode in [EpsMode::Distance, EpsMode::SurrogateGap, EpsMode::Geometric] {
            for p in [1.0, 1.5] {
                let cfg = IrlsConfig {
                    pen: Penalty::new(0.5, 2.0, p).unwrap(),
                    eps_mode: mode,
                    alpha: 0.3,
                    gamma: 0.5,
                    outer_iters: 40,
                    inner_iters: 20,
                    ..Default::default()
                };
                let mut eps_seen = Vec::new();
                // ‖Ax − b‖² + λ Σ (x² + ε²)^{p/2} at the iterate and its ε
                let mut smoothed = Vec::new();
                irls_cg_solve_observed(&a, &b, &cfg, &[0.0; 20], |s| {
                    assert!(s.weights.iter().all(|w| *w > 0.0 && w.is_finite()));
                    assert!(s.d_diag.iter().all(|d| *d > 0.0));
                    eps_seen.push(s.eps);
                    let r = residual(&a, &b, &s.x).unwrap();
                    let pen: f64 = s.x.iter().map(|x| (x * x + s.eps * s.eps).powf(p / 2.0)).sum();
                    smoothed.push(dot(&r, &r) + 0.5 * pen);
                })
                .unwrap();
                assert!(eps_seen.windows(2).all(|w| w[1] <= w[0]));
                assert!(eps_seen.iter().all(|e| *e >= cfg.eps_floor));
                for w in smoothed.windows(2) {
                    assert!(w[1] <= w[0] * (1.0 + 1e-12), "{mode:?} p={p}: {} > {}", w[1], w[0]);
                }
            }
        }
    }

    #[test]
    fn irls_cg_l1_residual_downweights_outliers() {
        // l = 1 fits the inliers of a line fit with one gross outlier
        let m = 21;
        let a = DenseMatrix::from_fn(m, 2, |i, j| if j == 0 { 1.0 } else { i as f64 / 10.0 });
        let mut b: Vec<f64> = (0..m).map(|i| 0.5 + 2.0 * i as f64 / 10.0).collect();
        b[7] += 50.0;
        let base = IrlsConfig {
            eps_mode: EpsMode::Fixed,
            outer_iters: 60,
            inner_iters: 2,
            ..Default::default()
        };
        let l1 = IrlsConfig {
            pen: Penalty::new(1e-6, 1.0, 2.0).unwrap(),
            ..base
        };
        let l2 = IrlsConfig {
            pen: Penalty::new(1e-6, 2.0, 2.0).unwrap(),
            ..base
        };
        let x1 = irls_cg_solve(&a, &b, &l1, &[0.0; 2]).unwrap().x;
        let x2 = irls_cg_solve(&a, &b, &l2, &[0.0; 2]).unwrap().x;
        let err = |x: &[f64]| ((x[0] - 0.5).powi(2) + (x[1] - 2.0).powi(2)).sqrt();
        assert!(err(&x1) < 1e-3, "l1 err {}", err(&x1));
        assert!(err(&x2) > 0.5);
        let f1 = eval_flp(&a, &b, &x1, &l1.pen).unwrap();
        assert!(f1.is_finite());
    }
}
