//! Nonlinear conjugate gradients on the smoothed functional
//! `H_{p,σ}(x) = ‖Ax − b‖_l^l + λ Σ φ_σ(x_k)^p`, with a sparsifying threshold
//! after every step and σ driven towards zero over the iterations.
//!
//! One iteration from `(x, s, σ)`:
//!
//! 1. `μ = −∇Hᵀs / sᵀ∇²H s` (second-order Taylor step), falling back to
//!    Armijo backtracking when the curvature is not positive or the step
//!    does not decrease `H`;
//! 2. `x⁺ = Threshold(x + μ s, τ)`. With the guard on (the default) the
//!    thresholded point is kept only if it does not raise the exact
//!    functional `F̃`; repeated shrinkage by a fixed `τ` otherwise keeps
//!    pulling the iterate off the minimizer once the steps become short;
//! 3. `β = max(∇H(x⁺)ᵀ(∇H(x⁺) − ∇H(x)) / ‖∇H(x)‖², 0)` (Polak–Ribière+),
//!    both gradients at the current σ;
//! 4. `s⁺ = −∇H(x⁺) + β s` and `σ⁺ = α σ`.
//!
//! After the last iteration, components within `4σ` of zero (the width of
//! the smoothing kernel) are zeroed, again subject to the guard.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::functional::{
    flp_from_residual, hard_threshold, lp_power_norm, prune_by_magnitude, soft_threshold, Penalty,
};
use crate::linop::LinearOperator;
use crate::mollifier::{
    general_residual_weights, hessian_penalty_diag, smooth_penalty, smooth_penalty_grad, SmoothAbs,
    SmoothVariant,
};
use crate::trace::{SolveTrace, TraceRecord};
use crate::vector::{dist2, dot, nnz};
use crate::SolveOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    Soft,
    Hard,
    /// Zero `x_k` wherever `|Aᵀ(b − Ax)|_k ≤ λ/2`.
    Optimality,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// `σ ← α σ`
    Geometric,
    /// `σ ← min(σ₀, α‖x⁺ − x‖₂)`
    DistanceTied,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearch {
    Taylor,
    Backtracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConvCgConfig {
    pub pen: Penalty,
    /// Threshold level; `tau_scale·λ` when absent.
    pub tau: Option<f64>,
    pub tau_scale: f64,
    /// Discard a threshold that increases the exact functional.
    pub threshold_guard: bool,
    pub sigma0: f64,
    pub alpha: f64,
    pub iters: usize,
    /// Soft for `p = 1`, hard for `p < 1` and off for `p > 1` when absent.
    pub threshold_mode: Option<ThresholdMode>,
    pub sigma_mode: SigmaMode,
    pub sigma_floor: f64,
    pub line_search: LineSearch,
    pub variant: SmoothVariant,
    /// Residual floor of the generalized (`l < 2`) data term.
    pub eps_residual: f64,
    /// Apply the optimality threshold every this many iterations.
    pub prune_cadence: usize,
}

impl Default for ConvCgConfig {
    fn default() -> Self {
        ConvCgConfig {
            pen: Penalty {
                lambda: 1.0,
                l: 2.0,
                p: 1.0,
                allow_nonconvex: false,
            },
            tau: None,
            tau_scale: 0.5,
            threshold_guard: true,
            sigma0: 0.1,
            alpha: 0.8,
            iters: 50,
            threshold_mode: None,
            sigma_mode: SigmaMode::Geometric,
            sigma_floor: 1e-6,
            line_search: LineSearch::Taylor,
            variant: SmoothVariant::Plain,
            eps_residual: 1e-6,
            prune_cadence: 1,
        }
    }
}

impl ConvCgConfig {
    pub fn validate(&self) -> Result<()> {
        self.pen.validate()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.sigma_floor >= crate::mollifier::MIN_SIGMA && self.sigma_floor <= self.sigma0) {
            return Err(Error::invalid(format!(
                "need {:e} <= sigma_floor ({}) <= sigma0 ({})",
                crate::mollifier::MIN_SIGMA,
                self.sigma_floor,
                self.sigma0
            )));
        }
        if !(self.tau_scale >= 0.0) || !self.tau_scale.is_finite() {
            return Err(Error::invalid(format!("tau_scale must be >= 0, got {}", self.tau_scale)));
        }
        if let Some(t) = self.tau {
            if !(t >= 0.0) {
                return Err(Error::invalid(format!("tau must be >= 0, got {t}")));
            }
        }
        if self.prune_cadence == 0 {
            return Err(Error::invalid("prune_cadence must be >= 1"));
        }
        if !(self.eps_residual > 0.0) {
            return Err(Error::invalid("eps_residual must be > 0"));
        }
        Ok(())
    }

    pub fn effective_tau(&self) -> f64 {
        self.tau.unwrap_or(self.tau_scale * self.pen.lambda)
    }


    pub fn effective_threshold_mode(&self) -> ThresholdMode {
        self.threshold_mode.unwrap_or(if self.pen.p == 1.0 {
            ThresholdMode::Soft
        } else if self.pen.p < 1.0 {
            ThresholdMode::Hard
        } else {
            ThresholdMode::Off
        })
    }
}

const CURVATURE_FLOOR: f64 = 1e-14;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

/// Taylor step `−gᵀs / sᵀMs`. `None` when the curvature is at most
/// `1e−14‖s‖²`, in which case the caller should backtrack.
pub fn line_search_mu<F>(grad: &[f64], s_dir: &[f64], hess_apply: F) -> Result<Option<f64>>
where
    F: FnOnce(&[f64]) -> Vec<f64>,
{
    check_len("line_search_mu direction", grad.len(), s_dir.len())?;
    let ss = dot(s_dir, s_dir);
    if ss == 0.0 {
        return Err(Error::invalid("line search along a zero direction"));
    }
    let hs = hess_apply(s_dir);
    Ok(taylor_mu(dot(grad, s_dir), dot(s_dir, &hs), ss))
}

fn taylor_mu(gs: f64, curvature: f64, ss: f64) -> Option<f64> {
    if curvature > CURVATURE_FLOOR * ss {
        Some(-gs / curvature)
    } else {
        None
    }
}

/// Halves μ from 1 until `h(μ) ≤ h0 − 1e−4·μ·|gᵀs|`, at most 30 times.
pub fn backtracking_mu<F: FnMut(f64) -> f64>(h0: f64, gs: f64, mut h_at: F) -> Option<f64> {
    let mut mu = 1.0;
    for _ in 0..=MAX_HALVINGS {
        if h_at(mu) <= h0 - ARMIJO * mu * gs.abs() {
            return Some(mu);
        }
        mu *= 0.5;
    }
    None
}

/// Polak–Ribière+ coefficient; `None` when `g_old = 0`.
pub fn pr_beta(g_new: &[f64], g_old: &[f64]) -> Option<f64> {
    let denom = dot(g_old, g_old);
    if denom == 0.0 {
        return None;
    }
    let num: f64 = g_new.iter().zip(g_old).map(|(n, o)| n * (n - o)).sum();
    Some((num / denom).max(0.0))
}

pub fn sigma_update(sigma: f64, cfg: &ConvCgConfig, step_dist: f64) -> f64 {
    let next = match cfg.sigma_mode {
        SigmaMode::Geometric => cfg.alpha * sigma,
        SigmaMode::DistanceTied => cfg.sigma0.min(cfg.alpha * step_dist),
    };
    next.max(cfg.sigma_floor)
}

/// Data term, its gradient and curvature for the residual exponent `l`.
struct DataTerm<'a, A: ?Sized> {
    a: &'a A,
    l: f64,
    eps_r: f64,
}

impl<A: LinearOperator + ?Sized> DataTerm<'_, A> {
    fn value(&self, r: &[f64]) -> f64 {
        lp_power_norm(r, self.l)
    }

    fn weights(&self, r: &[f64]) -> Vec<f64> {
        general_residual_weights(r, self.l, self.eps_r)
    }

    fn grad(&self, r: &[f64]) -> Vec<f64> {
        let w = self.weights(r);
        let wr: Vec<f64> = r.iter().zip(&w).map(|(ri, wi)| ri * wi).collect();
        let mut g = vec![0.0; self.a.cols()];
        self.a.apply_transpose_into(&wr, &mut g);
        g
    }

    /// `(As)ᵀ R (As)`; exact for `l = 2`, Gauss–Newton otherwise.
    fn curvature(&self, r: &[f64], a_s: &[f64]) -> f64 {
        if self.l == 2.0 {
            return 2.0 * dot(a_s, a_s);
        }
        self.weights(r).iter().zip(a_s).map(|(w, v)| w * v * v).sum()
    }
}

/// Nonlinear CG as described in the module docs.
pub fn conv_cg_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &ConvCgConfig,
    x0: &[f64],
) -> Result<SolveOutput> {
    solve(a, b, cfg, x0, true)
}

/// Same iteration with `β = 0`, i.e. steepest descent with the Taylor step.
pub fn steepest_descent_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &ConvCgConfig,
    x0: &[f64],
) -> Result<SolveOutput> {
    solve(a, b, cfg, x0, false)
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(u, v)| u + v).collect()
}

fn solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    cfg: &ConvCgConfig,
    x0: &[f64],
    conjugate: bool,
) -> Result<SolveOutput> {
    cfg.validate()?;
    check_len("conv_cg_solve b", a.rows(), b.len())?;
    check_len("conv_cg_solve x0", a.cols(), x0.len())?;

    let pen = cfg.pen;
    let lambda_p = pen.lambda * pen.p;
    let tau = cfg.effective_tau();
    let mode = cfg.effective_threshold_mode();
    let data = DataTerm {
        a,
        l: pen.l,
        eps_r: cfg.eps_residual,
    };
    let smoothed = |r: &[f64], x: &[f64], s: &SmoothAbs| data.value(r) + smooth_penalty(x, &pen, s);

    let mut trace = SolveTrace::default();
    let mut x = x0.to_vec();
    if cfg.iters == 0 {
        return Ok(SolveOutput { x, trace });
    }
    let mut r = a.apply(&x)?;
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);

    let mut sigma = cfg.sigma0;
    let mut smooth = SmoothAbs::new(sigma, cfg.variant)?;
    let mut g_data = data.grad(&r);
    let mut g = add(&g_data, &smooth_penalty_grad(&x, &pen, &smooth));
    let mut s: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut a_s = vec![0.0; a.rows()];

    for n in 0..cfg.iters {
        if dot(&g, &g) == 0.0 {
            trace.push(TraceRecord {
                iter: n,
                f: flp_from_residual(&r, &x, &pen),
                h: Some(smoothed(&r, &x, &smooth)),
                sigma: Some(sigma),
                mu: Some(0.0),
                beta: Some(0.0),
                nnz: nnz(&x),
                ..Default::default()
            });
            break;
        }
        let mut gs = dot(&g, &s);
        if !(gs < 0.0) {
            // not a descent direction for the current σ; restart
            s = g.iter().map(|v| -v).collect();
            gs = dot(&g, &s);
        }
        a.apply_into(&s, &mut a_s);
        let h0 = smoothed(&r, &x, &smooth);
        let trial = |mu: f64| -> (Vec<f64>, Vec<f64>) {
            let xt: Vec<f64> = x.iter().zip(&s).map(|(xi, si)| xi + mu * si).collect();
            let rt: Vec<f64> = r.iter().zip(&a_s).map(|(ri, ai)| ri + mu * ai).collect();
            (xt, rt)
        };

        let mut accepted = None;
        if cfg.line_search == LineSearch::Taylor {
            let w = hessian_penalty_diag(&x, &pen, &smooth);
            let pen_curv: f64 = w.iter().zip(&s).map(|(wk, sk)| wk * sk * sk).sum();
            let curvature = data.curvature(&r, &a_s) + lambda_p * pen_curv;
            if let Some(mu) = taylor_mu(gs, curvature, dot(&s, &s)) {
                let (xt, rt) = trial(mu);
                let ht = smoothed(&rt, &xt, &smooth);
                if ht <= h0 {
                    accepted = Some((mu, xt, rt));
                }
            }
        }
        if accepted.is_none() {
            if let Some(mu) = backtracking_mu(h0, gs, |mu| {
                let (xt, rt) = trial(mu);
                smoothed(&rt, &xt, &smooth)
            }) {
                let (xt, rt) = trial(mu);
                accepted = Some((mu, xt, rt));
            }
        }
        let (mu, x_half, r_half) = accepted.unwrap_or_else(|| (0.0, x.clone(), r.clone()));
        debug_assert!(mu == 0.0 || smoothed(&r_half, &x_half, &smooth) <= h0);

        let prune_now = mode != ThresholdMode::Optimality || (n + 1) % cfg.prune_cadence == 0;
        let v = if mode == ThresholdMode::Optimality && prune_now {
            let mut v = a.apply_transpose(&r_half)?;
            v.iter_mut().for_each(|vi| *vi = vi.abs());
            Some(v)
        } else {
            None
        };
        let thresholded = match mode {
            ThresholdMode::Soft => soft_threshold(&x_half, tau),
            ThresholdMode::Hard => hard_threshold(&x_half, tau),
            ThresholdMode::Optimality => match &v {
                Some(v) => prune_by_magnitude(&x_half, v, pen.lambda / 2.0),
                None => x_half.clone(),
            },
            ThresholdMode::Off => x_half.clone(),
        };
        let (x_new, r_new) = accept_threshold(a, b, &pen, cfg.threshold_guard, x_half, r_half, thresholded)?;

        let g_data_new = data.grad(&r_new);
        let g_new = add(&g_data_new, &smooth_penalty_grad(&x_new, &pen, &smooth));
        let beta = if conjugate {
            pr_beta(&g_new, &g).unwrap_or(0.0)
        } else {
            0.0
        };
        for (si, gi) in s.iter_mut().zip(&g_new) {
            *si = -gi + beta * *si;
        }

        let f = flp_from_residual(&r_new, &x_new, &pen);
        let h = smoothed(&r_new, &x_new, &smooth);
        if !f.is_finite() || !h.is_finite() {
            return Err(Error::NonFinite {
                quantity: "functional value",
                iteration: n,
            });
        }
        trace.push(TraceRecord {
            iter: n,
            f,
            h: Some(h),
            residual_norm_l: Some(crate::functional::lp_norm(&r_new, pen.l)),
            penalty_norm_p: Some(crate::functional::lp_norm(&x_new, pen.p)),
            sigma: Some(sigma),
            mu: Some(mu),
            beta: Some(beta),
            nnz: nnz(&x_new),
            ..Default::default()
        });

        sigma = sigma_update(sigma, cfg, dist2(&x_new, &x));
        smooth = smooth.with_sigma(sigma);
        g_data = g_data_new;
        g = add(&g_data, &smooth_penalty_grad(&x_new, &pen, &smooth));
        x = x_new;
        r = r_new;
    }

    // Components within a few σ of zero are smoothing residue.
    if cfg.threshold_guard && matches!(mode, ThresholdMode::Soft | ThresholdMode::Hard) && !trace.is_empty() {
        let last_sigma = trace.last().and_then(|t| t.sigma).unwrap_or(sigma);
        let cand = hard_threshold(&x, tau.min(CLEANUP_SIGMAS * last_sigma));
        let (xc, rc) = accept_threshold(a, b, &pen, true, x.clone(), r.clone(), cand)?;
        if xc != x {
            let rec = trace.records.last_mut().expect("trace is non-empty");
            rec.f = flp_from_residual(&rc, &xc, &pen);
            rec.residual_norm_l = Some(crate::functional::lp_norm(&rc, pen.l));
            rec.penalty_norm_p = Some(crate::functional::lp_norm(&xc, pen.p));
            rec.nnz = nnz(&xc);
            x = xc;
        }
    }
    Ok(SolveOutput { x, trace })
}

const CLEANUP_SIGMAS: f64 = 4.0;

/// Takes `cand` unless it equals `x` or, with `guard`, raises the exact
/// functional.
fn accept_threshold<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    pen: &Penalty,
    guard: bool,
    x: Vec<f64>,
    r: Vec<f64>,
    cand: Vec<f64>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if cand == x {
        return Ok((x, r));
    }
    let mut rc = a.apply(&cand)?;
    rc.iter_mut().zip(b).for_each(|(ri, bi)| *ri -= bi);
    if guard && flp_from_residual(&rc, &cand, pen) > flp_from_residual(&r, &x, pen) {
        Ok((x, r))
    } else {
        Ok((cand, rc))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fista::{fista_solve, FistaConfig};
    use crate::functional::eval_flp;
    use crate::linop::{DenseMatrix, Identity};
    use crate::mollifier::{apply_hessian, eval_h, grad_h};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_problem(m: usize, n: usize, seed: u64) -> (DenseMatrix, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DenseMatrix::from_fn(m, n, |_, _| rng.random::<f64>() - 0.5);
        let b = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
        (a, b)
    }

    #[test]
    fn taylor_step_on_a_quadratic() {
        // H = ‖x − b‖², x = 0, s = −g = 2b
        let b = [1.0, -2.0, 0.5];
        let g: Vec<f64> = b.iter().map(|v| -2.0 * v).collect();
        let s: Vec<f64> = g.iter().map(|v| -v).collect();
        let mu = line_search_mu(&g, &s, |d| d.iter().map(|v| 2.0 * v).collect())
            .unwrap()
            .unwrap();
        assert_eq!(mu, 0.5);
        for k in 0..3 {
            assert_eq!(mu * s[k], b[k]);
        }
        let mu = line_search_mu(&[1.0, 0.0], &[0.0, 1.0], |d| d.to_vec()).unwrap().unwrap();
        assert_eq!(mu, 0.0);
        assert!(line_search_mu(&[1.0], &[0.0], |d| d.to_vec()).is_err());
        assert!(line_search_mu(&[1.0], &[-1.0], |d| vec![-d[0]]).unwrap().is_none());
    }

    #[test]
    fn taylor_step_decreases_h_far_from_origin() {
        let (a, b) = random_problem(12, 8, 1);
        let pen = Penalty::new(0.3, 2.0, 2.0).unwrap();
        let s_abs = SmoothAbs::plain(1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x: Vec<f64> = (0..8)
                .map(|_| (0.5 + rng.random::<f64>()) * if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let g = grad_h(&a, &b, &x, &pen, &s_abs).unwrap();
            let s: Vec<f64> = g.iter().map(|v| -v).collect();
            let mu = line_search_mu(&g, &s, |d| apply_hessian(&a, &x, &pen, &s_abs, d).unwrap())
                .unwrap()
                .unwrap();
            let xt: Vec<f64> = x.iter().zip(&s).map(|(xi, si)| xi + mu * si).collect();
            assert!(eval_h(&a, &b, &xt, &pen, &s_abs).unwrap() < eval_h(&a, &b, &x, &pen, &s_abs).unwrap());
        }
    }

    #[test]
    fn beta_cases() {
        assert_eq!(pr_beta(&[1.0, 2.0], &[1.0, 2.0]), Some(0.0));
        assert_eq!(pr_beta(&[0.0, 1.0], &[1.0, 0.0]), Some(1.0));
        assert_eq!(pr_beta(&[0.5, 1.0], &[1.0, 2.0]), Some(0.0));
        assert_eq!(pr_beta(&[1.0], &[0.0]), None);
    }

    #[test]
    fn sigma_schedules() {
        let cfg = ConvCgConfig {
            alpha: 0.8,
            sigma0: 1.0,
            ..Default::default()
        };
        assert_eq!(sigma_update(1.0, &cfg, 0.0), 0.8);
        let tied = ConvCgConfig {
            sigma_mode: SigmaMode::DistanceTied,
            ..cfg
        };
        assert_eq!(sigma_update(0.5, &tied, 0.0), cfg.sigma_floor);
        assert_eq!(sigma_update(0.5, &tied, 100.0), 1.0);
        let mut s = 1.0;
        for _ in 0..200 {
            s = sigma_update(s, &cfg, 0.0);
        }
        assert_eq!(s, 0.8f64.powi(200).max(cfg.sigma_floor));
    }

    #[test]
    fn zero_data_returns_immediately() {
        let (a, _) = random_problem(5, 7, 3);
        let out = conv_cg_solve(&a, &[0.0; 5], &ConvCgConfig::default(), &[0.0; 7]).unwrap();
        assert_eq!(out.x, vec![0.0; 7]);
        assert!(out.trace.len() <= 1);
    }

    #[test]
    fn zero_budget_returns_start() {
        let (a, b) = random_problem(5, 7, 3);
        let cfg = ConvCgConfig {
            iters: 0,
            ..Default::default()
        };
        let x0 = [0.1; 7];
        let out = conv_cg_solve(&a, &b, &cfg, &x0).unwrap();
        assert_eq!(out.x, x0.to_vec());
        assert!(out.trace.is_empty());
    }

    #[test]
    fn steepest_descent_one_step_on_identity() {
        let b = [1.0, -3.0, 0.25];
        let cfg = ConvCgConfig {
            pen: Penalty::new(0.0, 2.0, 1.0).unwrap(),
            iters: 1,
            ..Default::default()
        };
        let out = steepest_descent_solve(&Identity(3), &b, &cfg, &[0.0; 3]).unwrap();
        for k in 0..3 {
            assert!((out.x[k] - b[k]).abs() < 1e-15);
        }
    }

    #[test]
    fn cg_beats_steepest_descent_on_ill_conditioned_quadratic() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 10.0]]).unwrap();
        let b = [1.0, 1.0];
        let pen = Penalty::new(0.0, 2.0, 2.0).unwrap();
        let iters_to = |conj: bool| {
            for k in 1..500 {
                let cfg = ConvCgConfig {
                    pen,
                    iters: k,
                    ..Default::default()
                };
                let out = if conj {
                    conv_cg_solve(&a, &b, &cfg, &[0.0; 2]).unwrap()
                } else {
                    steepest_descent_solve(&a, &b, &cfg, &[0.0; 2]).unwrap()
                };
                if eval_flp(&a, &b, &out.x, &pen).unwrap() < 1e-20 {
                    return k;
                }
            }
            usize::MAX
        };
        let cg = iters_to(true);
        let sd = iters_to(false);
        assert!(cg < sd, "cg {cg} vs sd {sd}");
    }

    #[test]
    fn trace_fields_and_invariants() {
        let (a, b) = random_problem(30, 50, 4);
        let cfg = ConvCgConfig {
            pen: Penalty::new(0.5, 2.0, 1.0).unwrap(),
            iters: 40,
            ..Default::default()
        };
        let out = conv_cg_solve(&a, &b, &cfg, &[0.0; 50]).unwrap();
        assert_eq!(out.trace.len(), 40);
        let mut prev_sigma = f64::INFINITY;
        for rec in &out.trace.records {
            let sigma = rec.sigma.unwrap();
            assert!(sigma <= prev_sigma && sigma >= cfg.sigma_floor);
            prev_sigma = sigma;
            assert!(rec.beta.unwrap() >= 0.0);
            assert!(rec.mu.unwrap() >= 0.0);
            assert!(rec.h.is_some());
        }
        let f = eval_flp(&a, &b, &out.x, &cfg.pen).unwrap();
        assert!((out.trace.last().unwrap().f - f).abs() <= 1e-12 * f);
    }

    #[test]
    fn identity_operator_reaches_soft_threshold() {
        let b: Vec<f64> = (0..10).map(|i| (i as f64 - 4.5) * 0.3).collect();
        let lam = 0.8;
        let cfg = ConvCgConfig {
            pen: Penalty::new(lam, 2.0, 1.0).unwrap(),
            iters: 50,
            sigma0: 0.1,
            alpha: 0.8,
            ..Default::default()
        };
        assert_eq!(cfg.effective_tau(), lam / 2.0);
        let out = conv_cg_solve(&Identity(10), &b, &cfg, &[0.0; 10]).unwrap();
        let exact = soft_threshold(&b, lam / 2.0);
        for (u, v) in out.x.iter().zip(&exact) {
            assert!((u - v).abs() <= 1e-3, "{u} vs {v}");
        }
        assert_eq!(nnz(&out.x), nnz(&exact));

        // without the guard every short step is followed by another shrink
        // by τ and the iterate collapses towards zero
        let literal = ConvCgConfig {
            threshold_guard: false,
            ..cfg
        };
        let out = conv_cg_solve(&Identity(10), &b, &literal, &[0.0; 10]).unwrap();
        assert!(dist2(&out.x, &exact) > 0.5);
    }

    #[test]
    fn comparable_to_long_fista() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (m, n) = (100, 200);
        let a = DenseMatrix::from_fn(m, n, |_, _| {
            let u: f64 = rng.random::<f64>() - 0.5;
            u / (m as f64).sqrt()
        });
        let mut xt = vec![0.0; n];
        for k in 0..10 {
            xt[k * 17] = if k % 2 == 0 { 1.0 } else { -1.0 };
        }
        let b = a.apply(&xt).unwrap();
        let lam = 0.02;
        let cfg = ConvCgConfig {
            pen: Penalty::new(lam, 2.0, 1.0).unwrap(),
            iters: 200,
            sigma0: 0.1,
            ..Default::default()
        };
        let cg = conv_cg_solve(&a, &b, &cfg, &vec![0.0; n]).unwrap();
        let fcfg = FistaConfig {
            lambda: lam,
            iters: 2000,
            ..Default::default()
        };
        let fi = fista_solve(&a, &b, &fcfg, &vec![0.0; n]).unwrap();
        let f_cg = eval_flp(&a, &b, &cg.x, &cfg.pen).unwrap();
        let f_fi = eval_flp(&a, &b, &fi.x, &cfg.pen).unwrap();
        assert!(f_cg <= 1.01 * f_fi, "conv-cg {f_cg} vs fista {f_fi}");
    }
}
