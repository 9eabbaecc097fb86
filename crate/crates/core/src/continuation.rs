//! Warm-started sweeps over a decreasing λ grid, L-curves and the choice of λ.
//!
//! The L-curve is the parametric curve `(ξ(λ), η(λ))` with
//! `ξ = log ‖Ax_λ − b‖_l` and `η = log ‖x_λ‖_p`. Its curvature is estimated
//! with finite differences in `log λ`:
//!
//! ```text
//! κ = (ξ′η″ − ξ″η′) / (ξ′² + η′²)^{3/2}
//! ```

use std::io::Write;

use crate::error::{Error, Result};
use crate::fista::FistaConfig;
use crate::functional::{lp_norm, residual};
use crate::linop::LinearOperator;
use crate::solver::SolverConfig;
use crate::trace::SolveTrace;
use crate::vector::{nnz, norm2};

/// `count` values from `lambda_max` down to `lambda_min`, equally spaced in
/// `log λ`. Both endpoints are exact.
pub fn lambda_grid(lambda_max: f64, lambda_min: f64, count: usize) -> Result<Vec<f64>> {
    if !(lambda_min > 0.0 && lambda_max > lambda_min && lambda_max.is_finite()) {
        return Err(Error::invalid(format!(
            "need lambda_max ({lambda_max}) > lambda_min ({lambda_min}) > 0"
        )));
    }
    if count < 2 {
        return Err(Error::invalid(format!("grid needs at least 2 values, got {count}")));
    }
    let (hi, lo) = (lambda_max.ln(), lambda_min.ln());
    let last = (count - 1) as f64;
    let mut grid: Vec<f64> = (0..count)
        .map(|i| (hi + (lo - hi) * i as f64 / last).exp())
        .collect();
    grid[0] = lambda_max;
    grid[count - 1] = lambda_min;
    Ok(grid)
}

/// Default grid endpoints `(‖Aᵀb‖_∞/1.2, ‖Aᵀb‖_∞/10⁶)` given `‖Aᵀb‖_∞`.
pub fn default_lambda_range(atb_inf: f64) -> (f64, f64) {
    let hi = atb_inf / 1.2;
    (hi, hi * 1.2e-6)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationOptions {
    pub iters_per_lambda: usize,
    /// Keep every per-λ solution in the result.
    pub keep_solutions: bool,
    /// Start each λ from the smoothing level (ε or σ) reached at the previous
    /// one instead of the configured starting value.
    pub carry_smoothing: bool,
    /// Replace interior curvature values by a 3-point moving average.
    pub smooth_curvature: bool,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            iters_per_lambda: 3,
            keep_solutions: false,
            carry_smoothing: false,
            smooth_curvature: false,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LCurve {
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub residual_norms: Vec<f64>,
    /// `‖Ax_λ − b‖₂`, used by the discrepancy rule.
    pub residual_norms_l2: Vec<f64>,
    pub penalty_norms: Vec<f64>,
    pub log_residual: Vec<f64>,
    pub log_penalty: Vec<f64>,
    /// Exact functional value at the end of each λ step.
    pub functional: Vec<f64>,
    pub nnz: Vec<usize>,
    /// Same length as the grid; filled by [`LCurve::compute_curvature`].
    pub curvature: Vec<f64>,
    pub solutions: Option<Vec<Vec<f64>>>,
    /// Percent model error per λ, when a truth is known.
    pub errors: Option<Vec<f64>>,
    /// All solver iterations, numbered consecutively across λ.
    pub trace: SolveTrace,
}

fn safe_ln(v: f64) -> f64 {
    v.max(f64::MIN_POSITIVE).ln()
}

impl LCurve {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Points whose stencil touches a zero residual or penalty norm get
    /// `κ = 0`.
    pub fn compute_curvature(&mut self) {
        let mut k = curvature(&self.lambdas, &self.log_residual, &self.log_penalty);
        let n = k.len();
        let zero: Vec<bool> = (0..n)
            .map(|i| !(self.residual_norms[i] > 0.0 && self.penalty_norms[i] > 0.0))
            .collect();
        if n >= 3 {
            for (i, v) in k.iter_mut().enumerate() {
                let c = i.clamp(1, n - 2);
                if zero[c - 1] || zero[c] || zero[c + 1] {
                    *v = 0.0;
                }
            }
        }
        self.curvature = k;
    }

    pub fn smooth_curvature(&mut self) {
        let k = &self.curvature;
        if k.len() < 3 {
            return;
        }
        let mut out = k.clone();
        for i in 1..k.len() - 1 {
            out[i] = (k[i - 1] + k[i] + k[i + 1]) / 3.0;
        }
        self.curvature = out;
    }

    /// `100·‖map(x_λ) − truth‖₂ / ‖truth‖₂` for every stored solution; `map`
    /// takes a solution to the space of `truth` (e.g. a wavelet synthesis).
    pub fn compute_errors<F>(&mut self, truth: &[f64], map: F) -> Result<()>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let sols = self
            .solutions
            .as_ref()
            .ok_or_else(|| Error::invalid("percent errors need the per-lambda solutions"))?;
        let tn = norm2(truth);
        let mut errs = Vec::with_capacity(sols.len());
        for x in sols {
            let m = map(x)?;
            crate::error::check_len("compute_errors truth", truth.len(), m.len())?;
            let d: f64 = m.iter().zip(truth).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            errs.push(100.0 * d / if tn > 0.0 { tn } else { 1.0 });
        }
        self.errors = Some(errs);
        Ok(())
    }

    /// Indices where the residual grew by more than `1e−6` relative as λ
    /// decreased.
    pub fn residual_monotonicity_violations(&self) -> Vec<usize> {
        self.residual_norms
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] * (1.0 + 1e-6) + 1e-300)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Columns `lambda, log_residual, log_penalty, curvature,
    /// [percent_error,] nnz`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let with_err = self.errors.is_some();
        if with_err {
            writeln!(w, "lambda,log_residual,log_penalty,curvature,percent_error,nnz")?;
        } else {
            writeln!(w, "lambda,log_residual,log_penalty,curvature,nnz")?;
        }
        for i in 0..self.len() {
            let k = self.curvature.get(i).copied().unwrap_or(0.0);
            write!(
                w,
                "{:e},{:e},{:e},{:e},",
                self.lambdas[i], self.log_residual[i], self.log_penalty[i], k
            )?;
            if let Some(e) = &self.errors {
                write!(w, "{:e},", e[i])?;
            }
            writeln!(w, "{}", self.nnz[i])?;
        }
        Ok(())
    }
}

/// Solves at each λ of `grid` in turn for `iters_per_lambda` iterations,
/// starting each λ from the previous solution (and the first from zero).
pub fn run_continuation<A: LinearOperator + ?Sized>(
    base: &SolverConfig,
    a: &A,
    b: &[f64],
    grid: &[f64],
    opts: &ContinuationOptions,
) -> Result<LCurve> {
    run_continuation_from(base, a, b, grid, opts, &vec![0.0; a.cols()], true)
}

/// Like [`run_continuation`] from `x0`; with `warm = false` every λ starts
/// from `x0` instead of the previous solution.
pub fn run_continuation_from<A: LinearOperator + ?Sized>(
    base: &SolverConfig,
    a: &A,
    b: &[f64],
    grid: &[f64],
    opts: &ContinuationOptions,
    x0: &[f64],
    warm: bool,
) -> Result<LCurve> {
    if grid.is_empty() {
        return Err(Error::invalid("empty lambda grid"));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::invalid("lambda grid must be strictly decreasing"));
    }
    base.validate()?;
    let base = &match *base {
        SolverConfig::Fista(c) if c.lipschitz.is_none() => {
            let l = c.lipschitz_estimate(a);
            SolverConfig::Fista(FistaConfig {
                lipschitz: (l > 0.0).then_some(l),
                ..c
            })
        }
        c => c,
    };
    let pen = base.penalty();
    let mut lc = LCurve {
        solutions: opts.keep_solutions.then(Vec::new),
        ..Default::default()
    };
    let mut x = x0.to_vec();
    let mut smoothing = base.smoothing();

    for (i, &lambda) in grid.iter().enumerate() {
        let mut cfg = base.with_lambda(lambda).with_iters(opts.iters_per_lambda);
        if opts.carry_smoothing {
            if let Some(s) = smoothing {
                cfg = cfg.with_smoothing(s);
            }
        }
        let start = if warm { x.clone() } else { x0.to_vec() };
        let out = cfg.solve(a, b, &start).map_err(|e| Error::AtLambda {
            index: i,
            lambda,
            source: Box::new(e),
        })?;
        if let Some(last) = out.trace.last() {
            smoothing = last.eps.or(last.sigma).or(smoothing);
        }
        x = out.x;
        lc.trace.extend_renumbered(out.trace);

        let r = residual(a, b, &x)?;
        let rn = lp_norm(&r, pen.l);
        let pn = lp_norm(&x, pen.p);
        lc.lambdas.push(lambda);
        lc.residual_norms.push(rn);
        lc.residual_norms_l2.push(norm2(&r));
        lc.penalty_norms.push(pn);
        lc.log_residual.push(safe_ln(rn));
        lc.log_penalty.push(safe_ln(pn));
        lc.functional
            .push(crate::functional::eval_flp(a, b, &x, &pen.with_lambda(lambda))?);
        lc.nnz.push(nnz(&x));
        if let Some(s) = lc.solutions.as_mut() {
            s.push(x.clone());
        }
    }
    lc.compute_curvature();
    if opts.smooth_curvature {
        lc.smooth_curvature();
    }
    Ok(lc)
}

/// First and second derivative at `at` of the quadratic through three
/// points.
fn quadratic_derivs(t: [f64; 3], f: [f64; 3], at: f64) -> (f64, f64) {
    let d0 = (t[0] - t[1]) * (t[0] - t[2]);
    let d1 = (t[1] - t[0]) * (t[1] - t[2]);
    let d2 = (t[2] - t[0]) * (t[2] - t[1]);
    let first = f[0] * ((at - t[1]) + (at - t[2])) / d0
        + f[1] * ((at - t[0]) + (at - t[2])) / d1
        + f[2] * ((at - t[0]) + (at - t[1])) / d2;
    let second = 2.0 * (f[0] / d0 + f[1] / d1 + f[2] / d2);
    (first, second)
}

/// Signed curvature of `(xi, eta)` parameterized by `log λ`. Interior points
/// use central differences, the two ends one-sided three-point formulas.
/// Grids shorter than 3 and non-finite values give 0.
pub fn curvature(lambdas: &[f64], xi: &[f64], eta: &[f64]) -> Vec<f64> {
    let n = lambdas.len();
    if n < 3 || xi.len() != n || eta.len() != n {
        return vec![0.0; n];
    }
    let t: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    (0..n)
        .map(|i| {
            let c = i.clamp(1, n - 2);
            let ts = [t[c - 1], t[c], t[c + 1]];
            let (x1, x2) = quadratic_derivs(ts, [xi[c - 1], xi[c], xi[c + 1]], t[i]);
            let (y1, y2) = quadratic_derivs(ts, [eta[c - 1], eta[c], eta[c + 1]], t[i]);
            let k = (x1 * y2 - x2 * y1) / (x1 * x1 + y1 * y1).powf(1.5);
            if k.is_finite() {
                k
            } else {
                0.0
            }
        })
        .collect()
}

/// Below this maximum `|κ|` a curve is reported as having no distinct corner.
pub const FLAT_CURVATURE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corner {
    pub lambda: f64,
    pub index: usize,
    /// False when the curve is flat.
    pub distinct: bool,
}

/// Interior point of maximum `κ`, ties going to the larger λ. With `ξ` and
/// `η` parameterized by increasing `log λ`, the corner of an L-curve (the
/// bend towards the origin) has `κ > 0`; concave stretches have `κ < 0`.
/// A curve with no `κ` above [`FLAT_CURVATURE`] reports the first interior
/// point.
pub fn pick_corner(lc: &LCurve) -> Corner {
    let n = lc.len();
    if n == 0 {
        return Corner {
            lambda: f64::NAN,
            index: 0,
            distinct: false,
        };
    }
    if n < 3 || lc.curvature.len() != n {
        return Corner {
            lambda: lc.lambdas[0],
            index: 0,
            distinct: false,
        };
    }
    let mut best = 1;
    for i in 2..n - 1 {
        if lc.curvature[i] > lc.curvature[best] {
            best = i;
        }
    }
    let distinct = lc.curvature[best] > FLAT_CURVATURE;
    if !distinct {
        best = 1;
    }
    Corner {
        lambda: lc.lambdas[best],
        index: best,
        distinct,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Discrepancy {
    pub lambda: f64,
    pub index: usize,
    /// False when no residual reached the noise level; `index` is then the
    /// last one.
    pub reached: bool,
}

/// Largest λ whose residual `‖Ax_λ − b‖₂` is at most `noise_norm`.
pub fn discrepancy_stop(lc: &LCurve, noise_norm: f64) -> Result<Discrepancy> {
    if lc.is_empty() {
        return Err(Error::invalid("empty L-curve"));
    }
    if !(noise_norm >= 0.0) {
        return Err(Error::invalid(format!("noise norm must be >= 0, got {noise_norm}")));
    }
    match lc.residual_norms_l2.iter().position(|r| *r <= noise_norm) {
        Some(i) => Ok(Discrepancy {
            lambda: lc.lambdas[i],
            index: i,
            reached: true,
        }),
        None => {
            let i = lc.len() - 1;
            Ok(Discrepancy {
                lambda: lc.lambdas[i],
                index: i,
                reached: false,
            })
        }
    }
}
