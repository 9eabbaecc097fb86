use std::fs;
use std::path::Path;

use lpreg::functional::{eval_flp, lp_norm, residual};
use lpreg::linop::mtx::write_vector;
use lpreg::vector::{nnz, norm2, rms, sub};
use lpreg::{LinearOperator, SolverConfig, SolveTrace};
use serde::Serialize;
use serde_json::Value;

use crate::error::{Classify, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).at(dir)
}

pub fn write_json(path: &Path, v: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(v).at(path)?;
    fs::write(path, text + "\n").at(path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).at(path)
}

pub fn write_vec(path: &Path, v: &[f64]) -> Result<()> {
    write_vector(path, v).at(path)
}

pub fn write_trace(path: &Path, trace: &SolveTrace) -> Result<()> {
    let file = fs::File::create(path).at(path)?;
    trace.write_jsonl(std::io::BufWriter::new(file)).at(path)
}

/// Figures reported for one solution.
#[derive(Debug, Serialize)]
pub struct Summary {
    pub solver: &'static str,
    pub lambda: f64,
    #[serde(rename = "F")]
    pub f: f64,
    pub residual_norm: f64,
    pub residual_norm_l: f64,
    pub nnz: usize,
    pub iterations: usize,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub percent_error: Option<f64>,
}

impl Summary {
    /// `x` lives in the domain of `op`; `model` is its image in the space of
    /// `truth` (the same vector unless a basis change is involved).
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cfg: &SolverConfig,
        op: &dyn LinearOperator,
        b: &[f64],
        x: &[f64],
        model: &[f64],
        truth: Option<&[f64]>,
        iterations: usize,
        wall_time_s: f64,
    ) -> Result<Self> {
        let pen = cfg.penalty();
        let r = residual(op, b, x).solver()?;
        let (rmse, percent_error) = match truth {
            Some(t) => {
                let d = sub(model, t);
                let tn = norm2(t);
                (Some(rms(&d)), Some(100.0 * norm2(&d) / if tn > 0.0 { tn } else { 1.0 }))
            }
            None => (None, None),
        };
        Ok(Summary {
            solver: cfg.kind().name(),
            lambda: pen.lambda,
            f: eval_flp(op, b, x, &pen).solver()?,
            residual_norm: norm2(&r),
            residual_norm_l: lp_norm(&r, pen.l),
            nnz: nnz(x),
            iterations,
            wall_time_s,
            rmse,
            percent_error,
        })
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "{}: F = {:.6e}, residual = {:.6e}, nnz = {}, {:.3}s",
            self.solver, self.f, self.residual_norm, self.nnz, self.wall_time_s
        );
        if let Some(r) = self.rmse {
            s += &format!(", rmse = {r:.6e}");
        }
        s
    }
}

/// `meta.json`: the command, its effective options in `--config` form, and
/// the full solver configurations they expand to.
pub fn meta(command: &str, options: Value, solvers: &[SolverConfig]) -> Value {
    serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config": options,
        "solver_configs": solvers,
    })
}
