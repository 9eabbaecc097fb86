use std::path::{Path, PathBuf};

use clap::Args;
use lpreg::convcg::ThresholdMode;
use lpreg::irls::EpsMode;
use lpreg::{Penalty, SolverConfig, SolverKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{usage, Classify, Result};

pub const OUT_ENV: &str = "LPREG_OUT";
const OUT_FALLBACK: &str = "lpreg-out";

/// Parses a lowercase enum name the way it appears in JSON config files.
pub fn parse_named<T: DeserializeOwned>(s: &str) -> std::result::Result<T, String> {
    serde_json::from_value(Value::String(s.replace('-', "_"))).map_err(|e| e.to_string())
}

pub fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    s.parse()
}

/// Per-solver knobs. Each one belongs to exactly one solver family, except
/// the penalty exponents and the iteration budget.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SolverKnobs {
    /// Residual exponent l (1 ≤ l ≤ 2)
    #[arg(long)]
    pub l: Option<f64>,
    /// Penalty exponent p (1 ≤ p ≤ 2)
    #[arg(long)]
    pub p: Option<f64>,
    /// Iteration budget N (outer iterations for irls-cg)
    #[arg(long)]
    pub iters: Option<usize>,
    /// irls-cg: inner CG iterations N_l
    #[arg(long)]
    pub inner_iters: Option<usize>,
    /// irls-cg: initial ε
    #[arg(long)]
    pub eps0: Option<f64>,
    /// irls-cg: ε schedule (distance, surrogate-gap, geometric, fixed)
    #[arg(long, value_parser = parse_named::<EpsMode>)]
    pub eps_mode: Option<EpsMode>,
    /// irls-cg: ε schedule parameter α
    #[arg(long)]
    pub eps_alpha: Option<f64>,
    /// irls-cg: lower bound on ε
    #[arg(long)]
    pub eps_floor: Option<f64>,
    /// conv-cg: initial smoothing width σ₀
    #[arg(long)]
    pub sigma0: Option<f64>,
    /// conv-cg: σ decay factor α
    #[arg(long)]
    pub sigma_alpha: Option<f64>,
    /// conv-cg: lower bound on σ
    #[arg(long)]
    pub sigma_floor: Option<f64>,
    /// conv-cg: threshold τ (default λ/2)
    #[arg(long)]
    pub tau: Option<f64>,
    /// conv-cg: threshold mode (soft, hard, optimality, off)
    #[arg(long, value_parser = parse_named::<ThresholdMode>)]
    pub threshold: Option<ThresholdMode>,
    /// fista: step as a fraction of 1/L
    #[arg(long)]
    pub step_scale: Option<f64>,
}

impl SolverKnobs {
    fn owners(&self) -> Vec<(&'static str, SolverKind)> {
        use SolverKind::*;
        let mut set = Vec::new();
        let mut mark = |on: bool, name, kind| {
            if on {
                set.push((name, kind));
            }
        };
        mark(self.inner_iters.is_some(), "inner-iters", IrlsCg);
        mark(self.eps0.is_some(), "eps0", IrlsCg);
        mark(self.eps_mode.is_some(), "eps-mode", IrlsCg);
        mark(self.eps_alpha.is_some(), "eps-alpha", IrlsCg);
        mark(self.eps_floor.is_some(), "eps-floor", IrlsCg);
        mark(self.sigma0.is_some(), "sigma0", ConvCg);
        mark(self.sigma_alpha.is_some(), "sigma-alpha", ConvCg);
        mark(self.sigma_floor.is_some(), "sigma-floor", ConvCg);
        mark(self.tau.is_some(), "tau", ConvCg);
        mark(self.threshold.is_some(), "threshold", ConvCg);
        mark(self.step_scale.is_some(), "step-scale", Fista);
        set
    }

    /// Rejects knobs that belong to none of `kinds`.
    pub fn check_applicable(&self, kinds: &[SolverKind]) -> Result<()> {
        for (name, owner) in self.owners() {
            if !kinds.contains(&owner) {
                return Err(usage(format!("--{name} applies to {owner}, which is not selected")));
            }
        }
        Ok(())
    }

    /// Solver configuration at regularization weight `lambda`; `p_default`
    /// is used when `--p` is absent.
    pub fn build(&self, kind: SolverKind, lambda: f64, p_default: f64) -> Result<SolverConfig> {
        let (l, p) = (self.l.unwrap_or(2.0), self.p.unwrap_or(p_default));
        if kind == SolverKind::Fista && (l != 2.0 || p != 1.0) && (self.l.is_some() || self.p.is_some()) {
            return Err(usage(format!("fista solves l = 2, p = 1 only (got l = {l}, p = {p})")));
        }
        let pen = Penalty::new(lambda, l, p).usage()?;
        let mut cfg = SolverConfig::with_penalty(kind, pen);
        fn set<T: Copy>(slot: &mut T, v: Option<T>) {
            if let Some(v) = v {
                *slot = v;
            }
        }
        match &mut cfg {
            SolverConfig::IrlsCg(c) => {
                set(&mut c.outer_iters, self.iters);
                set(&mut c.inner_iters, self.inner_iters);
                set(&mut c.eps0, self.eps0);
                set(&mut c.eps_mode, self.eps_mode);
                set(&mut c.alpha, self.eps_alpha);
                set(&mut c.eps_floor, self.eps_floor);
            }
            SolverConfig::ConvCg(c) => {
                set(&mut c.iters, self.iters);
                set(&mut c.sigma0, self.sigma0);
                set(&mut c.alpha, self.sigma_alpha);
                set(&mut c.sigma_floor, self.sigma_floor);
                if self.tau.is_some() {
                    c.tau = self.tau;
                }
                if self.threshold.is_some() {
                    c.threshold_mode = self.threshold;
                }
            }
            SolverConfig::Fista(c) => {
                set(&mut c.iters, self.iters);
                set(&mut c.step_scale, self.step_scale);
            }
        }
        cfg.validate().usage()?;
        Ok(cfg)
    }
}

/// Options every experiment command shares.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Common {
    /// JSON file of option values; command-line flags take precedence
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $LPREG_OUT, else ./lpreg-out]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(OUT_FALLBACK))
    }
}

/// Folds a JSON config file under the parsed flags: keys are long flag names,
/// and a flag given on the command line wins over the same key in the file.
/// Keys that are not flags of the command are rejected.
pub fn merge_config<T>(flags: &T, file: Option<&Path>, allowed: &[String]) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let Some(path) = file else {
        return serde_json::from_value(serde_json::to_value(flags).usage()?).usage();
    };
    let text = std::fs::read_to_string(path).at(path)?;
    let Value::Object(mut merged) = serde_json::from_str::<Value>(&text).at(path)? else {
        return Err(usage(format!("{}: config must be a JSON object", path.display())));
    };
    for key in merged.keys() {
        if !allowed.iter().any(|a| a == key) {
            return Err(usage(format!("{}: unknown option '{key}'", path.display())));
        }
    }
    let Value::Object(given) = serde_json::to_value(flags).usage()? else {
        unreachable!("option structs serialize to objects")
    };
    for (k, v) in given {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// The options as a config object with unset values dropped, suitable for
/// feeding back through `--config`.
pub fn effective<T: Serialize>(opts: &T) -> Value {
    match serde_json::to_value(opts) {
        Ok(Value::Object(m)) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect::<Map<_, _>>()),
        Ok(other) => other,
        Err(_) => Value::Null,
    }
}
