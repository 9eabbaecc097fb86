//! Uniform entry point over the three solvers.

use serde::{Deserialize, Serialize};

use crate::convcg::{conv_cg_solve, ConvCgConfig};
use crate::error::Result;
use crate::fista::{fista_solve, FistaConfig};
use crate::functional::Penalty;
use crate::irls::{irls_cg_solve, IrlsConfig};
use crate::linop::LinearOperator;
use crate::SolveOutput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    IrlsCg,
    ConvCg,
    Fista,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::IrlsCg => "irls-cg",
            SolverKind::ConvCg => "conv-cg",
            SolverKind::Fista => "fista",
        }
    }
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SolverKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "irls-cg" | "irls" => Ok(SolverKind::IrlsCg),
            "conv-cg" | "convcg" => Ok(SolverKind::ConvCg),
            "fista" => Ok(SolverKind::Fista),
            other => Err(format!("unknown solver {other:?} (expected irls-cg, conv-cg or fista)")),
        }
    }
}

/// Configuration of one solve with any of the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "kebab-case")]
pub enum SolverConfig {
    IrlsCg(IrlsConfig),
    ConvCg(ConvCgConfig),
    Fista(FistaConfig),
}

impl SolverConfig {
    /// Defaults of `kind` with the given penalty. FISTA ignores `l` and `p`.
    pub fn with_penalty(kind: SolverKind, pen: Penalty) -> Self {
        match kind {
            SolverKind::IrlsCg => SolverConfig::IrlsCg(IrlsConfig {
                pen,
                ..Default::default()
            }),
            SolverKind::ConvCg => SolverConfig::ConvCg(ConvCgConfig {
                pen,
                ..Default::default()
            }),
            SolverKind::Fista => SolverConfig::Fista(FistaConfig {
                lambda: pen.lambda,
                ..Default::default()
            }),
        }
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            SolverConfig::IrlsCg(_) => SolverKind::IrlsCg,
            SolverConfig::ConvCg(_) => SolverKind::ConvCg,
            SolverConfig::Fista(_) => SolverKind::Fista,
        }
    }

    pub fn penalty(&self) -> Penalty {
        match self {
            SolverConfig::IrlsCg(c) => c.pen,
            SolverConfig::ConvCg(c) => c.pen,
            SolverConfig::Fista(c) => c.penalty(),
        }
    }

    pub fn lambda(&self) -> f64 {
        self.penalty().lambda
    }

    /// Same configuration at another λ. A CONV-CG threshold left at its
    /// default follows λ.
    pub fn with_lambda(&self, lambda: f64) -> Self {
        match *self {
            SolverConfig::IrlsCg(c) => SolverConfig::IrlsCg(IrlsConfig {
                pen: c.pen.with_lambda(lambda),
                ..c
            }),
            SolverConfig::ConvCg(c) => SolverConfig::ConvCg(ConvCgConfig {
                pen: c.pen.with_lambda(lambda),
                ..c
            }),
            SolverConfig::Fista(c) => SolverConfig::Fista(FistaConfig { lambda, ..c }),
        }
    }

    /// Same configuration with `iters` outer iterations.
    pub fn with_iters(&self, iters: usize) -> Self {
        match *self {
            SolverConfig::IrlsCg(c) => SolverConfig::IrlsCg(IrlsConfig {
                outer_iters: iters,
                ..c
            }),
            SolverConfig::ConvCg(c) => SolverConfig::ConvCg(ConvCgConfig { iters, ..c }),
            SolverConfig::Fista(c) => SolverConfig::Fista(FistaConfig { iters, ..c }),
        }
    }

    pub fn iters(&self) -> usize {
        match self {
            SolverConfig::IrlsCg(c) => c.outer_iters,
            SolverConfig::ConvCg(c) => c.iters,
            SolverConfig::Fista(c) => c.iters,
        }
    }

    /// Starting value of the smoothing parameter (ε for IRLS, σ for
    /// CONV-CG); `None` for FISTA.
    pub fn smoothing(&self) -> Option<f64> {
        match self {
            SolverConfig::IrlsCg(c) => Some(c.eps0),
            SolverConfig::ConvCg(c) => Some(c.sigma0),
            SolverConfig::Fista(_) => None,
        }
    }

    /// Same configuration starting from smoothing level `value`, clamped to
    /// the configured floor.
    pub fn with_smoothing(&self, value: f64) -> Self {
        match *self {
            SolverConfig::IrlsCg(c) => SolverConfig::IrlsCg(IrlsConfig {
                eps0: value.max(c.eps_floor),
                ..c
            }),
            SolverConfig::ConvCg(c) => SolverConfig::ConvCg(ConvCgConfig {
                sigma0: value.max(c.sigma_floor),
                ..c
            }),
            f @ SolverConfig::Fista(_) => f,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SolverConfig::IrlsCg(c) => c.validate(),
            SolverConfig::ConvCg(c) => c.validate(),
            SolverConfig::Fista(c) => c.validate(),
        }
    }

    pub fn solve<A: LinearOperator + ?Sized>(&self, a: &A, b: &[f64], x0: &[f64]) -> Result<SolveOutput> {
        match self {
            SolverConfig::IrlsCg(c) => irls_cg_solve(a, b, c, x0),
            SolverConfig::ConvCg(c) => conv_cg_solve(a, b, c, x0),
            SolverConfig::Fista(c) => fista_solve(a, b, c, x0),
        }
    }
}
