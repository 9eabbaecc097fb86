//! Solvers for regularized linear inverse problems
//!
//! ```text
//! minimize  F_{l,p}(x) = ‖Ax − b‖_l^l + λ‖x‖_p^p,    1 ≤ l, p ≤ 2
//! ```
//!
//! * [`irls`]: iteratively reweighted least squares with a few inner CG
//!   steps per reweighting,
//! * [`convcg`]: Polak–Ribière nonlinear CG on a Gaussian-smoothed version of
//!   the functional ([`mollifier`]), with thresholding,
//! * [`fista`]: ISTA and FISTA for `l = 2, p = 1`,
//! * [`continuation`]: warm-started sweeps over a decreasing λ grid, L-curves
//!   and parameter choice,
//! * [`problems`]: synthetic test problems (ray tomography, matrices with
//!   prescribed singular values, CDF 9/7 wavelets).
//!
//! All solvers take the forward model as a [`linop::LinearOperator`] and
//! return the final iterate with a per-iteration [`trace::SolveTrace`].

pub mod continuation;
pub mod convcg;
pub mod error;
pub mod fista;
pub mod functional;
pub mod irls;
pub mod linop;
pub mod mollifier;
pub mod problems;
pub mod solver;
pub mod trace;
pub mod vector;

pub use error::{Error, Result};
pub use functional::Penalty;
pub use linop::LinearOperator;
pub use solver::{SolverConfig, SolverKind};
pub use trace::{SolveTrace, TraceRecord};

/// Result of a solve.
#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub x: Vec<f64>,
    pub trace: SolveTrace,
}
