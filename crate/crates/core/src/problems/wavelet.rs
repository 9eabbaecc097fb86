//! CDF 9/7 wavelet transform by lifting, with periodic boundaries.
//!
//! One level splits `x` into even samples `s` and odd samples `d` and applies
//!
//! ```text
//! d_i += a (s_i + s_{i+1})      s_i += b (d_{i−1} + d_i)
//! d_i += c (s_i + s_{i+1})      s_i += e (d_{i−1} + d_i)
//! s ← K s,  d ← d / K
//! ```
//!
//! storing `[s | d]`; further levels transform the `s` half. The basis is
//! biorthogonal, so the adjoint of the inverse transform is not the forward
//! transform; [`WaveletBasis::inverse_adjoint`] transposes each lifting step.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linop::LinearOperator;

const A: f64 = -1.586_134_342_059_924;
const B: f64 = -0.052_980_118_572_961;
const C: f64 = 0.882_911_075_530_934;
const E: f64 = 0.443_506_852_043_971;
const K: f64 = 1.149_604_398_860_241;

/// `d_i += w (s_i + s_{i+1})`, periodic.
fn lift_d(s: &[f64], d: &mut [f64], w: f64) {
    let h = s.len();
    for i in 0..h {
        d[i] += w * (s[i] + s[(i + 1) % h]);
    }
}

/// `s_i += w (d_{i−1} + d_i)`, periodic.
fn lift_s(s: &mut [f64], d: &[f64], w: f64) {
    let h = s.len();
    for i in 0..h {
        s[i] += w * (d[(i + h - 1) % h] + d[i]);
    }
}

fn forward_level(x: &mut [f64]) {
    let h = x.len() / 2;
    let mut s: Vec<f64> = x.iter().step_by(2).copied().collect();
    let mut d: Vec<f64> = x.iter().skip(1).step_by(2).copied().collect();
    lift_d(&s, &mut d, A);
    lift_s(&mut s, &d, B);
    lift_d(&s, &mut d, C);
    lift_s(&mut s, &d, E);
    for i in 0..h {
        x[i] = s[i] * K;
        x[h + i] = d[i] / K;
    }
}

fn inverse_level(x: &mut [f64]) {
    let h = x.len() / 2;
    let mut s: Vec<f64> = x[..h].iter().map(|v| v / K).collect();
    let mut d: Vec<f64> = x[h..].iter().map(|v| v * K).collect();
    lift_s(&mut s, &d, -E);
    lift_d(&s, &mut d, -C);
    lift_s(&mut s, &d, -B);
    lift_d(&s, &mut d, -A);
    for i in 0..h {
        x[2 * i] = s[i];
        x[2 * i + 1] = d[i];
    }
}

/// Transpose of [`inverse_level`]. The transpose of `d_i += w(s_i + s_{i+1})`
/// is `s_j += w(d_{j−1} + d_j)` and vice versa; the steps run in reverse.
fn inverse_adjoint_level(x: &mut [f64]) {
    let h = x.len() / 2;
    let mut s: Vec<f64> = x.iter().step_by(2).copied().collect();
    let mut d: Vec<f64> = x.iter().skip(1).step_by(2).copied().collect();
    lift_s(&mut s, &d, -A);
    lift_d(&s, &mut d, -B);
    lift_s(&mut s, &d, -C);
    lift_d(&s, &mut d, -E);
    for i in 0..h {
        x[i] = s[i] / K;
        x[h + i] = d[i] * K;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveletShape {
    Signal(usize),
    /// Row-major image; rows and columns are transformed separably.
    Image { rows: usize, cols: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletBasis {
    pub shape: WaveletShape,
    pub levels: usize,
}

fn check_dyadic(len: usize, levels: usize) -> Result<()> {
    if len == 0 || levels >= usize::BITS as usize || !len.is_multiple_of(1usize << levels) {
        return Err(Error::invalid(format!(
            "length {len} is not divisible by 2^{levels}"
        )));
    }
    Ok(())
}

impl WaveletBasis {
    pub fn new_1d(len: usize, levels: usize) -> Result<Self> {
        check_dyadic(len, levels)?;
        Ok(WaveletBasis {
            shape: WaveletShape::Signal(len),
            levels,
        })
    }

    pub fn new_2d(rows: usize, cols: usize, levels: usize) -> Result<Self> {
        check_dyadic(rows, levels)?;
        check_dyadic(cols, levels)?;
        Ok(WaveletBasis {
            shape: WaveletShape::Image { rows, cols },
            levels,
        })
    }

    pub fn len(&self) -> usize {
        match self.shape {
            WaveletShape::Signal(n) => n,
            WaveletShape::Image { rows, cols } => rows * cols,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, x: &[f64], step: fn(&mut [f64]), coarse_first: bool) -> Result<Vec<f64>> {
        check_len("wavelet transform", self.len(), x.len())?;
        let mut out = x.to_vec();
        let order: Vec<usize> = if coarse_first {
            (0..self.levels).rev().collect()
        } else {
            (0..self.levels).collect()
        };
        match self.shape {
            WaveletShape::Signal(n) => {
                for lev in order {
                    step(&mut out[..n >> lev]);
                }
            }
            WaveletShape::Image { rows, cols } => {
                let mut col = vec![0.0; rows];
                for lev in order {
                    let (h, w) = (rows >> lev, cols >> lev);
                    for r in 0..h {
                        step(&mut out[r * cols..r * cols + w]);
                    }
                    for c in 0..w {
                        for r in 0..h {
                            col[r] = out[r * cols + c];
                        }
                        step(&mut col[..h]);
                        for r in 0..h {
                            out[r * cols + c] = col[r];
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Analysis `w = W x`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.run(x, forward_level, false)
    }

    /// Synthesis `x = W⁻¹ w`.
    pub fn inverse(&self, w: &[f64]) -> Result<Vec<f64>> {
        self.run(w, inverse_level, true)
    }

    /// `W⁻ᵀ y`.
    pub fn inverse_adjoint(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.run(y, inverse_adjoint_level, false)
    }
}

/// The synthesis `W⁻¹` as an operator.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisOperator(pub WaveletBasis);

impl LinearOperator for SynthesisOperator {
    fn rows(&self) -> usize {
        self.0.len()
    }
    fn cols(&self) -> usize {
        self.0.len()
    }
    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        y.copy_from_slice(&self.0.inverse(x).expect("length checked by caller"));
    }
    fn apply_transpose_into(&self, y: &[f64], x: &mut [f64]) {
        x.copy_from_slice(&self.0.inverse_adjoint(y).expect("length checked by caller"));
    }
}

/// `w ↦ A W⁻¹ w`, with transpose `y ↦ W⁻ᵀ Aᵀ y`.
#[derive(Debug, Clone)]
pub struct ComposedOperator<Op> {
    pub a: Op,
    pub basis: WaveletBasis,
}

pub fn compose_awinv<Op: LinearOperator>(a: Op, basis: WaveletBasis) -> Result<ComposedOperator<Op>> {
    check_len("compose_awinv", a.cols(), basis.len())?;
    Ok(ComposedOperator { a, basis })
}

impl<Op: LinearOperator> LinearOperator for ComposedOperator<Op> {
    fn rows(&self) -> usize {
        self.a.rows()
    }
    fn cols(&self) -> usize {
        self.basis.len()
    }
    fn apply_into(&self, w: &[f64], y: &mut [f64]) {
        let x = self.basis.inverse(w).expect("coefficient length mismatch");
        self.a.apply_into(&x, y);
    }
    fn apply_transpose_into(&self, y: &[f64], w: &mut [f64]) {
        let mut t = vec![0.0; self.a.cols()];
        self.a.apply_transpose_into(y, &mut t);
        w.copy_from_slice(&self.basis.inverse_adjoint(&t).expect("length checked at construction"));
    }
}
