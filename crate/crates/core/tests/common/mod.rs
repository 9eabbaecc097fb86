//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use lpreg::linop::{DenseMatrix, LinearOperator};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    DenseMatrix::from_fn(m, n, |_, _| r.sample(StandardNormal))
}

pub fn gaussian_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.sample(StandardNormal)).collect()
}

pub fn uniform_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.random::<f64>() * 2.0 - 1.0).collect()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adapt(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adapt(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    // fixed panels first so a coarse estimate cannot stop early by accident
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|i| {
            let (lo, hi) = (a + i as f64 * h, if i + 1 == PANELS { b } else { a + (i + 1) as f64 * h });
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = simpson(lo, hi, fa, fm, fb);
            adapt(f, lo, hi, fa, fm, fb, whole, tol / PANELS as f64, 50)
        })
        .sum()
}

/// `∫ K_σ(s) |t − s| ds` by quadrature over `±14σ`, split at the kink
/// `s = t`.
pub fn smoothed_abs_by_quadrature(t: f64, sigma: f64) -> f64 {
    let k = |s: f64| (-(s * s) / (2.0 * sigma * sigma)).exp() / (2.0 * std::f64::consts::PI * sigma * sigma).sqrt();
    let f = move |s: f64| k(s) * (t - s).abs();
    let (lo, hi) = (-14.0 * sigma, 14.0 * sigma);
    let tol = 1e-12;
    if t > lo && t < hi {
        integrate(&f, lo, t, tol) + integrate(&f, t, hi, tol)
    } else {
        integrate(&f, lo, hi, tol)
    }
}

/// Solution of `(AᵀA + λI) x = Aᵀb` by Cholesky.
pub fn tikhonov_direct(a: &DenseMatrix, b: &[f64], lambda: f64) -> Vec<f64> {
    let am = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let mut m = am.transpose() * &am;
    for i in 0..a.cols() {
        m[(i, i)] += lambda;
    }
    let rhs = am.transpose() * DVector::from_column_slice(b);
    m.cholesky().expect("SPD").solve(&rhs).iter().copied().collect()
}

pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let am = DMatrix::from_row_slice(a.rows(), a.cols(), a.as_slice());
    let mut s: Vec<f64> = am.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap());
    s
}

/// Worst violation, relative to λ, of the optimality conditions of
/// `‖Ax − b‖² + λ‖x‖₁`. Entries with `|x_k| ≤ zero_tol` count as zero.
pub fn l1_kkt_violation<A: LinearOperator>(a: &A, b: &[f64], x: &[f64], lambda: f64, zero_tol: f64) -> f64 {
    let ax = a.apply(x).unwrap();
    let r: Vec<f64> = ax.iter().zip(b).map(|(u, v)| u - v).collect();
    let g = a.apply_transpose(&r).unwrap();
    let mut worst: f64 = 0.0;
    for (xk, gk) in x.iter().zip(&g) {
        let gk = 2.0 * gk;
        let v = if xk.abs() > zero_tol {
            (gk + lambda * xk.signum()).abs()
        } else {
            (gk.abs() - lambda).max(0.0)
        };
        worst = worst.max(v / lambda);
    }
    worst
}

/// `‖Ax − b‖² + λ‖x‖₁` computed from scratch.
pub fn l1_objective<A: LinearOperator>(a: &A, b: &[f64], x: &[f64], lambda: f64) -> f64 {
    let ax = a.apply(x).unwrap();
    let rr: f64 = ax.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum();
    rr + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// Gaussian `m × n` matrix, 2-sparse truth with magnitudes in `[0.5, 1.5]`,
/// data with noise of standard deviation 0.05.
pub fn sparse_instance(m: usize, n: usize, seed: u64) -> (DenseMatrix, Vec<f64>, Vec<f64>) {
    let mut r = rng(seed);
    let a = DenseMatrix::from_fn(m, n, |_, _| r.sample(StandardNormal));
    let mut xt = vec![0.0; n];
    for i in rand::seq::index::sample(&mut r, n, 2.min(n)).iter() {
        let sign = if r.random::<bool>() { 1.0 } else { -1.0 };
        xt[i] = sign * r.random_range(0.5..1.5);
    }
    let mut b = a.apply(&xt).unwrap();
    for v in b.iter_mut() {
        let e: f64 = r.sample(StandardNormal);
        *v += 0.05 * e;
    }
    (a, b, xt)
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>() / a.len() as f64).sqrt()
}
