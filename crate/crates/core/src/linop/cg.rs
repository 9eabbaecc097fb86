use super::{DenseMatrix, LinearOperator};
use crate::error::{check_len, Error, Result};
use crate::vector::{axpy, dot, norm2};

/// A symmetric positive-definite map `ℝⁿ → ℝⁿ`, applied matrix-free.
pub trait SpdOperator {
    fn dim(&self) -> usize;
    fn apply_spd(&self, x: &[f64], out: &mut [f64]);
}

impl SpdOperator for DenseMatrix {
    fn dim(&self) -> usize {
        assert_eq!(self.rows(), self.cols(), "SPD matrix must be square");
        self.rows()
    }

    fn apply_spd(&self, x: &[f64], out: &mut [f64]) {
        self.apply_into(x, out)
    }
}

/// `x ↦ Aᵀ(R·(A x)) + diag(penalty) x`, the system matrix of one reweighted
/// least-squares step. `R` (residual weights) and the penalty diagonal are
/// held as vectors; neither is ever formed as a matrix.
pub struct WeightedNormalOperator<'a, A: LinearOperator + ?Sized> {
    op: &'a A,
    residual_weights: Option<&'a [f64]>,
    penalty: &'a [f64],
    scratch: std::cell::RefCell<Vec<f64>>,
}

impl<'a, A: LinearOperator + ?Sized> WeightedNormalOperator<'a, A> {
    /// `residual_weights = None` means `R = I`.
    pub fn new(op: &'a A, residual_weights: Option<&'a [f64]>, penalty: &'a [f64]) -> Result<Self> {
        check_len("WeightedNormalOperator penalty", op.cols(), penalty.len())?;
        if let Some(r) = residual_weights {
            check_len("WeightedNormalOperator residual weights", op.rows(), r.len())?;
        }
        Ok(WeightedNormalOperator {
            op,
            residual_weights,
            penalty,
            scratch: std::cell::RefCell::new(vec![0.0; op.rows()]),
        })
    }

    /// Right-hand side `Aᵀ R b` of the reweighted normal equations.
    pub fn rhs(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len("WeightedNormalOperator rhs", self.op.rows(), b.len())?;
        match self.residual_weights {
            None => self.op.apply_transpose(b),
            Some(r) => {
                let rb: Vec<f64> = b.iter().zip(r).map(|(bi, ri)| bi * ri).collect();
                self.op.apply_transpose(&rb)
            }
        }
    }
}

impl<A: LinearOperator + ?Sized> SpdOperator for WeightedNormalOperator<'_, A> {
    fn dim(&self) -> usize {
        self.op.cols()
    }

    fn apply_spd(&self, x: &[f64], out: &mut [f64]) {
        let mut ax = self.scratch.borrow_mut();
        self.op.apply_into(x, &mut ax);
        if let Some(r) = self.residual_weights {
            ax.iter_mut().zip(r).for_each(|(v, w)| *v *= w);
        }
        self.op.apply_transpose_into(&ax, out);
        for ((o, d), xi) in out.iter_mut().zip(self.penalty).zip(x) {
            *o += d * xi;
        }
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// True relative residual `‖M x − rhs‖₂ / ‖rhs‖₂` of the returned iterate
    /// (absolute when `rhs = 0`).
    pub relres: f64,
}

/// Conjugate gradients on `M x = rhs` from `x0`, for at most `max_iter`
/// steps or until the recursive relative residual drops to `tol`.
///
/// Reports [`Error::CgBreakdown`] when a search direction has non-positive
/// curvature, which only happens for a matrix that is not SPD.
pub fn cg_solve<M: SpdOperator + ?Sized>(
    m: &M,
    rhs: &[f64],
    x0: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<CgOutcome> {
    let n = m.dim();
    check_len("cg_solve rhs", n, rhs.len())?;
    check_len("cg_solve x0", n, x0.len())?;
    if !(tol >= 0.0) {
        return Err(Error::invalid(format!("cg tolerance must be >= 0, got {tol}")));
    }

    let rhs_norm = norm2(rhs);
    let scale = if rhs_norm > 0.0 { rhs_norm } else { 1.0 };

    let mut x = x0.to_vec();
    let mut mx = vec![0.0; n];
    m.apply_spd(&x, &mut mx);
    let mut r: Vec<f64> = rhs.iter().zip(&mx).map(|(b, v)| b - v).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut mp = vec![0.0; n];
    let mut iterations = 0;

    while iterations < max_iter && rr.sqrt() > tol * scale {
        m.apply_spd(&p, &mut mp);
        let curvature = dot(&p, &mp);
        if !(curvature > 0.0) {
            return Err(Error::CgBreakdown {
                iteration: iterations,
                curvature,
            });
        }
        let alpha = rr / curvature;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &mp, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
        iterations += 1;
    }

    m.apply_spd(&x, &mut mx);
    let true_res: f64 = rhs
        .iter()
        .zip(&mx)
        .map(|(b, v)| (b - v) * (b - v))
        .sum::<f64>()
        .sqrt();
    Ok(CgOutcome {
        x,
        iterations,
        relres: true_res / scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::CsrMatrix;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        let mut m = g.gram();
        for i in 0..n {
            m.set(i, i, m.get(i, i) + 1.0);
        }
        m
    }

    fn direct_solve(m: &DenseMatrix, rhs: &[f64]) -> Vec<f64> {
        let n = m.rows();
        let dm = DMatrix::from_row_slice(n, n, m.as_slice());
        dm.cholesky()
            .expect("oracle matrix is SPD")
            .solve(&DVector::from_column_slice(rhs))
            .iter()
            .copied()
            .collect()
    }

    #[test]
    fn identity_converges_in_one_step() {
        let m = DenseMatrix::identity(4);
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let out = cg_solve(&m, &rhs, &[0.0; 4], 10, 1e-14).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.x, rhs.to_vec());
    }

    #[test]
    fn diagonal_solve() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = cg_solve(&m, &[2.0, 3.0], &[0.0, 0.0], 2, 1e-14).unwrap();
        assert!(out.iterations <= 2);
        assert!((out.x[0] - 1.0).abs() < 1e-12 && (out.x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn random_spd_matches_direct_solve() {
        let m = random_spd(20, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rhs: Vec<f64> = (0..20).map(|_| rng.random::<f64>() - 0.5).collect();
        let out = cg_solve(&m, &rhs, &[0.0; 20], 20, 1e-12).unwrap();
        let x = direct_solve(&m, &rhs);
        for (a, b) in out.x.iter().zip(&x) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn finite_termination_within_n_steps() {
        for (seed, n) in [(1u64, 5usize), (2, 17), (3, 33), (4, 50)] {
            let m = random_spd(n, seed);
            let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let out = cg_solve(&m, &rhs, &vec![0.0; n], n, 1e-14).unwrap();
            assert!(out.relres <= 1e-8, "n={n}: relres {}", out.relres);
        }
    }

    #[test]
    fn energy_norm_error_is_monotone() {
        let n = 12;
        let m = random_spd(n, 21);
        let rhs: Vec<f64> = (0..n).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let xs = direct_solve(&m, &rhs);
        let energy = |x: &[f64]| {
            let e: Vec<f64> = x.iter().zip(&xs).map(|(a, b)| a - b).collect();
            let me = m.apply(&e).unwrap();
            dot(&e, &me).sqrt()
        };
        let mut prev = f64::INFINITY;
        for k in 0..=n {
            let out = cg_solve(&m, &rhs, &vec![0.0; n], k, 1e-300).unwrap();
            let err = energy(&out.x);
            assert!(err <= prev * (1.0 + 1e-12) + 1e-14, "k={k}: {err} > {prev}");
            prev = err;
        }
    }

    #[test]
    fn indefinite_system_reports_breakdown() {
        let m = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        let err = cg_solve(&m, &[0.0, 1.0], &[0.0, 0.0], 5, 1e-12).unwrap_err();
        assert!(matches!(err, Error::CgBreakdown { .. }));
    }

    #[test]
    fn weighted_normal_operator_matches_explicit_matrix() {
        let a = CsrMatrix::from_triplets(
            3,
            2,
            &[(0, 0, 1.0), (0, 1, 2.0), (1, 1, -1.0), (2, 0, 0.5)],
        )
        .unwrap();
        let r = [2.0, 1.0, 4.0];
        let pen = [0.3, 0.7];
        let sys = WeightedNormalOperator::new(&a, Some(&r), &pen).unwrap();
        let ad = a.to_dense();
        let x = [0.4, -1.1];
        let mut out = [0.0; 2];
        sys.apply_spd(&x, &mut out);
        for k in 0..2 {
            let mut expect = pen[k] * x[k];
            for i in 0..3 {
                let axi: f64 = (0..2).map(|j| ad.get(i, j) * x[j]).sum();
                expect += ad.get(i, k) * r[i] * axi;
            }
            assert!((out[k] - expect).abs() < 1e-14);
        }
        assert!(WeightedNormalOperator::new(&a, Some(&r[..2]), &pen).is_err());
    }
}
