mod common;

use std::fs;

use common::{gaussian_matrix, gaussian_vec};
use lpreg::linop::mtx::MtxMatrix;
use lpreg::linop::LinearOperator;
use lpreg::problems::{
    add_noise_and_outliers, compose_awinv, logspace_matrix, multiscale_model, read_bundle, write_bundle, Bundle,
    TomographyConfig, TomographyProblem, WaveletBasis,
};
use lpreg::vector::norm2;

#[test]
fn default_tomography_has_stated_scale() {
    let p = TomographyProblem::generate(&TomographyConfig::default()).unwrap();
    assert_eq!(p.a.rows(), 400);
    assert_eq!(p.a.cols(), 1024);
    assert_eq!(p.x_true.len(), 1024);
    assert_eq!(p.rays.len(), 400);
    assert!(p.a.triplets().all(|(_, _, v)| v >= 0.0));
    for (ray, s) in p.rays.iter().zip(p.a.row_sums()) {
        assert!((ray.length() - s).abs() <= 1e-10);
    }
    assert_eq!(p.noise.outlier_indices.len(), 40);
    let moved: Vec<usize> = (0..400).filter(|&i| p.b_outliers[i] != p.b_noisy[i]).collect();
    assert!(moved.iter().all(|i| p.noise.outlier_indices.contains(i)));
}

#[test]
fn tomography_is_deterministic_per_seed() {
    let cfg = TomographyConfig {
        grid: 16,
        rays: 120,
        seed: 42,
        ..Default::default()
    };
    let p = TomographyProblem::generate(&cfg).unwrap();
    let q = TomographyProblem::generate(&cfg).unwrap();
    assert_eq!(p.a, q.a);
    assert_eq!(p.b_outliers, q.b_outliers);
    let other = TomographyProblem::generate(&TomographyConfig { seed: 43, ..cfg }).unwrap();
    assert_ne!(p.b_outliers, other.b_outliers);
}

#[test]
fn generators_are_deterministic() {
    assert_eq!(logspace_matrix(30, 20, 0.0, -2.5, 8).unwrap(), logspace_matrix(30, 20, 0.0, -2.5, 8).unwrap());
    assert_eq!(multiscale_model(256, 3).unwrap(), multiscale_model(256, 3).unwrap());
    let b = gaussian_vec(50, 1);
    let first = add_noise_and_outliers(&b, 0.05, 0.1, 5.0, 9).unwrap();
    let second = add_noise_and_outliers(&b, 0.05, 0.1, 5.0, 9).unwrap();
    assert_eq!(first.0, second.0);
    assert_eq!(first.1, second.1);
}

#[test]
fn logspace_matrix_has_requested_spectrum() {
    let a = logspace_matrix(40, 30, 0.0, -2.5, 4).unwrap();
    let sv = common::singular_values(&a);
    for (k, s) in sv.iter().enumerate() {
        let expected = 10f64.powf(-2.5 * k as f64 / 29.0);
        assert!((s - expected).abs() <= 1e-10 * expected.max(1e-3), "{k}: {s} vs {expected}");
    }
}

#[test]
fn wavelets_reconstruct_perfectly_and_are_linear() {
    for basis in [WaveletBasis::new_1d(512, 6).unwrap(), WaveletBasis::new_2d(32, 32, 3).unwrap()] {
        let x = gaussian_vec(basis.len(), 2);
        let y = gaussian_vec(basis.len(), 3);
        let back = basis.inverse(&basis.forward(&x).unwrap()).unwrap();
        assert!(x.iter().zip(&back).all(|(u, v)| (u - v).abs() <= 1e-10));
        let sum: Vec<f64> = x.iter().zip(&y).map(|(u, v)| 2.0 * u - v).collect();
        let lhs = basis.forward(&sum).unwrap();
        let (fx, fy) = (basis.forward(&x).unwrap(), basis.forward(&y).unwrap());
        for k in 0..lhs.len() {
            assert!((lhs[k] - (2.0 * fx[k] - fy[k])).abs() <= 1e-10);
        }
    }
}

#[test]
fn composed_operator_is_matrix_times_synthesis() {
    let basis = WaveletBasis::new_1d(64, 3).unwrap();
    let a = gaussian_matrix(20, 64, 5);
    let op = compose_awinv(a.clone(), basis).unwrap();
    let w = gaussian_vec(64, 6);
    let direct = a.apply(&basis.inverse(&w).unwrap()).unwrap();
    let via = op.apply(&w).unwrap();
    assert!(direct.iter().zip(&via).all(|(u, v)| (u - v).abs() <= 1e-12 * norm2(&direct)));
}

#[test]
fn bundle_round_trip_is_byte_stable() {
    let cfg = TomographyConfig {
        grid: 8,
        rays: 30,
        seed: 5,
        ..Default::default()
    };
    let p = TomographyProblem::generate(&cfg).unwrap();
    let bundle = Bundle {
        a: MtxMatrix::Sparse(p.a.clone()),
        b_clean: Some(p.b_clean.clone()),
        b_noisy: Some(p.b_noisy.clone()),
        b_outliers: Some(p.b_outliers.clone()),
        x_true: Some(p.x_true.clone()),
        meta: serde_json::json!({"seed": 5}),
    };
    let dir = tempfile::tempdir().unwrap();
    let (d1, d2) = (dir.path().join("one"), dir.path().join("two"));
    write_bundle(&d1, &bundle).unwrap();
    let back = read_bundle(&d1).unwrap();
    assert_eq!(back.b_outliers.as_deref(), Some(&p.b_outliers[..]));
    assert_eq!(back.x_true.as_deref(), Some(&p.x_true[..]));
    assert_eq!(back.data(), Some(&p.b_outliers[..]));
    write_bundle(&d2, &back).unwrap();
    for name in ["A.mtx", "b_clean.txt", "b_noisy.txt", "b_outliers.txt", "x_true.txt", "meta.json"] {
        assert_eq!(fs::read(d1.join(name)).unwrap(), fs::read(d2.join(name)).unwrap(), "{name}");
    }
}
