//! Straight-ray tomography on the unit square.
//!
//! The square is divided into `g × g` pixels; pixel `(row, col)` covers
//! `[col/g, (col+1)/g) × [row/g, (row+1)/g)` and has index `row·g + col`.
//! Row `i` of the sensitivity matrix holds the length of ray `i` inside
//! each pixel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::noise::{add_noise_and_outliers, NoiseMeta};
use crate::error::{Error, Result};
use crate::linop::{CsrMatrix, LinearOperator};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub start: [f64; 2],
    pub end: [f64; 2],
}

impl Ray {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }
}

const MIN_SEGMENT: f64 = 1e-14;

/// `(pixel, length)` pairs of the pixels crossed by `ray`, in order along the
/// ray. Exact: the ray is cut at every grid line it crosses.
pub fn trace_ray(g: usize, ray: &Ray) -> Vec<(usize, f64)> {
    let [x0, y0] = ray.start;
    let (dx, dy) = (ray.end[0] - x0, ray.end[1] - y0);
    let len = ray.length();
    let gf = g as f64;

    let mut ts = vec![0.0, 1.0];
    for (origin, delta) in [(x0, dx), (y0, dy)] {
        if delta != 0.0 {
            for k in 0..=g {
                let t = (k as f64 / gf - origin) / delta;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut out: Vec<(usize, f64)> = Vec::new();
    for w in ts.windows(2) {
        let seg = (w[1] - w[0]) * len;
        if seg < MIN_SEGMENT {
            continue;
        }
        let tm = 0.5 * (w[0] + w[1]);
        let xm = x0 + tm * dx;
        let ym = y0 + tm * dy;
        if !(0.0..=1.0).contains(&xm) || !(0.0..=1.0).contains(&ym) {
            continue;
        }
        let col = ((xm * gf) as usize).min(g - 1);
        let row = ((ym * gf) as usize).min(g - 1);
        let pix = row * g + col;
        match out.last_mut() {
            Some((p, l)) if *p == pix => *l += seg,
            _ => out.push((pix, seg)),
        }
    }
    out
}

/// Side 0..4 (bottom, right, top, left) and position along it.
fn boundary_point(u: f64) -> (usize, [f64; 2]) {
    let side = (u.floor() as usize).min(3);
    let f = u - side as f64;
    let p = match side {
        0 => [f, 0.0],
        1 => [1.0, f],
        2 => [1.0 - f, 1.0],
        _ => [0.0, 1.0 - f],
    };
    (side, p)
}

/// `m` rays between random boundary points on different sides, at least
/// `1/g` long, and their `m × g²` sensitivity matrix.
pub fn build_tomography(g: usize, m: usize, seed: u64) -> Result<(Vec<Ray>, CsrMatrix)> {
    if g < 2 || m < 1 {
        return Err(Error::invalid(format!("need grid >= 2 and rays >= 1, got {g} and {m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rays = Vec::with_capacity(m);
    while rays.len() < m {
        let (s1, p1) = boundary_point(rng.random_range(0.0..4.0));
        let (s2, p2) = boundary_point(rng.random_range(0.0..4.0));
        let ray = Ray { start: p1, end: p2 };
        if s1 == s2 || ray.length() < 1.0 / g as f64 {
            continue;
        }
        rays.push(ray);
    }
    let a = sensitivity_matrix(g, &rays)?;
    Ok((rays, a))
}

pub fn sensitivity_matrix(g: usize, rays: &[Ray]) -> Result<CsrMatrix> {
    let mut triplets = Vec::new();
    for (i, ray) in rays.iter().enumerate() {
        for (j, l) in trace_ray(g, ray) {
            triplets.push((i, j, l));
        }
    }
    CsrMatrix::from_triplets(rays.len(), g * g, &triplets)
}

/// `±amplitude` in `block × block` tiles, `+` in the tile at the origin.
pub fn checkerboard(g: usize, block: usize, amplitude: f64) -> Result<Vec<f64>> {
    if block == 0 || !g.is_multiple_of(block) {
        return Err(Error::invalid(format!("block {block} does not divide grid {g}")));
    }
    Ok((0..g * g)
        .map(|k| {
            let (row, col) = (k / g, k % g);
            if (row / block + col / block).is_multiple_of(2) {
                amplitude
            } else {
                -amplitude
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TomographyConfig {
    pub grid: usize,
    pub rays: usize,
    pub block: usize,
    pub amplitude: f64,
    pub gauss_rel_std: f64,
    pub outlier_frac: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        TomographyConfig {
            grid: 32,
            rays: 400,
            block: 4,
            amplitude: 0.02,
            gauss_rel_std: 0.05,
            outlier_frac: 0.10,
            outlier_scale: 5.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TomographyProblem {
    pub config: TomographyConfig,
    pub rays: Vec<Ray>,
    pub a: CsrMatrix,
    pub x_true: Vec<f64>,
    pub b_clean: Vec<f64>,
    pub b_noisy: Vec<f64>,
    pub b_outliers: Vec<f64>,
    pub noise: NoiseMeta,
}

impl TomographyProblem {
    /// Checkerboard truth, exact data, Gaussian noise and outliers, all from
    /// `cfg.seed`.
    pub fn generate(cfg: &TomographyConfig) -> Result<Self> {
        let (rays, a) = build_tomography(cfg.grid, cfg.rays, cfg.seed)?;
        let x_true = checkerboard(cfg.grid, cfg.block, cfg.amplitude)?;
        let b_clean = a.apply(&x_true)?;
        let (b_noisy, b_outliers, noise) = add_noise_and_outliers(
            &b_clean,
            cfg.gauss_rel_std,
            cfg.outlier_frac,
            cfg.outlier_scale,
            cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15),
        )?;
        Ok(TomographyProblem {
            config: *cfg,
            rays,
            a,
            x_true,
            b_clean,
            b_noisy,
            b_outliers,
            noise,
        })
    }
}
