use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use lpreg::continuation::{
    default_lambda_range, discrepancy_stop, lambda_grid, pick_corner, run_continuation, ContinuationOptions,
};
use lpreg::linop::mtx::{read_vector, MtxMatrix};
use lpreg::linop::spectral_norm_estimate;
use lpreg::problems::{
    add_noise_and_outliers, compose_awinv, logspace_matrix, read_bundle, sparse_spikes, write_bundle, Bundle,
    TomographyConfig, TomographyProblem, WaveletBasis,
};
use lpreg::vector::{dot, norm2, norm_inf, rms};
use lpreg::{LinearOperator, SolverConfig, SolverKind};
use serde_json::json;

use crate::error::{usage, Classify, Result};
use crate::options::effective;
use crate::output::{ensure_dir, meta, write_json, write_text, write_trace, write_vec, Summary};
use crate::{CompareArgs, GenMatrix, GenTomo, LcurveArgs, SolveArgs, TomoArgs};

/// `σ_max/σ_min` by power iteration on `AᵀA` and on `σ_max²I − AᵀA`;
/// infinite for wide matrices.
fn cond_estimate(a: &dyn LinearOperator) -> f64 {
    let n = a.cols();
    if a.rows() < n {
        return f64::INFINITY;
    }
    let smax = spectral_norm_estimate(a, 200, 1);
    let s2 = smax * smax;
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 1009) as f64 / 1009.0 - 0.5).collect();
    let mut shift = 0.0;
    for _ in 0..500 {
        let vn = norm2(&v);
        if vn == 0.0 {
            break;
        }
        v.iter_mut().for_each(|x| *x /= vn);
        let ata = a.apply_transpose(&a.apply(&v).expect("length n")).expect("length m");
        let w: Vec<f64> = v.iter().zip(&ata).map(|(x, y)| s2 * x - y).collect();
        shift = dot(&v, &w);
        v = w;
    }
    let smin = (s2 - shift).max(0.0).sqrt();
    if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    }
}

pub fn gen_tomo(a: &GenTomo) -> Result<()> {
    let cfg = TomographyConfig {
        grid: a.grid,
        rays: a.rays,
        block: a.block,
        amplitude: a.amplitude,
        gauss_rel_std: a.noise,
        outlier_frac: a.outlier_frac,
        outlier_scale: a.outlier_scale,
        seed: a.seed,
    };
    let p = TomographyProblem::generate(&cfg).usage()?;
    let (m, n) = (p.a.rows(), p.a.cols());
    let cond = cond_estimate(&p.a);
    let bundle = Bundle {
        a: MtxMatrix::Sparse(p.a),
        b_clean: Some(p.b_clean),
        b_noisy: Some(p.b_noisy),
        b_outliers: Some(p.b_outliers),
        x_true: Some(p.x_true),
        meta: json!({
            "generator": "tomography",
            "m": m,
            "n": n,
            "cond_estimate": cond.is_finite().then_some(cond),
            "tomography": cfg,
            "noise": p.noise,
        }),
    };
    let dir = a.common.out_dir();
    write_bundle(&dir, &bundle).at(&dir)?;
    println!("tomography m={m} n={n} cond={cond:.3e} seed={} -> {}", a.seed, dir.display());
    Ok(())
}

pub fn gen_matrix(a: &GenMatrix) -> Result<()> {
    let [hi, lo] = a.decay[..] else {
        return Err(usage("--decay takes two exponents, e.g. 0,-2.5"));
    };
    let mat = logspace_matrix(a.m, a.n, hi, lo, a.seed).usage()?;
    let x = sparse_spikes(a.n, a.sparsity, a.seed.wrapping_add(1)).usage()?;
    let clean = mat.apply(&x).usage()?;
    let (noisy, _, noise) = add_noise_and_outliers(&clean, a.noise, 0.0, 0.0, a.seed.wrapping_add(2)).usage()?;
    let cond = 10f64.powf((hi - lo).abs());
    let bundle = Bundle {
        a: MtxMatrix::Dense(mat),
        b_clean: Some(clean),
        b_noisy: Some(noisy),
        b_outliers: None,
        x_true: Some(x),
        meta: json!({
            "generator": "logspace",
            "m": a.m,
            "n": a.n,
            "decay": a.decay,
            "cond": cond,
            "sparsity": a.sparsity,
            "seed": a.seed,
            "noise": noise,
        }),
    };
    let dir = a.common.out_dir();
    write_bundle(&dir, &bundle).at(&dir)?;
    println!("logspace m={} n={} cond={cond:.3e} seed={} -> {}", a.m, a.n, a.seed, dir.display());
    Ok(())
}

/// The bundle, the data vector picked by `--data`, and its truth.
fn load(bundle: Option<&Path>, data: Option<&str>) -> Result<(Bundle, Vec<f64>)> {
    let dir = bundle.ok_or_else(|| usage("--bundle is required"))?;
    let bundle = read_bundle(dir).at(dir)?;
    let b = match data {
        Some(which) => bundle.data_named(which).usage()?.to_vec(),
        None => bundle
            .data()
            .ok_or_else(|| usage(format!("{}: bundle has no data vector", dir.display())))?
            .to_vec(),
    };
    if b.len() != bundle.a.rows() {
        return Err(usage(format!("data has {} entries but A has {} rows", b.len(), bundle.a.rows())));
    }
    Ok((bundle, b))
}

/// Either the bundle matrix or, with wavelet levels, `A·W⁻¹` acting on
/// coefficients.
struct Problem {
    op: Box<dyn LinearOperator>,
    basis: Option<WaveletBasis>,
}

impl Problem {
    fn new(a: MtxMatrix, levels: Option<usize>) -> Result<Self> {
        match levels {
            None => Ok(Problem {
                op: Box::new(a),
                basis: None,
            }),
            Some(l) => {
                let basis = WaveletBasis::new_1d(a.cols(), l).usage()?;
                Ok(Problem {
                    op: Box::new(compose_awinv(a, basis).usage()?),
                    basis: Some(basis),
                })
            }
        }
    }

    fn to_model(&self, x: &[f64]) -> lpreg::Result<Vec<f64>> {
        match &self.basis {
            Some(b) => b.inverse(x),
            None => Ok(x.to_vec()),
        }
    }
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let kind = a.solver.unwrap_or(SolverKind::IrlsCg);
    a.knobs.check_applicable(&[kind])?;
    let lambda = a.lambda.ok_or_else(|| usage("--lambda is required"))?;
    let cfg = a.knobs.build(kind, lambda, 1.0)?;
    let (bundle, b) = load(a.bundle.as_deref(), a.data.as_deref())?;
    let prob = Problem::new(bundle.a.clone(), a.wavelet_levels)?;
    let x0 = match &a.x0 {
        Some(path) => {
            let v = read_vector(path).at(path)?;
            if v.len() != prob.op.cols() {
                return Err(usage(format!("--x0 has {} entries, expected {}", v.len(), prob.op.cols())));
            }
            match &prob.basis {
                Some(basis) => basis.forward(&v).usage()?,
                None => v,
            }
        }
        None => vec![0.0; prob.op.cols()],
    };

    let out_dir = a.common.out_dir();
    ensure_dir(&out_dir)?;
    let start = Instant::now();
    let res = cfg.solve(&*prob.op, &b, &x0).solver()?;
    let wall = start.elapsed().as_secs_f64();
    let model = prob.to_model(&res.x).solver()?;
    let summary = Summary::new(&cfg, &*prob.op, &b, &res.x, &model, bundle.x_true.as_deref(), res.trace.len(), wall)?;

    write_vec(&out_dir.join("x.txt"), &model)?;
    if prob.basis.is_some() {
        write_vec(&out_dir.join("w.txt"), &res.x)?;
    }
    write_trace(&out_dir.join("trace.jsonl"), &res.trace)?;
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_json(&out_dir.join("meta.json"), &meta("solve", effective(a), &[cfg]))?;
    println!("{}", summary.line());
    Ok(())
}

pub fn lcurve(a: &LcurveArgs) -> Result<()> {
    let kind = a.solver.unwrap_or(SolverKind::ConvCg);
    a.knobs.check_applicable(&[kind])?;
    if a.knobs.iters.is_some() {
        return Err(usage("--iters has no effect here; use --iters-per-lambda"));
    }
    let (bundle, b) = load(a.bundle.as_deref(), a.data.as_deref())?;
    let prob = Problem::new(bundle.a.clone(), a.wavelet_levels)?;
    let atb = norm_inf(&prob.op.apply_transpose(&b).usage()?);
    let (dmax, dmin) = default_lambda_range(atb);
    let hi = a.lambda_max.unwrap_or(dmax);
    let lo = a.lambda_min.unwrap_or(hi * dmin / dmax);
    let grid = match a.grid_count.unwrap_or(50) {
        0 => return Err(usage("--grid-count must be at least 1")),
        1 => vec![hi],
        count => lambda_grid(hi, lo, count).usage()?,
    };
    let cfg = a.knobs.build(kind, hi, 1.0)?;
    let opts = ContinuationOptions {
        iters_per_lambda: a.iters_per_lambda.unwrap_or(5),
        keep_solutions: true,
        carry_smoothing: a.carry_smoothing.unwrap_or(false),
        smooth_curvature: a.smooth_curvature.unwrap_or(false),
    };

    let out_dir = a.common.out_dir();
    ensure_dir(&out_dir)?;
    let start = Instant::now();
    let mut lc = run_continuation(&cfg, &*prob.op, &b, &grid, &opts).solver()?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(truth) = bundle.x_true.as_deref() {
        lc.compute_errors(truth, |x| prob.to_model(x)).usage()?;
    }
    let corner = pick_corner(&lc);
    let discrepancy = a.noise_norm.map(|nn| discrepancy_stop(&lc, nn)).transpose().usage()?;
    let sols = lc.solutions.as_ref().expect("solutions kept");
    let last = sols.last().expect("non-empty grid");

    let mut report = json!({
        "corner": {"index": corner.index, "lambda": corner.lambda, "distinct": corner.distinct},
        "wall_time_s": wall,
    });
    if let Some(errs) = &lc.errors {
        let (i, e) = errs.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
        report["best_error"] = json!({"index": i, "lambda": lc.lambdas[i], "percent_error": e});
    }
    if let Some(d) = discrepancy {
        report["discrepancy"] = json!({"index": d.index, "lambda": d.lambda, "reached": d.reached});
    }

    let mut csv = Vec::new();
    lc.write_csv(&mut csv).solver()?;
    write_text(&out_dir.join("lcurve.csv"), &String::from_utf8_lossy(&csv))?;
    write_trace(&out_dir.join("trace.jsonl"), &lc.trace)?;
    write_json(&out_dir.join("corner.json"), &report)?;
    write_vec(&out_dir.join("x.txt"), &prob.to_model(last).solver()?)?;
    write_vec(&out_dir.join("x_corner.txt"), &prob.to_model(&sols[corner.index]).solver()?)?;
    let final_cfg = cfg.with_lambda(*grid.last().expect("non-empty grid"));
    let summary = Summary::new(
        &final_cfg,
        &*prob.op,
        &b,
        last,
        &prob.to_model(last).solver()?,
        bundle.x_true.as_deref(),
        lc.trace.len(),
        wall,
    )?;
    write_json(&out_dir.join("summary.json"), &summary)?;
    write_json(&out_dir.join("meta.json"), &meta("lcurve", effective(a), &[cfg]))?;

    if corner.distinct {
        println!("corner at index {} (lambda = {:.6e})", corner.index, corner.lambda);
    } else {
        println!("no distinct corner; reporting index {} (lambda = {:.6e})", corner.index, corner.lambda);
    }
    Ok(())
}

pub fn tomo(a: &TomoArgs) -> Result<()> {
    let kind = a.solver.unwrap_or(SolverKind::IrlsCg);
    if kind == SolverKind::Fista {
        return Err(usage("tomo compares residual exponents; fista fits l = 2 only"));
    }
    if a.knobs.l.is_some() {
        return Err(usage("use --l-values to choose residual exponents"));
    }
    a.knobs.check_applicable(&[kind])?;
    let defaults = TomographyConfig::default();
    let cfg = TomographyConfig {
        grid: a.grid.unwrap_or(defaults.grid),
        rays: a.rays.unwrap_or(defaults.rays),
        block: a.block.unwrap_or(defaults.block),
        amplitude: a.amplitude.unwrap_or(defaults.amplitude),
        gauss_rel_std: a.noise.unwrap_or(defaults.gauss_rel_std),
        outlier_frac: a.outlier_frac.unwrap_or(defaults.outlier_frac),
        outlier_scale: a.outlier_scale.unwrap_or(defaults.outlier_scale),
        seed: a.seed.unwrap_or(defaults.seed),
    };
    let p = TomographyProblem::generate(&cfg).usage()?;
    let b = match a.data.as_deref().unwrap_or("outliers") {
        "clean" => &p.b_clean,
        "noisy" => &p.b_noisy,
        "outliers" => &p.b_outliers,
        other => return Err(usage(format!("unknown data vector '{other}'"))),
    };
    let ls = a.l_values.clone().unwrap_or_else(|| vec![1.0, 1.8, 2.0]);
    if ls.is_empty() {
        return Err(usage("--l-values is empty"));
    }
    let grid = match a.lambda {
        Some(l) => vec![l],
        None => lambda_grid(
            a.lambda_max.unwrap_or(10.0),
            a.lambda_min.unwrap_or(1e-3),
            a.grid_count.unwrap_or(17),
        )
        .usage()?,
    };
    let mut knobs = a.knobs.clone();
    if kind == SolverKind::IrlsCg {
        knobs.iters.get_or_insert(40);
        knobs.inner_iters.get_or_insert(20);
    }

    let out_dir = a.common.out_dir();
    ensure_dir(&out_dir)?;
    let zero = vec![0.0; p.a.cols()];
    let mut rows = String::from("l,lambda,rmse,residual_norm,F\n");
    let mut best_rows = String::from("l,lambda,rmse\n");
    let mut best_cfgs = Vec::new();
    for &l in &ls {
        let mut k = knobs.clone();
        k.l = Some(l);
        let mut best: Option<(f64, SolverConfig, Vec<f64>)> = None;
        for &lambda in &grid {
            let cfg = k.build(kind, lambda, 2.0)?;
            let x = cfg.solve(&p.a, b, &zero).solver()?.x;
            let s = Summary::new(&cfg, &p.a, b, &x, &x, Some(&p.x_true), 0, 0.0)?;
            let rmse = s.rmse.expect("truth given");
            writeln!(rows, "{l},{lambda:e},{rmse:e},{:e},{:e}", s.residual_norm, s.f).expect("string write");
            if best.as_ref().is_none_or(|(r, _, _)| rmse < *r) {
                best = Some((rmse, cfg, x));
            }
        }
        let (rmse, cfg, x) = best.expect("non-empty grid");
        writeln!(best_rows, "{l},{:e},{rmse:e}", cfg.lambda()).expect("string write");
        println!("l = {l}: best rmse {rmse:.6e} at lambda {:.4e}", cfg.lambda());
        write_vec(&out_dir.join(format!("x_l{l}.txt")), &x)?;
        best_cfgs.push(cfg);
    }
    println!("zero-model rmse {:.6e}", rms(&p.x_true));
    write_text(&out_dir.join("tomo.csv"), &rows)?;
    write_text(&out_dir.join("tomo_best.csv"), &best_rows)?;
    write_vec(&out_dir.join("x_true.txt"), &p.x_true)?;
    write_json(&out_dir.join("meta.json"), &meta("tomo", effective(a), &best_cfgs))?;
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct TrialRun {
    lambdas: Vec<f64>,
    /// `functional[s][k]`: F of solver `s` after λ-step `k`.
    functional: Vec<Vec<f64>>,
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let mut solvers = a
        .solvers
        .clone()
        .unwrap_or_else(|| vec![SolverKind::Fista, SolverKind::IrlsCg, SolverKind::ConvCg]);
    let mut seen = Vec::new();
    solvers.retain(|s| {
        let fresh = !seen.contains(s);
        seen.push(*s);
        fresh
    });
    if solvers.len() < 2 {
        return Err(usage("compare needs at least two distinct solvers"));
    }
    a.knobs.check_applicable(&solvers)?;
    if a.knobs.iters.is_some() {
        return Err(usage("--iters has no effect here; use --iters-per-lambda"));
    }
    let trials = a.trials.unwrap_or(10);
    let (m, n) = (a.m.unwrap_or(300), a.n.unwrap_or(300));
    let decay = a.decay.clone().unwrap_or_else(|| vec![0.0, -2.5]);
    let [hi, lo] = decay[..] else {
        return Err(usage("--decay takes two exponents, e.g. 0,-2.5"));
    };
    let sparsity = a.sparsity.unwrap_or(15);
    let noise = a.noise.unwrap_or(0.01);
    let grid_count = a.grid_count.unwrap_or(50);
    let steps = a.steps.unwrap_or(10);
    if trials == 0 || steps == 0 || steps > grid_count {
        return Err(usage(format!(
            "need trials >= 1 and 1 <= steps <= grid-count (got {trials}, {steps}, {grid_count})"
        )));
    }
    let seed = a.seed.unwrap_or(0);
    let configs = solvers
        .iter()
        .map(|&k| a.knobs.build(k, 1.0, 1.0))
        .collect::<Result<Vec<_>>>()?;
    let opts = ContinuationOptions {
        iters_per_lambda: a.iters_per_lambda.unwrap_or(3),
        carry_smoothing: a.carry_smoothing.unwrap_or(false),
        ..Default::default()
    };

    // one instance per trial, shared by every solver
    let run_trial = |t: usize| -> Result<TrialRun> {
        let s = seed.wrapping_add(t as u64);
        let mat = logspace_matrix(m, n, hi, lo, s).usage()?;
        let x = sparse_spikes(n, sparsity, s.wrapping_add(1)).usage()?;
        let clean = mat.apply(&x).usage()?;
        let (b, _, _) = add_noise_and_outliers(&clean, noise, 0.0, 0.0, s.wrapping_add(2)).usage()?;
        let (gmax, gmin) = default_lambda_range(norm_inf(&mat.apply_transpose(&b).usage()?));
        let grid = lambda_grid(gmax, gmin, grid_count.max(2)).usage()?;
        let grid = &grid[..steps];
        let functional = configs
            .iter()
            .map(|c| run_continuation(c, &mat, &b, grid, &opts).map(|lc| lc.functional))
            .collect::<lpreg::Result<Vec<_>>>()
            .solver()?;
        Ok(TrialRun {
            lambdas: grid.to_vec(),
            functional,
        })
    };
    let workers = std::thread::available_parallelism().map_or(1, |w| w.get()).min(trials);
    let mut runs: Vec<Option<Result<TrialRun>>> = (0..trials).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<_> = (0..workers)
            .map(|w| {
                let run_trial = &run_trial;
                scope.spawn(move || (w..trials).step_by(workers).map(|t| (t, run_trial(t))).collect::<Vec<_>>())
            })
            .collect();
        for c in chunks {
            for (t, r) in c.join().expect("trial worker panicked") {
                runs[t] = Some(r);
            }
        }
    });
    let runs = runs.into_iter().map(|r| r.expect("every trial ran")).collect::<Result<Vec<_>>>()?;

    let out_dir = a.common.out_dir();
    ensure_dir(&out_dir)?;
    let mut all = String::from("solver,trial,step,lambda,F\n");
    for (t, run) in runs.iter().enumerate() {
        for (si, kind) in solvers.iter().enumerate() {
            for (k, f) in run.functional[si].iter().enumerate() {
                writeln!(all, "{kind},{t},{k},{:e},{f:e}", run.lambdas[k]).expect("string write");
            }
        }
    }
    let names: Vec<&str> = solvers.iter().map(|s| s.name()).collect();
    let mut med = format!("step,lambda_median,{}\n", names.join(","));
    println!("step  {}", names.iter().map(|s| format!("{s:>12}")).collect::<String>());
    for k in 0..steps {
        let lam = median(&mut runs.iter().map(|r| r.lambdas[k]).collect::<Vec<_>>());
        let meds: Vec<f64> = (0..solvers.len())
            .map(|si| median(&mut runs.iter().map(|r| r.functional[si][k]).collect::<Vec<_>>()))
            .collect();
        let cells: Vec<String> = meds.iter().map(|v| format!("{v:e}")).collect();
        writeln!(med, "{k},{lam:e},{}", cells.join(",")).expect("string write");
        println!("{k:>4}  {}", meds.iter().map(|v| format!("{v:>12.5e}")).collect::<String>());
    }
    write_text(&out_dir.join("compare.csv"), &all)?;
    write_text(&out_dir.join("compare_median.csv"), &med)?;
    write_json(&out_dir.join("meta.json"), &meta("compare", effective(a), &configs))?;
    Ok(())
}
