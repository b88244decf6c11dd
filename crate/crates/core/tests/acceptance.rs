//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::{LN_2, PI};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use spde_blowup::blowup::{
    certificate_cond1, tau_from_path, BlowupThreshold, LowerSolution, LowerValue, ModelParams,
};
use spde_blowup::cli::{execute, Command, RunArgs};
use spde_blowup::laws::{blowup_density, derive_params, law_scale, sample_brownian, BrownianPath};
use spde_blowup::quadrature::{exp_sinh, tanh_sinh};
use spde_blowup::rpde::{reconstruct_u, simulate_rpde, simulate_spde_em, SchemeConfig, TrajectoryOutcome};
use spde_blowup::spectral::{
    build_laplacian, heat_kernel_ratio_report, kernel_ratio, log_times, richardson,
    solve_eigenpairs, sup_norm, DiscreteOperator, DomainSpec, EigenData, Grid, HeatOrbit,
};
use spde_blowup::special::gamma_tail;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn interval(n: usize, modes: usize) -> (DiscreteOperator, EigenData) {
    let d = DomainSpec::interval(PI).unwrap();
    let op = build_laplacian(&d, &Grid::new(d.clone(), n).unwrap()).unwrap();
    let e = solve_eigenpairs(&op, modes).unwrap();
    (op, e)
}

/// `f = c ψ` with `⟨f, ψ⟩ = mass`.
fn with_mass(e: &EigenData, mass: f64) -> Vec<f64> {
    let psi = e.psi();
    let n2 = e.grid().inner(psi, psi);
    psi.iter().map(|p| mass * p / n2).collect()
}

fn eigen_accuracy() -> Outcome {
    let start = Instant::now();
    let (_, coarse) = interval(512, 2);
    let (_, fine) = interval(1024, 2);
    let l1 = richardson(coarse.lambda1(), fine.lambda1());
    let l2 = richardson(coarse.lambda2(), fine.lambda2());
    let d = DomainSpec::rectangle(PI, PI).unwrap();
    let op = build_laplacian(&d, &Grid::new(d.clone(), 256).unwrap()).unwrap();
    let r1 = solve_eigenpairs(&op, 2).unwrap().lambda1();
    let secs = start.elapsed().as_secs_f64();
    check(
        (l1 - 1.0).abs() <= 1e-6 && (l2 - 4.0).abs() <= 1e-5 && (r1 - 2.0).abs() <= 1e-4 && secs < 5.0,
        format!("lambda1 {l1:.3e} off {:.1e}, lambda2 off {:.1e}, rectangle off {:.1e}, {secs:.2}s",
            (l1 - 1.0).abs(), (l2 - 4.0).abs(), (r1 - 2.0).abs()),
    )
}

struct McRun {
    p_hat: f64,
    stderr: f64,
    csv: Vec<u8>,
    secs: f64,
}

fn blowup_command(dir: &Path, workers: usize) -> Result<McRun, String> {
    let cfg = json!({
        "domain": {"kind": "interval", "lengths": [PI], "n": 64},
        "model": {"beta": 1, "kappa": 1, "Lambda": 1},
        "initial": {"mode": "eigen-mass", "mass": 0.5},
        "sim": {"dt": 1e-3, "horizon": 50, "n_paths": 100000, "seed": 20240601, "workers": workers},
        "blowup": {"v0psi": [0.5]}
    });
    let path = dir.join(format!("blowup-{workers}.json"));
    fs::write(&path, cfg.to_string()).map_err(|e| e.to_string())?;
    let out = dir.join(format!("out-{workers}"));
    let args = RunArgs { config: path, seed: None, out: Some(out.clone()) };
    let start = Instant::now();
    execute(Command::Blowup, &args).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let csv = fs::read(out.join("blowup.csv")).map_err(|e| e.to_string())?;
    let mut rdr = csv::Reader::from_reader(csv.as_slice());
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    let row = rdr.records().next().ok_or("empty blowup.csv")?.map_err(|e| e.to_string())?;
    let get = |k: &str| -> f64 {
        let i = headers.iter().position(|h| h == k).unwrap();
        row[i].parse().unwrap()
    };
    Ok(McRun { p_hat: get("p_hat"), stderr: get("stderr"), csv, secs })
}

fn gamma_law(run: &Result<McRun, String>) -> Outcome {
    let run = run.as_ref().map_err(|e| e.clone())?;
    let exact = 1.0 - (-1.0f64).exp() * 2.5;
    let gap = (run.p_hat - exact).abs();
    let tol = 3.0 * run.stderr + 0.005;
    check(
        gap <= tol,
        format!("p_hat {:.5} vs {exact:.5}, gap {gap:.2e} <= {tol:.2e}, {:.0}s", run.p_hat, run.secs),
    )
}

fn integrate_density(lo: f64, lambda1: f64, kappa: f64, beta: f64, alpha: f64) -> f64 {
    let h = |y: f64| blowup_density(y, lambda1, kappa, beta).unwrap();
    // split at the mode so both pieces are smooth and unimodal
    let mode = law_scale(kappa, beta) / (alpha + 1.0);
    if lo < mode {
        let inner = if lo == 0.0 {
            tanh_sinh(h, 0.0, mode, 1e-13).unwrap()
        } else {
            tanh_sinh(h, lo, mode, 1e-13).unwrap()
        };
        inner + exp_sinh(h, mode, 1e-13).unwrap()
    } else {
        exp_sinh(h, lo, 1e-13).unwrap()
    }
}

fn density_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let beta: f64 = rng.random_range(0.5..3.0);
        let kappa: f64 = rng.random_range(0.3..2.0);
        let alpha: f64 = rng.random_range((1.05 / beta).max(0.5)..10.0);
        let lambda1 = 0.5 * kappa * kappa * (alpha * beta - 1.0);
        let derived = derive_params(beta, kappa, lambda1).map_err(|e| e.to_string())?.alpha;
        let th = BlowupThreshold::new(rng.random_range(0.2..3.0), beta).unwrap();
        let z_star = law_scale(kappa, beta) / th.x_star;
        let total = integrate_density(0.0, lambda1, kappa, beta, derived);
        let tail = integrate_density(th.x_star, lambda1, kappa, beta, derived);
        let expected = 1.0 - gamma_tail(derived, z_star).unwrap();
        worst = worst.max((total - 1.0).abs()).max((tail - expected).abs());
    }
    check(worst <= 1e-8, format!("worst deviation {worst:.2e} over 20 triples"))
}

fn deterministic_dichotomy() -> Outcome {
    let params = ModelParams::power_law(1.0, 1.0, 0.0).unwrap();
    let (op, e) = interval(128, 8);
    let cfg = SchemeConfig::with_dt(1e-3);

    let path = BrownianPath::frozen(10.0, 1e-3).unwrap();
    let big = simulate_rpde(&with_mass(&e, 2.0), &path, &params, &op, &e, &cfg).map_err(|x| x.to_string())?;
    let t_b = big.outcome.blowup_time();
    let tau = tau_from_path(&path, BlowupThreshold::new(2.0, 1.0).unwrap(), 1.0, 0.0, 1.0).tau();
    let tau_ok = tau.is_some_and(|t| (t - LN_2).abs() <= 1e-4);

    let small = BlowupThreshold::new(0.5, 1.0).unwrap();
    let censored = [10.0, 50.0, 200.0].iter().all(|&t| {
        let p = BrownianPath::frozen(t, 1e-3).unwrap();
        tau_from_path(&p, small, 1.0, 0.0, 1.0).tau().is_none()
    });
    let p5 = BrownianPath::frozen(5.0, 1e-3).unwrap();
    let f = with_mass(&e, 0.5);
    let traj = simulate_rpde(&f, &p5, &params, &op, &e, &cfg).map_err(|x| x.to_string())?;
    let completes = traj.outcome == TrajectoryOutcome::CompletedHorizon;
    let decreasing = traj.sup.windows(2).all(|w| w[1] <= w[0]) && traj.sup.last() < traj.sup.first();
    check(
        t_b.is_some_and(|t| t < 10.0) && tau_ok && censored && completes && decreasing,
        format!(
            "t_b {t_b:?}, tau {tau:?} (ln 2 = {LN_2:.6}), small data censored {censored}, completes {completes}, sup decreasing {decreasing}"
        ),
    )
}

fn transformed_vs_direct() -> Outcome {
    let kappa = 0.5;
    let params = ModelParams::power_law(1.0, 1.0, kappa).unwrap();
    let (op, e) = interval(64, 8);
    let f = with_mass(&e, 0.5);
    let cfg = SchemeConfig::with_dt(1e-4);
    let mut worst: f64 = 0.0;
    for seed in 0..10 {
        let path = sample_brownian(1.0, 1e-4, seed, 0).unwrap();
        let v = simulate_rpde(&f, &path, &params, &op, &e, &cfg).map_err(|x| x.to_string())?;
        let u = reconstruct_u(&v, &path, kappa).map_err(|x| x.to_string())?;
        let em = simulate_spde_em(&f, &path, &params, &op, &e, &cfg).map_err(|x| x.to_string())?;
        if u.snapshots.len() != em.snapshots.len() {
            return Err(format!("seed {seed}: snapshot schedules differ"));
        }
        for (a, b) in u.snapshots.iter().zip(&em.snapshots) {
            let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            worst = worst.max(sup_norm(&diff) / b.sup());
        }
    }
    check(worst <= 0.05, format!("largest relative sup difference {worst:.2e} over 10 seeds"))
}

fn lower_domination() -> Outcome {
    let params = ModelParams::power_law(1.0, 1.0, 1.0).unwrap();
    let (op, e) = interval(64, 8);
    let f = with_mass(&e, 0.5);
    let th = BlowupThreshold::new(0.5, 1.0).unwrap();
    let cfg = SchemeConfig { reaction_control: Some(0.01), ..SchemeConfig::with_dt(1e-3) };
    let mut worst = f64::INFINITY;
    let mut blowups = 0;
    for k in 0..100u64 {
        // every thousandth path of the Monte Carlo run
        let path = sample_brownian(50.0, 1e-3, 20240601, 1000 * k).unwrap();
        let traj = simulate_rpde(&f, &path, &params, &op, &e, &cfg).map_err(|x| x.to_string())?;
        if traj.outcome.blowup_time().is_some() {
            blowups += 1;
        }
        let low = LowerSolution::new(&path, th, &params, e.lambda1());
        for (t, m) in traj.times.iter().zip(&traj.mass) {
            let Some(j) = path.index_of(*t) else { continue };
            if let LowerValue::Finite(i) = low.at_index(j) {
                worst = worst.min(m / i);
            }
        }
    }
    check(worst >= 0.98, format!("min v(t,psi)/I(t) = {worst:.4} over 100 paths ({blowups} numerical blowups)"))
}

fn certificate_soundness() -> Outcome {
    let params = ModelParams::power_law(1.0, 1.0, 1.0).unwrap();
    let (op, e) = interval(1024, 8);
    let f = e.psi().to_vec();
    let path = BrownianPath::frozen(10.0, 1e-4).unwrap();
    let cert = certificate_cond1(&path, &f, &params, &e).map_err(|x| x.to_string())?;
    let j_ok = (cert.integral - 1.0 / 3.0).abs() <= 1e-6 && cert.is_certified();
    let cfg = SchemeConfig { snapshot_limit: 2001, ..SchemeConfig::with_dt(1e-4) };
    let traj = simulate_rpde(&f, &path, &params, &op, &e, &cfg).map_err(|x| x.to_string())?;
    let orbit = HeatOrbit::new(&e, &f).map_err(|x| x.to_string())?;
    let mut worst: f64 = 0.0;
    for s in &traj.snapshots {
        let b = cert.b_at(s.t).ok_or(format!("no envelope at t = {}", s.t))?;
        let heat = orbit.at(s.t);
        let decay = (-0.5 * s.t).exp();
        for (v, h) in s.values.iter().zip(&heat) {
            worst = worst.max(v / (b * decay * h));
        }
    }
    let reached = traj.final_snapshot().t;
    check(
        j_ok && worst <= 1.02 && (reached - 10.0).abs() < 1e-9,
        format!("J = {:.9} ({:?}), max v/envelope = {worst:.5} up to t = {reached}", cert.integral, cert.verdict),
    )
}

fn heat_kernel_sandwich() -> Outcome {
    let (_, e) = interval(512, 200);
    let times = log_times(1e-2, 10.0, 40);
    let report = heat_kernel_ratio_report(&e, &times).map_err(|x| x.to_string())?;
    let min_ratio = report.ratio.iter().cloned().fold(f64::INFINITY, f64::min);
    let r5 = kernel_ratio(&e, 5.0);
    check(
        min_ratio >= 1.0 && report.fitted_c.is_finite() && report.all_pass() && (r5 - 1.0).abs() <= 1e-3,
        format!("min ratio {min_ratio:.6}, fitted c {:.4}, all pass {}, ratio(5) - 1 = {:.2e}",
            report.fitted_c, report.all_pass(), r5 - 1.0),
    )
}

fn determinism(a: &Result<McRun, String>, b: &Result<McRun, String>) -> Outcome {
    let (a, b) = (a.as_ref().map_err(|e| e.clone())?, b.as_ref().map_err(|e| e.clone())?);
    check(
        a.p_hat == b.p_hat && a.csv == b.csv,
        format!("1 worker p_hat {}, 3 workers p_hat {}, csv identical {}", a.p_hat, b.p_hat, a.csv == b.csv),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let single = blowup_command(dir.path(), 1);
    let multi = blowup_command(dir.path(), 3);
    let criteria: Vec<Criterion> = vec![
        ("eigen accuracy", Box::new(eigen_accuracy)),
        ("gamma-law agreement", Box::new(|| gamma_law(&single))),
        ("density correctness", Box::new(density_correctness)),
        ("deterministic dichotomy", Box::new(deterministic_dichotomy)),
        ("transformed vs direct scheme", Box::new(transformed_vs_direct)),
        ("lower-solution domination", Box::new(lower_domination)),
        ("certificate soundness", Box::new(certificate_soundness)),
        ("heat-kernel sandwich", Box::new(heat_kernel_sandwich)),
        ("determinism", Box::new(|| determinism(&single, &multi))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(d) => println!("criterion {} {name}: PASS ({d})", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({d})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
