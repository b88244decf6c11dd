//! The five commands. Each one computes everything in memory and returns the files
//! to write, so that a failing command leaves no partial output behind.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::blowup::{
    analytic_blowup_bound, certificate_cond1, certificate_cond2_saturation,
    certificate_cond3_heat_kernel, dichotomy_from_mass, mc_blowup_probability, run_pool,
    tau_from_path, BlowupThreshold, CertificateReport, Cond3Mode, Dichotomy, HeatKernelInputs,
    LowerSolution, LowerValue, McConfig, ModelParams, Verdict,
};
use crate::error::{Error, Result};
use crate::laws::{sample_brownian, BrownianPath};
use crate::rpde::{
    reconstruct_u, simulate_rpde, simulate_spde_em, TrajectoryOutcome, TrajectoryResult,
};
use crate::spectral::{
    build_laplacian, heat_kernel_ratio_report, log_times, richardson, solve_eigenpairs, sup_norm,
    DiscreteOperator, DomainKind, EigenData, Grid, HeatKernelBoundReport, MIN_CELLS,
};

use super::config::{CSource, CertificateChoice, Cond3Choice, Format, Lambda1Source, RunConfig};

/// Tolerances reported in `consistency.csv`.
pub const LOWER_BOUND_FACTOR: f64 = 0.98;
pub const EM_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Eigen,
    Blowup,
    Simulate,
    Certify,
    HeatKernel,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen => "eigen",
            Command::Blowup => "blowup",
            Command::Simulate => "simulate",
            Command::Certify => "certify",
            Command::HeatKernel => "heat-kernel",
        }
    }
}

/// Resolved inputs of one run.
pub struct RunContext {
    pub config: RunConfig,
    /// Directory that relative paths inside the config refer to.
    pub base: PathBuf,
}

/// Named file contents, in write order.
#[derive(Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    formats: Vec<Format>,
}

impl Artifacts {
    fn new(formats: &[Format]) -> Self {
        Self { files: Vec::new(), formats: formats.to_vec() }
    }

    fn raw(&mut self, name: String, bytes: Vec<u8>) {
        self.files.push((name, bytes));
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.raw(name.to_string(), bytes);
        Ok(())
    }

    fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// A table in every configured format, as `stem.csv` and/or `stem.json`.
    fn table<T: Serialize>(&mut self, stem: &str, rows: &[T]) -> Result<()> {
        if self.formats.contains(&Format::Csv) {
            let bytes = Self::csv_bytes(rows)?;
            self.raw(format!("{stem}.csv"), bytes);
        }
        if self.formats.contains(&Format::Json) {
            self.json(&format!("{stem}.json"), rows)?;
        }
        Ok(())
    }
}

struct Setup {
    op: DiscreteOperator,
    eigen: EigenData,
}

fn setup(cfg: &RunConfig, modes: usize) -> Result<Setup> {
    let grid = cfg.grid()?;
    let op = build_laplacian(&cfg.domain_spec()?, &grid)?;
    let eigen = solve_eigenpairs(&op, modes)?;
    Ok(Setup { op, eigen })
}

pub fn run_command(cmd: Command, ctx: &RunContext) -> Result<Artifacts> {
    match cmd {
        Command::Eigen => cmd_eigen(ctx),
        Command::Blowup => cmd_blowup(ctx),
        Command::Simulate => cmd_simulate(ctx),
        Command::Certify => cmd_certify(ctx),
        Command::HeatKernel => cmd_heat_kernel(ctx),
    }
}

#[derive(Serialize)]
struct EigenSummary {
    kind: DomainKind,
    lengths: Vec<f64>,
    n: usize,
    lambda1: f64,
    lambda2: f64,
    /// On `n/2` cells, when that grid is admissible.
    lambda1_coarse: Option<f64>,
    lambda2_coarse: Option<f64>,
    lambda1_extrapolated: Option<f64>,
    lambda2_extrapolated: Option<f64>,
    analytic_lambda1: f64,
    analytic_lambda2: f64,
}

fn analytic_lambda2(cfg: &RunConfig) -> Result<f64> {
    let d = cfg.domain_spec()?;
    Ok(match d.kind() {
        DomainKind::Interval => d.analytic_eigenvalue(&[2]),
        DomainKind::Rectangle => d.analytic_eigenvalue(&[2, 1]).min(d.analytic_eigenvalue(&[1, 2])),
    })
}

pub fn cmd_eigen(ctx: &RunContext) -> Result<Artifacts> {
    let cfg = &ctx.config;
    let fine = setup(cfg, 2)?;
    let (l1, l2) = (fine.eigen.lambda1(), fine.eigen.lambda2());
    let coarse = if cfg.domain.n / 2 >= MIN_CELLS {
        let mut c = cfg.clone();
        c.domain.n /= 2;
        let s = setup(&c, 2)?;
        Some((s.eigen.lambda1(), s.eigen.lambda2()))
    } else {
        None
    };
    let summary = EigenSummary {
        kind: cfg.domain.kind,
        lengths: cfg.domain.lengths.clone(),
        n: cfg.domain.n,
        lambda1: l1,
        lambda2: l2,
        lambda1_coarse: coarse.map(|c| c.0),
        lambda2_coarse: coarse.map(|c| c.1),
        lambda1_extrapolated: coarse.map(|c| richardson(c.0, l1)),
        lambda2_extrapolated: coarse.map(|c| richardson(c.1, l2)),
        analytic_lambda1: cfg.domain_spec()?.analytic_lambda1(),
        analytic_lambda2: analytic_lambda2(cfg)?,
    };
    let mut out = Artifacts::new(&cfg.outputs.formats);
    out.json("eigenvalues.json", &summary)?;
    out.raw("psi.csv".into(), psi_csv(fine.eigen.grid(), fine.eigen.psi())?);
    Ok(out)
}

fn psi_csv(grid: &Grid, psi: &[f64]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    match grid.dimension() {
        1 => w.write_record(["x", "psi"])?,
        _ => w.write_record(["x", "y", "psi"])?,
    }
    for (i, p) in psi.iter().enumerate() {
        let mut rec: Vec<String> = grid.point(i).iter().map(|x| x.to_string()).collect();
        rec.push(p.to_string());
        w.write_record(&rec)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

#[derive(Serialize)]
struct BlowupRow {
    v0psi: f64,
    x_star: f64,
    z_star: f64,
    alpha: f64,
    p_analytic_blowup: f64,
    p_hat: f64,
    stderr: f64,
    n_censored: usize,
    n_paths: usize,
    truncation_allowance: f64,
}

#[derive(Serialize)]
struct DichotomyRow {
    mass: f64,
    threshold: f64,
    verdict: Dichotomy,
}

fn lambda1_for(cfg: &RunConfig, source: Lambda1Source) -> Result<f64> {
    match source {
        Lambda1Source::Analytic => Ok(cfg.domain_spec()?.analytic_lambda1()),
        Lambda1Source::Discrete => Ok(setup(cfg, 2)?.eigen.lambda1()),
    }
}

pub fn cmd_blowup(ctx: &RunContext) -> Result<Artifacts> {
    let cfg = &ctx.config;
    let params = cfg.model_params()?;
    let lambda1 = lambda1_for(cfg, cfg.blowup.lambda1)?;
    let mut out = Artifacts::new(&cfg.outputs.formats);
    if params.kappa == 0.0 {
        // x* < 1/(λ₁β) is the same as mass^β > λ₁/C
        let rows = cfg
            .blowup
            .v0psi
            .iter()
            .map(|&m| {
                let r = dichotomy_from_mass(m, lambda1 / params.c_lower, params.beta)?;
                Ok(DichotomyRow { mass: r.mass, threshold: r.threshold, verdict: r.verdict })
            })
            .collect::<Result<Vec<_>>>()?;
        out.table("dichotomy", &rows)?;
        return Ok(out);
    }
    let mc = McConfig {
        n_paths: cfg.sim.n_paths,
        horizon: cfg.sim.horizon,
        dt: cfg.sim.dt,
        seed: cfg.sim.seed,
        workers: cfg.sim.workers,
    };
    let mut rows = Vec::new();
    for &v in &cfg.blowup.v0psi {
        let th = BlowupThreshold::for_model(v, &params)?;
        let bound = analytic_blowup_bound(lambda1, params.kappa, params.beta, th)?;
        let est = mc_blowup_probability(&params, lambda1, th, &mc)?;
        rows.push(BlowupRow {
            v0psi: v,
            x_star: th.x_star,
            z_star: bound.z_star,
            alpha: bound.alpha,
            p_analytic_blowup: bound.p_blowup_lower,
            p_hat: est.p_hat,
            stderr: est.stderr,
            n_censored: est.n_censored,
            n_paths: est.n_paths,
            truncation_allowance: est.truncation_allowance,
        });
    }
    out.table("blowup", &rows)?;
    Ok(out)
}

#[derive(Serialize)]
struct MassRow {
    t: f64,
    mass: f64,
    sup: f64,
    w: f64,
}

#[derive(Clone, Serialize)]
struct SummaryRow {
    path_index: u64,
    outcome: &'static str,
    t_b: Option<f64>,
    last_stable: Option<f64>,
    tau_analytic: Option<f64>,
    mass_file: String,
}

#[derive(Clone, Serialize)]
struct ConsistencyRow {
    path_index: u64,
    min_mass: f64,
    /// Smallest nodal value over the stored snapshots, relative to `‖f‖∞`.
    min_value_relative: f64,
    lower_bound_min_ratio: Option<f64>,
    lower_bound_pass: bool,
    em_max_rel_diff: Option<f64>,
    em_pass: Option<bool>,
}

struct PathRun {
    summary: SummaryRow,
    consistency: ConsistencyRow,
    mass_csv: Vec<u8>,
}

/// Smallest `v(t,ψ)/I(t)` over path grid times where `I` is finite.
fn lower_bound_ratio(traj: &TrajectoryResult, path: &BrownianPath, low: &LowerSolution) -> Option<f64> {
    traj.times
        .iter()
        .zip(&traj.mass)
        .filter_map(|(t, m)| match low.at_index(path.index_of(*t)?) {
            LowerValue::Finite(i) if i > 0.0 => Some(m / i),
            _ => None,
        })
        .reduce(f64::min)
}

/// Largest `‖u - u_EM‖∞ / ‖u_EM‖∞` over snapshot times shared by both runs.
fn em_difference(u: &TrajectoryResult, em: &TrajectoryResult) -> Option<f64> {
    let (mut i, mut j) = (0, 0);
    let mut worst: Option<f64> = None;
    while i < u.snapshots.len() && j < em.snapshots.len() {
        let (a, b) = (&u.snapshots[i], &em.snapshots[j]);
        if a.t < b.t {
            i += 1;
        } else if b.t < a.t {
            j += 1;
        } else {
            let diff: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect();
            let rel = sup_norm(&diff) / b.sup();
            worst = Some(worst.map_or(rel, |w| w.max(rel)));
            i += 1;
            j += 1;
        }
    }
    worst
}

fn outcome_name(o: &TrajectoryOutcome) -> &'static str {
    match o {
        TrajectoryOutcome::CompletedHorizon => "completed_horizon",
        TrajectoryOutcome::NumericalBlowup { .. } => "numerical_blowup",
    }
}

#[allow(clippy::too_many_arguments)]
fn simulate_path(
    index: u64,
    path: &BrownianPath,
    f: &[f64],
    params: &ModelParams,
    s: &Setup,
    cfg: &RunConfig,
    threshold: Option<BlowupThreshold>,
) -> Result<PathRun> {
    let scheme = cfg.sim.scheme();
    let traj = simulate_rpde(f, path, params, &s.op, &s.eigen, &scheme)?;
    let lambda1 = s.eigen.lambda1();
    let tau = threshold.and_then(|th| tau_from_path(path, th, params.beta, params.kappa, lambda1).tau());
    let ratio = threshold
        .and_then(|th| lower_bound_ratio(&traj, path, &LowerSolution::new(path, th, params, lambda1)));
    let em = if cfg.simulate.em_check {
        let u = reconstruct_u(&traj, path, params.kappa)?;
        let direct = simulate_spde_em(f, path, params, &s.op, &s.eigen, &scheme)?;
        em_difference(&u, &direct)
    } else {
        None
    };
    let f_sup = sup_norm(f);
    let min_value = traj.snapshots.iter().flat_map(|s| s.values.iter()).cloned().fold(f64::INFINITY, f64::min);
    let mass_file = format!("mass_{index:05}.csv");
    let rows: Vec<MassRow> = (0..traj.times.len())
        .map(|k| MassRow { t: traj.times[k], mass: traj.mass[k], sup: traj.sup[k], w: traj.noise[k] })
        .collect();
    let (t_b, last_stable) = match traj.outcome {
        TrajectoryOutcome::NumericalBlowup { t_b, last_stable } => (Some(t_b), Some(last_stable)),
        TrajectoryOutcome::CompletedHorizon => (None, None),
    };
    Ok(PathRun {
        summary: SummaryRow {
            path_index: index,
            outcome: outcome_name(&traj.outcome),
            t_b,
            last_stable,
            tau_analytic: tau,
            mass_file: mass_file.clone(),
        },
        consistency: ConsistencyRow {
            path_index: index,
            min_mass: traj.mass.iter().cloned().fold(f64::INFINITY, f64::min),
            min_value_relative: min_value / f_sup,
            lower_bound_min_ratio: ratio,
            lower_bound_pass: ratio.is_none_or(|r| r >= LOWER_BOUND_FACTOR),
            em_max_rel_diff: em,
            em_pass: em.map(|e| e <= EM_TOLERANCE),
        },
        mass_csv: Artifacts::csv_bytes(&rows)?,
    })
}

pub fn cmd_simulate(ctx: &RunContext) -> Result<Artifacts> {
    let cfg = &ctx.config;
    let params = cfg.model_params()?;
    let s = setup(cfg, cfg.domain.modes)?;
    let f = cfg.initial_datum(&s.eigen, &ctx.base)?;
    let mass0 = s.eigen.grid().inner(&f, s.eigen.psi());
    let threshold = (mass0 > 0.0).then(|| BlowupThreshold::for_model(mass0, &params)).transpose()?;
    let sim = &cfg.sim;
    // without noise every path is the same deterministic one
    let n_paths = if params.kappa == 0.0 { 1 } else { cfg.simulate.paths as u64 };
    let runs: Vec<Result<PathRun>> = run_pool(sim.workers, || {
        (0..n_paths)
            .into_par_iter()
            .map(|i| {
                let path = if params.kappa == 0.0 {
                    BrownianPath::frozen(sim.horizon, sim.dt)?
                } else {
                    sample_brownian(sim.horizon, sim.dt, sim.seed, i)?
                };
                simulate_path(i, &path, &f, &params, &s, cfg, threshold)
            })
            .collect()
    })?;
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Artifacts::new(&cfg.outputs.formats);
    let summaries: Vec<SummaryRow> = runs.iter().map(|r| r.summary.clone()).collect();
    let consistency: Vec<ConsistencyRow> = runs.iter().map(|r| r.consistency.clone()).collect();
    out.table("summaries", &summaries)?;
    out.table("consistency", &consistency)?;
    for r in runs {
        out.raw(r.summary.mass_file, r.mass_csv);
    }
    Ok(out)
}

#[derive(Serialize)]
struct CertificateRow {
    kind: &'static str,
    /// `J`, or the left side of the heat-kernel condition.
    j_or_lhs: Option<f64>,
    rhs: Option<f64>,
    verdict: Verdict,
    envelope_max: Option<f64>,
    probability_certified: Option<f64>,
    computed_part: Option<f64>,
    tail_majorant: Option<f64>,
    reason: Option<String>,
}

#[derive(Serialize)]
struct EnvelopeRow {
    kind: &'static str,
    t: f64,
    b: f64,
    decayed_sup: f64,
    bound: f64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn choice_name(c: CertificateChoice) -> &'static str {
    match c {
        CertificateChoice::Cond1 => "cond1",
        CertificateChoice::Cond2 => "cond2_saturation",
        CertificateChoice::Cond3 => "cond3_heat_kernel",
    }
}

fn heat_kernel_report(cfg: &RunConfig) -> Result<HeatKernelBoundReport> {
    let s = setup(cfg, cfg.heat_kernel.modes.min(cfg.grid()?.len()))?;
    let h = &cfg.heat_kernel;
    let mut times = log_times(h.t_min, h.t_max, h.count);
    times.extend(h.times.iter().cloned());
    times.sort_by(f64::total_cmp);
    times.dedup();
    heat_kernel_ratio_report(&s.eigen, &times)
}

pub fn cmd_certify(ctx: &RunContext) -> Result<Artifacts> {
    let cfg = &ctx.config;
    let params = cfg.model_params()?;
    let s = setup(cfg, cfg.domain.modes)?;
    let f = cfg.initial_datum(&s.eigen, &ctx.base)?;
    let c = &cfg.certificate;
    let path = if c.frozen_path || params.kappa == 0.0 {
        BrownianPath::frozen(cfg.sim.horizon, cfg.sim.dt)?
    } else {
        sample_brownian(cfg.sim.horizon, cfg.sim.dt, cfg.sim.seed, 0)?
    };
    let mut reports: Vec<(CertificateChoice, CertificateReport)> = Vec::new();
    for &kind in &c.kinds {
        let report = match kind {
            CertificateChoice::Cond1 => certificate_cond1(&path, &f, &params, &s.eigen)?,
            CertificateChoice::Cond2 => certificate_cond2_saturation(&path, &f, &params, &s.eigen)?,
            CertificateChoice::Cond3 => {
                let k = c.k.ok_or_else(|| Error::Config("the heat-kernel condition needs K".into()))?;
                let fitted = match &c.c {
                    CSource::Value(v) => *v,
                    CSource::Keyword(_) => heat_kernel_report(cfg)?.fitted_c,
                };
                let inputs = HeatKernelInputs { k, eta: c.eta, c: fitted };
                let mode = match c.cond3_mode {
                    Cond3Choice::Path => Cond3Mode::Path(&path),
                    Cond3Choice::Analytic => Cond3Mode::Analytic,
                };
                certificate_cond3_heat_kernel(mode, &f, inputs, &params, &s.eigen)?
            }
        };
        reports.push((kind, report));
    }
    let rows: Vec<CertificateRow> = reports
        .iter()
        .map(|(kind, r)| CertificateRow {
            kind: choice_name(*kind),
            j_or_lhs: finite(r.integral),
            rhs: r.rhs,
            verdict: r.verdict,
            envelope_max: r.envelope_max(),
            probability_certified: r.probability,
            computed_part: finite(r.computed_part),
            tail_majorant: finite(r.tail_majorant),
            reason: r.reason.clone(),
        })
        .collect();
    let envelope: Vec<EnvelopeRow> = reports
        .iter()
        .flat_map(|(kind, r)| {
            r.envelope.iter().map(move |e| EnvelopeRow {
                kind: choice_name(*kind),
                t: e.t,
                b: e.b,
                decayed_sup: e.decayed_sup,
                bound: e.b * e.decayed_sup,
            })
        })
        .collect();
    let mut out = Artifacts::new(&cfg.outputs.formats);
    out.table("certificates", &rows)?;
    out.table("envelope", &envelope)?;
    Ok(out)
}

#[derive(Serialize)]
struct HeatKernelRow {
    t: f64,
    ratio: f64,
    lower_bound: f64,
    upper_bound_with_fitted_c: f64,
    pass: bool,
}

pub fn cmd_heat_kernel(ctx: &RunContext) -> Result<Artifacts> {
    let cfg = &ctx.config;
    let report = heat_kernel_report(cfg)?;
    if let Some(w) = &report.truncation_warning {
        eprintln!("warning: {w}");
    }
    let rows: Vec<HeatKernelRow> = (0..report.times.len())
        .map(|k| HeatKernelRow {
            t: report.times[k],
            ratio: report.ratio[k],
            lower_bound: report.lower_bound[k],
            upper_bound_with_fitted_c: report.upper_bound[k],
            pass: report.pass[k],
        })
        .collect();
    let mut out = Artifacts::new(&cfg.outputs.formats);
    out.table("heatkernel", &rows)?;
    out.json("heatkernel_summary.json", &serde_json::json!({
        "fitted_c": report.fitted_c,
        "all_pass": report.all_pass(),
        "truncation_relative": report.truncation_relative,
        "truncation_warning": report.truncation_warning,
    }))?;
    Ok(out)
}
