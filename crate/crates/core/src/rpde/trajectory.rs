use serde::Serialize;

use crate::blowup::ModelParams;
use crate::error::{Error, Result};
use crate::laws::{BrownianPath, SeedRecord};
use crate::spectral::{sup_norm, DiscreteOperator, EigenData};

use super::scheme::{FieldState, RpdeStepper, SchemeConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    /// The transformed field `v = e^{-κW} u`.
    V,
    /// The original field `u`.
    U,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TrajectoryOutcome {
    CompletedHorizon,
    /// Sup-norm reached the cutoff at `t_b`; `last_stable` is the last accepted time.
    NumericalBlowup { t_b: f64, last_stable: f64 },
}

impl TrajectoryOutcome {
    pub fn blowup_time(&self) -> Option<f64> {
        match self {
            TrajectoryOutcome::NumericalBlowup { t_b, .. } => Some(*t_b),
            TrajectoryOutcome::CompletedHorizon => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryResult {
    pub kind: FieldKind,
    /// Times of every accepted step (including refined ones near blowup).
    pub times: Vec<f64>,
    /// `Σ wᵢ ψᵢ vᵢ` at each entry of `times`.
    pub mass: Vec<f64>,
    pub sup: Vec<f64>,
    /// Noise value used by the step ending at each entry of `times`.
    pub noise: Vec<f64>,
    pub snapshots: Vec<FieldState>,
    pub outcome: TrajectoryOutcome,
    pub seed: Option<SeedRecord>,
    pub dt: f64,
    pub path_dt: f64,
}

impl TrajectoryResult {
    pub fn final_snapshot(&self) -> &FieldState {
        self.snapshots.last().expect("trajectory has at least the initial snapshot")
    }
}

fn check_initial(f: &[f64], op: &DiscreteOperator) -> Result<()> {
    op.grid().check_len(f)?;
    if let Some(i) = f.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Precondition(format!("initial datum must be finite and >= 0 (node {i})")));
    }
    if f.iter().all(|v| *v == 0.0) {
        return Err(Error::Precondition("initial datum vanishes identically".into()));
    }
    Ok(())
}

/// Number of scheme steps per path step; `dt` has to divide the path step.
fn substeps(path: &BrownianPath, dt: f64) -> Result<usize> {
    let r = path.dt() / dt;
    let k = r.round();
    if k < 1.0 || (r - k).abs() > 1e-9 * r {
        return Err(Error::Config(format!(
            "scheme dt = {dt} must divide the path step {}",
            path.dt()
        )));
    }
    Ok(k as usize)
}

struct Recorder<'a> {
    psi: &'a [f64],
    weight: f64,
    stride: usize,
    out: TrajectoryResult,
}

impl<'a> Recorder<'a> {
    fn push(&mut self, t: f64, w: f64, v: &[f64]) {
        let mass = self.weight * v.iter().zip(self.psi).map(|(a, b)| a * b).sum::<f64>();
        self.out.times.push(t);
        self.out.mass.push(mass);
        self.out.sup.push(sup_norm(v));
        self.out.noise.push(w);
    }

    fn snapshot(&mut self, step: usize, t: f64, v: &[f64]) {
        if step.is_multiple_of(self.stride) {
            self.out.snapshots.push(FieldState::new(t, v.to_vec()));
        }
    }

    fn finish(mut self, t: f64, v: &[f64], outcome: TrajectoryOutcome) -> TrajectoryResult {
        if self.out.snapshots.last().map(|s| s.t) != Some(t) {
            self.out.snapshots.push(FieldState::new(t, v.to_vec()));
        }
        self.out.outcome = outcome;
        self.out
    }
}

fn recorder<'a>(
    kind: FieldKind,
    eigen: &'a EigenData,
    path: &BrownianPath,
    cfg: &SchemeConfig,
    total_steps: usize,
) -> Recorder<'a> {
    Recorder {
        psi: eigen.psi(),
        weight: eigen.grid().weight(),
        stride: total_steps.div_ceil(cfg.snapshot_limit - 1).max(1),
        out: TrajectoryResult {
            kind,
            times: Vec::with_capacity(total_steps + 1),
            mass: Vec::with_capacity(total_steps + 1),
            sup: Vec::with_capacity(total_steps + 1),
            noise: Vec::with_capacity(total_steps + 1),
            snapshots: Vec::new(),
            outcome: TrajectoryOutcome::CompletedHorizon,
            seed: path.seed(),
            dt: cfg.dt,
            path_dt: path.dt(),
        },
    }
}

fn check_positive(v: &[f64], floor: f64, t: f64) -> Result<()> {
    if let Some(i) = v.iter().position(|x| *x < floor) {
        return Err(Error::Numerical(format!(
            "positivity lost at node {i}, t = {t}: value {}",
            v[i]
        )));
    }
    Ok(())
}

/// New state, or the time reached and the last state below the cutoff.
type Advance = std::result::Result<Vec<f64>, (f64, Vec<f64>)>;
/// `(t_b, last_stable, state)`, or the state at the horizon.
type Cascade = std::result::Result<(f64, f64, Vec<f64>), Vec<f64>>;

/// Advances `v` by `h` with `W = w`, splitting the step when reaction control is on.
/// When the cutoff is crossed, returns the progress made and the last state below it.
fn advance(
    stepper: &RpdeStepper<'_>,
    cfg: &SchemeConfig,
    v: &[f64],
    w: f64,
    h: f64,
) -> Result<Advance> {
    let Some(control) = cfg.reaction_control else {
        let next = stepper.step(v, w, h)?;
        return Ok(if exceeds(&next, cfg.cutoff) { Err((0.0, v.to_vec())) } else { Ok(next) });
    };
    let mut done = 0.0;
    let mut cur = v.to_vec();
    while done < h * (1.0 - 1e-12) {
        let rate = stepper.reaction_rate(&cur, w);
        let mut sub = h - done;
        if rate * sub > control {
            sub = control / rate;
        }
        let next = stepper.step(&cur, w, sub)?;
        if exceeds(&next, cfg.cutoff) {
            return Ok(Err((done, cur)));
        }
        done += sub;
        cur = next;
    }
    Ok(Ok(cur))
}

fn exceeds(v: &[f64], cutoff: f64) -> bool {
    v.iter().any(|x| !x.is_finite() || x.abs() >= cutoff)
}

/// Integrates the random PDE along `path` up to its horizon or numerical blowup.
///
/// `W` is held at its left-point value over each path step; `cfg.dt` must divide
/// the path step. When a step crosses the cutoff it is retried from the last stable
/// state with halved steps, up to `cfg.max_halvings` times, to bracket `t_b`.
pub fn simulate_rpde(
    f: &[f64],
    path: &BrownianPath,
    params: &ModelParams,
    op: &DiscreteOperator,
    eigen: &EigenData,
    cfg: &SchemeConfig,
) -> Result<TrajectoryResult> {
    check_initial(f, op)?;
    let stepper = RpdeStepper::new(params, op, cfg)?;
    let r = substeps(path, cfg.dt)?;
    let total = (path.len() - 1) * r;
    let floor = -1e-8 * sup_norm(f);
    let mut rec = recorder(FieldKind::V, eigen, path, cfg, total);
    let mut v = f.to_vec();
    rec.push(0.0, 0.0, &v);
    rec.snapshot(0, 0.0, &v);
    for n in 0..total {
        let t = n as f64 * cfg.dt;
        let w = path.values()[n / r];
        match advance(&stepper, cfg, &v, w, cfg.dt)? {
            Ok(next) => {
                check_positive(&next, floor, t + cfg.dt)?;
                v = next;
                let t1 = (n + 1) as f64 * cfg.dt;
                rec.push(t1, w, &v);
                rec.snapshot(n + 1, t1, &v);
            }
            Err((done, stable)) => {
                if done > 0.0 {
                    rec.push(t + done, w, &stable);
                }
                let horizon = path.end_time();
                return Ok(
                    match refine_blowup(&stepper, cfg, path, stable, t + done, horizon, floor, &mut rec)? {
                        Ok((t_b, last, v_last)) => {
                            let outcome = TrajectoryOutcome::NumericalBlowup { t_b, last_stable: last };
                            rec.finish(last, &v_last, outcome)
                        }
                        Err(v_end) => rec.finish(horizon, &v_end, TrajectoryOutcome::CompletedHorizon),
                    },
                );
            }
        }
    }
    let end = total as f64 * cfg.dt;
    Ok(rec.finish(end, &v, TrajectoryOutcome::CompletedHorizon))
}

/// Halving cascade after a scheme step crossed the cutoff: continue from the last
/// stable state with steps `dt/2, dt/4, …`, each level running until it crosses
/// again. Returns `Err` with the final state if the horizon is reached first,
/// otherwise the blowup time and the last stable time and state.
#[allow(clippy::too_many_arguments)]
fn refine_blowup(
    stepper: &RpdeStepper<'_>,
    cfg: &SchemeConfig,
    path: &BrownianPath,
    mut v: Vec<f64>,
    mut t: f64,
    horizon: f64,
    floor: f64,
    rec: &mut Recorder<'_>,
) -> Result<Cascade> {
    let mut h = cfg.dt;
    for _ in 0..cfg.max_halvings {
        h *= 0.5;
        loop {
            if t + h > horizon + 1e-9 * h {
                return Ok(Err(v));
            }
            let w = left_noise(path, t, h);
            match advance(stepper, cfg, &v, w, h)? {
                Ok(next) => {
                    check_positive(&next, floor, t + h)?;
                    v = next;
                    t += h;
                    rec.push(t, w, &v);
                }
                Err((done, stable)) => {
                    if done > 0.0 {
                        v = stable;
                        t += done;
                        rec.push(t, w, &v);
                    }
                    break;
                }
            }
        }
    }
    Ok(Ok((t + h, t, v)))
}

/// Noise value at the start of the path step containing `[t, t + h)`.
fn left_noise(path: &BrownianPath, t: f64, h: f64) -> f64 {
    let k = ((t + 1e-9 * h) / path.dt()).floor() as usize;
    path.values()[k.min(path.len() - 1)]
}

/// `u(t, ·) = e^{κW_t} v(t, ·)` for every stored time.
pub fn reconstruct_u(traj: &TrajectoryResult, path: &BrownianPath, kappa: f64) -> Result<TrajectoryResult> {
    if traj.kind != FieldKind::V {
        return Err(Error::Config("reconstruction expects a transformed-field trajectory".into()));
    }
    if (traj.path_dt - path.dt()).abs() > 1e-12 * path.dt() || traj.seed != path.seed() {
        return Err(Error::Config("trajectory and path do not share a time grid".into()));
    }
    // grid times take W_t; refined times near blowup take the left-point value the
    // integrator used
    let w_at = |t: f64| -> Result<f64> {
        if t > path.end_time() * (1.0 + 1e-12) {
            return Err(Error::Config(format!("time {t} is past the path horizon")));
        }
        Ok(match path.index_of(t) {
            Some(k) => path.values()[k],
            None => left_noise(path, t, traj.dt),
        })
    };
    let mut out = traj.clone();
    out.kind = FieldKind::U;
    for ((t, m), s) in traj.times.iter().zip(out.mass.iter_mut()).zip(out.sup.iter_mut()) {
        let e = (kappa * w_at(*t)?).exp();
        *m *= e;
        *s *= e;
    }
    for snap in out.snapshots.iter_mut() {
        let e = (kappa * w_at(snap.t)?).exp();
        snap.values.iter_mut().for_each(|v| *v *= e);
    }
    Ok(out)
}

/// Euler–Maruyama for `du = (Δu + G(u)) dt + κu dW` with implicit diffusion:
/// `(I - dtΔ_h) u_{n+1} = u_n + dt G(u_n) + κ u_n ΔW_n`.
pub fn simulate_spde_em(
    f: &[f64],
    path: &BrownianPath,
    params: &ModelParams,
    op: &DiscreteOperator,
    eigen: &EigenData,
    cfg: &SchemeConfig,
) -> Result<TrajectoryResult> {
    check_initial(f, op)?;
    cfg.validate()?;
    params.validate()?;
    if substeps(path, cfg.dt)? != 1 {
        return Err(Error::Config("Euler-Maruyama needs the scheme step equal to the path step".into()));
    }
    let resolvent = op.resolvent(1.0, cfg.dt)?;
    let total = path.len() - 1;
    let floor = -1e-8 * sup_norm(f);
    let mut rec = recorder(FieldKind::U, eigen, path, cfg, total);
    let mut u = f.to_vec();
    let w = path.values();
    rec.push(0.0, 0.0, &u);
    rec.snapshot(0, 0.0, &u);
    for n in 0..total {
        let dw = w[n + 1] - w[n];
        let rhs: Vec<f64> = u
            .iter()
            .map(|x| x + cfg.dt * params.g(*x) + params.kappa * x * dw)
            .collect();
        let next = resolvent.solve(&rhs)?;
        let t1 = (n + 1) as f64 * cfg.dt;
        if exceeds(&next, cfg.cutoff) {
            let outcome =
                TrajectoryOutcome::NumericalBlowup { t_b: t1, last_stable: n as f64 * cfg.dt };
            return Ok(rec.finish(n as f64 * cfg.dt, &u, outcome));
        }
        check_positive(&next, floor, t1)?;
        u = next;
        rec.push(t1, w[n + 1], &u);
        rec.snapshot(n + 1, t1, &u);
    }
    let end = total as f64 * cfg.dt;
    Ok(rec.finish(end, &u, TrajectoryOutcome::CompletedHorizon))
}
