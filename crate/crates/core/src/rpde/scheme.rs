use serde::{Deserialize, Serialize};

use crate::blowup::ModelParams;
use crate::error::{Error, Result};
use crate::spectral::{sup_norm, DiscreteOperator, Resolvent};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionScheme {
    /// Backward Euler for `Δ - κ²/2`, explicit reaction.
    #[default]
    Imex,
    /// Crank–Nicolson for `Δ - κ²/2`, explicit reaction.
    CrankNicolson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    pub dt: f64,
    /// Sup-norm level treated as numerical blowup.
    pub cutoff: f64,
    pub max_halvings: u32,
    pub scheme: DiffusionScheme,
    /// Upper bound on the number of stored snapshots.
    pub snapshot_limit: usize,
    /// Optional bound on `dt · max_x R(v)/v` per substep. When set, steps are split
    /// so that the explicit reaction never grows the field by more than this
    /// fraction at once; `None` takes every step with the full `dt`.
    pub reaction_control: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            cutoff: 1e8,
            max_halvings: 10,
            scheme: DiffusionScheme::Imex,
            snapshot_limit: 1000,
            reaction_control: None,
        }
    }
}

impl SchemeConfig {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.cutoff > 1.0) {
            return Err(Error::Config(format!("cutoff must exceed 1, got {}", self.cutoff)));
        }
        if self.snapshot_limit < 2 {
            return Err(Error::Config("snapshot limit must be at least 2".into()));
        }
        if let Some(c) = self.reaction_control {
            if !(c > 0.0) {
                return Err(Error::Config(format!("reaction control must be positive, got {c}")));
            }
        }
        Ok(())
    }
}

/// Field values on the interior nodes at time `t`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldState {
    pub t: f64,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn new(t: f64, values: Vec<f64>) -> Self {
        Self { t, values }
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.values)
    }

    /// Not finite anywhere, or above the cutoff.
    pub fn exceeds(&self, cutoff: f64) -> bool {
        self.values.iter().any(|v| !v.is_finite() || v.abs() >= cutoff)
    }
}

/// IMEX/CN stepper for `∂v = Δv - κ²/2 v + R(v, W)`, caching the linear solver for
/// its nominal step.
pub struct RpdeStepper<'a> {
    params: &'a ModelParams,
    op: &'a DiscreteOperator,
    scheme: DiffusionScheme,
    nominal_dt: f64,
    nominal: Resolvent,
}

impl<'a> RpdeStepper<'a> {
    pub fn new(params: &'a ModelParams, op: &'a DiscreteOperator, cfg: &SchemeConfig) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        let nominal = resolvent(op, params.kappa, cfg.scheme, cfg.dt)?;
        Ok(Self { params, op, scheme: cfg.scheme, nominal_dt: cfg.dt, nominal })
    }

    /// One step of size `h` with the reaction evaluated at `(v, w)`.
    pub fn step(&self, v: &[f64], w: f64, h: f64) -> Result<Vec<f64>> {
        let reaction: Vec<f64> = v.iter().map(|x| self.params.reaction(*x, w)).collect();
        self.step_with_source(v, &reaction, h)
    }

    /// One step with an explicit source term `s`: solves
    /// `(I - h(Δ_h - κ²/2)) v⁺ = v + h s` (or its Crank–Nicolson analogue).
    pub fn step_with_source(&self, v: &[f64], s: &[f64], h: f64) -> Result<Vec<f64>> {
        let k2 = 0.5 * self.params.kappa * self.params.kappa;
        let rhs: Vec<f64> = match self.scheme {
            DiffusionScheme::Imex => v.iter().zip(s).map(|(x, r)| x + h * r).collect(),
            DiffusionScheme::CrankNicolson => {
                let lap = self.op.apply(v);
                v.iter()
                    .zip(&lap)
                    .zip(s)
                    .map(|((x, l), r)| x + 0.5 * h * (l - k2 * x) + h * r)
                    .collect()
            }
        };
        if h == self.nominal_dt {
            self.nominal.solve(&rhs)
        } else {
            resolvent(self.op, self.params.kappa, self.scheme, h)?.solve(&rhs)
        }
    }

    /// Largest per-unit-time relative growth `R(v)/v` of the explicit reaction.
    pub fn reaction_rate(&self, v: &[f64], w: f64) -> f64 {
        v.iter()
            .filter(|x| **x > 0.0)
            .map(|x| self.params.reaction(*x, w) / x)
            .fold(0.0, f64::max)
    }
}

fn resolvent(op: &DiscreteOperator, kappa: f64, scheme: DiffusionScheme, h: f64) -> Result<Resolvent> {
    let k2 = 0.5 * kappa * kappa;
    match scheme {
        DiffusionScheme::Imex => op.resolvent(1.0 + h * k2, h),
        DiffusionScheme::CrankNicolson => op.resolvent(1.0 + 0.5 * h * k2, 0.5 * h),
    }
}

/// One IMEX step of the random PDE with `W` frozen at `w` over the step.
///
/// The returned state may exceed `cfg.cutoff`; the caller decides what that means.
pub fn step_rpde(
    state: &FieldState,
    w: f64,
    params: &ModelParams,
    op: &DiscreteOperator,
    cfg: &SchemeConfig,
) -> Result<FieldState> {
    op.grid().check_len(&state.values)?;
    if state.values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!("non-finite state at t = {}", state.t)));
    }
    let stepper = RpdeStepper::new(params, op, cfg)?;
    let next = stepper.step(&state.values, w, cfg.dt)?;
    Ok(FieldState::new(state.t + cfg.dt, next))
}
