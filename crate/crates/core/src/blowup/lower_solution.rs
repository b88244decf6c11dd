use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{exp_functional, BrownianPath, ExpFunctional, SeedRecord};

use super::model::ModelParams;

/// Initial mass `⟨f, ψ⟩` and the level `x* = v0ψ^{-β} / (Cβ)` that the exponential
/// functional has to reach for the lower solution to blow up.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupThreshold {
    pub v0psi: f64,
    pub x_star: f64,
}

impl BlowupThreshold {
    /// Threshold with `C = 1`.
    pub fn new(v0psi: f64, beta: f64) -> Result<Self> {
        Self::with_lower_constant(v0psi, beta, 1.0)
    }

    pub fn with_lower_constant(v0psi: f64, beta: f64, c: f64) -> Result<Self> {
        if !(v0psi > 0.0 && v0psi.is_finite()) {
            return Err(Error::Precondition(format!("initial mass must be positive, got {v0psi}")));
        }
        if !(beta > 0.0) || !(c > 0.0) {
            return Err(Error::Config("beta and C must be positive".into()));
        }
        Ok(Self { v0psi, x_star: v0psi.powf(-beta) / (c * beta) })
    }

    pub fn for_model(v0psi: f64, params: &ModelParams) -> Result<Self> {
        Self::with_lower_constant(v0psi, params.beta, params.c_lower)
    }
}

/// Drift and scale `(a, b)` of the functional driving the lower solution.
pub fn functional_coefficients(beta: f64, kappa: f64, lambda1: f64) -> (f64, f64) {
    (-(lambda1 + 0.5 * kappa * kappa) * beta, kappa * beta)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum LowerValue {
    Finite(f64),
    BlownUp,
}

impl LowerValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            LowerValue::Finite(v) => Some(v),
            LowerValue::BlownUp => None,
        }
    }
}

/// `I(t) = e^{-(λ₁+κ²/2)t} [v0ψ^{-β} - Cβ A(t)]^{-1/β}` along one path.
#[derive(Clone, Debug)]
pub struct LowerSolution {
    threshold: BlowupThreshold,
    beta: f64,
    c: f64,
    decay: f64,
    functional: ExpFunctional,
}

impl LowerSolution {
    pub fn new(
        path: &BrownianPath,
        threshold: BlowupThreshold,
        params: &ModelParams,
        lambda1: f64,
    ) -> Self {
        let (a, b) = functional_coefficients(params.beta, params.kappa, lambda1);
        Self {
            threshold,
            beta: params.beta,
            c: params.c_lower,
            decay: lambda1 + 0.5 * params.kappa * params.kappa,
            functional: exp_functional(path, a, b),
        }
    }

    pub fn functional(&self) -> &ExpFunctional {
        &self.functional
    }

    fn value(&self, t: f64, a: f64) -> LowerValue {
        let gap = self.threshold.x_star - a;
        if gap <= 0.0 {
            return LowerValue::BlownUp;
        }
        let bracket = self.c * self.beta * gap;
        LowerValue::Finite((-self.decay * t).exp() * bracket.powf(-1.0 / self.beta))
    }

    /// `I(t)` with `A` interpolated linearly between grid times.
    pub fn at(&self, t: f64) -> LowerValue {
        self.value(t, self.functional.at(t))
    }

    /// `I(t_k)` at grid index `k`.
    pub fn at_index(&self, k: usize) -> LowerValue {
        self.value(k as f64 * self.functional.dt(), self.functional.values()[k])
    }
}

/// Single evaluation of `I(t)`; builds the functional along the whole path.
pub fn lower_solution_i(
    path: &BrownianPath,
    threshold: BlowupThreshold,
    params: &ModelParams,
    lambda1: f64,
    t: f64,
) -> LowerValue {
    LowerSolution::new(path, threshold, params, lambda1).at(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BlowupStatus {
    BlewUp { tau: f64 },
    Censored { horizon: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupOutcome {
    pub status: BlowupStatus,
    pub seed: Option<SeedRecord>,
}

impl BlowupOutcome {
    pub fn tau(&self) -> Option<f64> {
        match self.status {
            BlowupStatus::BlewUp { tau } => Some(tau),
            BlowupStatus::Censored { .. } => None,
        }
    }
}

/// First time the functional reaches `x*`, interpolated within the step.
pub fn tau_from_path(
    path: &BrownianPath,
    threshold: BlowupThreshold,
    beta: f64,
    kappa: f64,
    lambda1: f64,
) -> BlowupOutcome {
    let (a, b) = functional_coefficients(beta, kappa, lambda1);
    let status = match exp_functional(path, a, b).hitting_time(threshold.x_star) {
        Some(tau) => BlowupStatus::BlewUp { tau },
        None => BlowupStatus::Censored { horizon: path.end_time() },
    };
    BlowupOutcome { status, seed: path.seed() }
}
