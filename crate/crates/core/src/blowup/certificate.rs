//! Global-existence certificates along a noise path.
//!
//! Integrals over `[0, ∞)` are split into the part computed on the path grid and a
//! closed-form majorant for `(T, ∞)`. The majorant continues the path as frozen at
//! its terminal value `W_T` and the semigroup orbit by its exponential envelope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{derive_params, exp_functional, law_scale, BrownianPath, EXPONENT_CAP};
use crate::quadrature::cumulative_trapezoid;
use crate::special::gamma_tail;
use crate::spectral::{sup_norm, EigenData, HeatOrbit};

use super::lower_solution::functional_coefficients;
use super::model::{ModelParams, ReactionVariant};

/// Envelope samples kept in a report.
const ENVELOPE_SAMPLES: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertificateKind {
    Cond1,
    Cond2Saturation,
    Cond3HeatKernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Certified,
    NotCertified,
    /// Analytic mode of the heat-kernel condition: no path, only a probability.
    Probabilistic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnvelopeSample {
    pub t: f64,
    /// `B(t)` (or `B*(t)` for the saturating variant)
    pub b: f64,
    /// `‖e^{-κ²t/2} S_t f‖_∞`
    pub decayed_sup: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelInputs {
    pub k: f64,
    pub eta: f64,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub kind: CertificateKind,
    /// `J` for the first two conditions, the left side of the heat-kernel condition
    /// for the third (NaN in analytic mode).
    pub integral: f64,
    pub computed_part: f64,
    pub tail_majorant: f64,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub verdict: Verdict,
    pub reason: Option<String>,
    pub envelope: Vec<EnvelopeSample>,
    pub inputs: Option<HeatKernelInputs>,
    pub probability: Option<f64>,
    #[serde(skip)]
    running: Option<Running>,
}

/// Full-resolution running integral `J(t_k)`.
#[derive(Clone, Debug, PartialEq)]
struct Running {
    dt: f64,
    j: Vec<f64>,
    beta: f64,
}

impl CertificateReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn envelope_max(&self) -> Option<f64> {
        self.envelope.iter().map(|s| s.b * s.decayed_sup).reduce(f64::max)
    }

    /// `B(t) = (1 - J(t))^{-1/β}` with `J` interpolated linearly on the path grid;
    /// `None` past the horizon or where `J(t) >= 1`.
    pub fn b_at(&self, t: f64) -> Option<f64> {
        let r = self.running.as_ref()?;
        let s = t / r.dt;
        let k = s.floor() as usize;
        let j = if k + 1 < r.j.len() {
            let frac = s - k as f64;
            r.j[k] + frac * (r.j[k + 1] - r.j[k])
        } else if (s - (r.j.len() - 1) as f64).abs() < 1e-9 {
            *r.j.last()?
        } else {
            return None;
        };
        (j < 1.0).then(|| (1.0 - j).powf(-1.0 / r.beta))
    }
}

fn check_initial(f: &[f64], eigen: &EigenData) -> Result<()> {
    eigen.grid().check_len(f)?;
    if let Some(i) = f.iter().position(|v| !(*v >= 0.0)) {
        return Err(Error::Precondition(format!("initial datum is negative at node {i}")));
    }
    if f.iter().all(|v| *v == 0.0) {
        return Err(Error::Precondition("initial datum vanishes identically".into()));
    }
    Ok(())
}

fn check_model(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if !(params.kappa > 0.0) {
        return Err(Error::Precondition("certificates need kappa > 0".into()));
    }
    if !params.growth_bounds_hold().1 {
        return Err(Error::Precondition("G exceeds Lambda z^(1+beta) on its tabulation".into()));
    }
    Ok(())
}

/// Shared evaluation of `Λβ ∫ factor(W_r) ‖e^{-κ²r/2} S_r f‖_∞^β dr` where the factor is
/// `e^{noise_exp·W_r}`.
struct PathIntegral {
    j: Vec<f64>,
    sups: Vec<f64>,
    tail: f64,
    saturated_at: Option<usize>,
}

fn path_integral(
    path: &BrownianPath,
    f: &[f64],
    params: &ModelParams,
    eigen: &EigenData,
    noise_exp: f64,
) -> Result<PathIntegral> {
    let orbit = HeatOrbit::new(eigen, f)?;
    let (beta, kappa, lam) = (params.beta, params.kappa, params.lambda_upper);
    let w = path.values();
    let mut saturated_at = None;
    let mut sups = Vec::with_capacity(w.len());
    let integrand: Vec<f64> = w
        .iter()
        .enumerate()
        .map(|(k, wk)| {
            let s = orbit.decayed_sup(path.time(k), kappa);
            sups.push(s);
            if s == 0.0 {
                return 0.0;
            }
            let e = noise_exp * wk + beta * s.ln();
            if e > EXPONENT_CAP {
                saturated_at.get_or_insert(k);
                EXPONENT_CAP.exp()
            } else {
                e.exp()
            }
        })
        .collect();
    let j: Vec<f64> =
        cumulative_trapezoid(&integrand, path.dt()).into_iter().map(|v| lam * beta * v).collect();
    let big_t = path.end_time();
    let w_t = *w.last().expect("non-empty path");
    let e_t = orbit.envelope(big_t) * (-0.5 * kappa * kappa * big_t).exp();
    let rate = beta * (eigen.lambda1() + 0.5 * kappa * kappa);
    let tail = lam * beta * (noise_exp * w_t).exp() * e_t.powf(beta) / rate;
    Ok(PathIntegral { j, sups, tail, saturated_at })
}

fn envelope_samples(path: &BrownianPath, pi: &PathIntegral, beta: f64) -> Vec<EnvelopeSample> {
    let n = pi.j.len();
    let stride = n.div_ceil(ENVELOPE_SAMPLES).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx.into_iter()
        .filter(|&k| pi.j[k] < 1.0)
        .map(|k| EnvelopeSample {
            t: path.time(k),
            b: (1.0 - pi.j[k]).powf(-1.0 / beta),
            decayed_sup: pi.sups[k],
        })
        .collect()
}

fn saturation_reason(path: &BrownianPath, k: usize) -> String {
    format!("exponential factor saturated at t = {}", path.time(k))
}

/// `Λβ ∫₀^∞ e^{κβW_r} ‖e^{-κ²r/2} S_r f‖_∞^β dr < 1`.
pub fn certificate_cond1(
    path: &BrownianPath,
    f: &[f64],
    params: &ModelParams,
    eigen: &EigenData,
) -> Result<CertificateReport> {
    check_model(params)?;
    check_initial(f, eigen)?;
    if params.variant != ReactionVariant::Transformed {
        return Err(Error::Precondition(
            "the first condition applies to the transformed reaction e^{-kW}G(e^{kW}v)".into(),
        ));
    }
    let beta = params.beta;
    let pi = path_integral(path, f, params, eigen, params.kappa * beta)?;
    let computed = *pi.j.last().unwrap();
    let total = computed + pi.tail;
    let (verdict, reason) = match pi.saturated_at {
        Some(k) => (Verdict::NotCertified, Some(saturation_reason(path, k))),
        None if total < 1.0 => (Verdict::Certified, None),
        None => (Verdict::NotCertified, Some(format!("J = {total} >= 1"))),
    };
    let envelope = envelope_samples(path, &pi, beta);
    Ok(CertificateReport {
        kind: CertificateKind::Cond1,
        integral: total,
        computed_part: computed,
        tail_majorant: pi.tail,
        lhs: None,
        rhs: None,
        verdict,
        reason,
        envelope,
        inputs: None,
        probability: None,
        running: Some(Running { dt: path.dt(), j: pi.j, beta }),
    })
}

/// Saturating variant: `‖f‖_∞ <= C*(1 - J*)^{1/β}` with the factor `e^{-κW_r}`, and
/// `B*(t) ‖e^{-κ²t/2} S_t f‖_∞ ∈ (0, C*)` on the whole path grid.
pub fn certificate_cond2_saturation(
    path: &BrownianPath,
    f: &[f64],
    params: &ModelParams,
    eigen: &EigenData,
) -> Result<CertificateReport> {
    check_model(params)?;
    check_initial(f, eigen)?;
    let c_star = params
        .c_star
        .ok_or_else(|| Error::Precondition("the saturating condition needs C*".into()))?;
    if params.variant != ReactionVariant::Saturating {
        return Err(Error::Precondition(
            "the saturating condition needs the reaction variant e^{-kW}G(v)".into(),
        ));
    }
    let beta = params.beta;
    let pi = path_integral(path, f, params, eigen, -params.kappa)?;
    let computed = *pi.j.last().unwrap();
    let total = computed + pi.tail;
    let lhs = sup_norm(f);
    let rhs = if total < 1.0 { c_star * (1.0 - total).powf(1.0 / beta) } else { 0.0 };
    let open_range = pi.j.iter().zip(&pi.sups).position(|(j, s)| {
        if *j >= 1.0 {
            return true;
        }
        let v = (1.0 - j).powf(-1.0 / beta) * s;
        !(v > 0.0 && v < c_star)
    });
    let (verdict, reason) = if let Some(k) = pi.saturated_at {
        (Verdict::NotCertified, Some(saturation_reason(path, k)))
    } else if total >= 1.0 {
        (Verdict::NotCertified, Some(format!("J* = {total} >= 1")))
    } else if lhs > rhs {
        (Verdict::NotCertified, Some(format!("sup f = {lhs} > {rhs}")))
    } else if let Some(k) = open_range {
        (
            Verdict::NotCertified,
            Some(format!("B*(t)·sup leaves (0, C*) at t = {}", path.time(k))),
        )
    } else {
        (Verdict::Certified, None)
    };
    let envelope = envelope_samples(path, &pi, beta);
    Ok(CertificateReport {
        kind: CertificateKind::Cond2Saturation,
        integral: total,
        computed_part: computed,
        tail_majorant: pi.tail,
        lhs: Some(lhs),
        rhs: Some(rhs),
        verdict,
        reason,
        envelope,
        inputs: None,
        probability: None,
        running: Some(Running { dt: path.dt(), j: pi.j, beta }),
    })
}

#[derive(Clone, Copy, Debug)]
pub enum Cond3Mode<'a> {
    Path(&'a BrownianPath),
    Analytic,
}

/// Right side `e^{λ₁βη} / (Λβ [K(1+c) (sup ψ)² ∫ψ]^β)` of the heat-kernel condition,
/// with `ψ` normalised in `L²` as in the kernel ratio.
pub fn cond3_rhs(inputs: HeatKernelInputs, params: &ModelParams, eigen: &EigenData) -> f64 {
    let psi = eigen.ground_state_l2();
    let g = eigen.grid();
    let beta = params.beta;
    let base = inputs.k * (1.0 + inputs.c) * sup_norm(&psi).powi(2) * g.integral(&psi);
    (eigen.lambda1() * beta * inputs.eta).exp() / (params.lambda_upper * beta * base.powf(beta))
}

/// Heat-kernel condition: `f <= K S_η ψ` and
/// `∫₀^∞ e^{κβW_r - (λ₁+κ²/2)βr} dr < rhs`. In analytic mode reports the probability
/// of the inequality under the reciprocal-gamma law.
pub fn certificate_cond3_heat_kernel(
    mode: Cond3Mode<'_>,
    f: &[f64],
    inputs: HeatKernelInputs,
    params: &ModelParams,
    eigen: &EigenData,
) -> Result<CertificateReport> {
    params.validate()?;
    check_initial(f, eigen)?;
    if !(inputs.eta >= 1.0) {
        return Err(Error::Precondition(format!("eta must be >= 1, got {}", inputs.eta)));
    }
    if !(inputs.k > 0.0) || !(inputs.c >= 0.0) {
        return Err(Error::Config("K must be positive and c nonnegative".into()));
    }
    if !params.growth_bounds_hold().1 {
        return Err(Error::Precondition("G exceeds Lambda z^(1+beta) on its tabulation".into()));
    }
    let lambda1 = eigen.lambda1();
    let g = eigen.grid();
    let scale = inputs.k * (-lambda1 * inputs.eta).exp();
    let psi = eigen.ground_state_l2();
    for (i, (fi, pi)) in f.iter().zip(&psi).enumerate() {
        let cap = scale * pi;
        if *fi > cap * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Precondition(format!(
                "f exceeds K S_eta psi at node {i} (x = {:?}): {fi} > {cap}",
                g.point(i)
            )));
        }
    }
    let rhs = cond3_rhs(inputs, params, eigen);
    let (beta, kappa) = (params.beta, params.kappa);
    let mut report = CertificateReport {
        kind: CertificateKind::Cond3HeatKernel,
        integral: f64::NAN,
        computed_part: f64::NAN,
        tail_majorant: f64::NAN,
        lhs: None,
        rhs: Some(rhs),
        verdict: Verdict::Probabilistic,
        reason: None,
        envelope: Vec::new(),
        inputs: Some(inputs),
        probability: None,
        running: None,
    };
    match mode {
        Cond3Mode::Analytic => {
            report.probability = Some(if kappa == 0.0 {
                // deterministic integral 1/(λ₁β)
                if 1.0 / (lambda1 * beta) < rhs { 1.0 } else { 0.0 }
            } else {
                let alpha = derive_params(beta, kappa, lambda1)?.alpha;
                gamma_tail(alpha, law_scale(kappa, beta) / rhs)?
            });
        }
        Cond3Mode::Path(path) => {
            let (a, b) = functional_coefficients(beta, kappa, lambda1);
            let func = exp_functional(path, a, b);
            let big_t = path.end_time();
            let w_t = *path.values().last().unwrap();
            let tail = (a * big_t + b * w_t).min(EXPONENT_CAP).exp() / a.abs();
            let total = func.terminal() + tail;
            report.integral = total;
            report.computed_part = func.terminal();
            report.tail_majorant = tail;
            report.lhs = Some(total);
            (report.verdict, report.reason) = match func.saturated_at() {
                Some(k) => (Verdict::NotCertified, Some(saturation_reason(path, k))),
                None if total < rhs => (Verdict::Certified, None),
                None => (Verdict::NotCertified, Some(format!("{total} >= {rhs}"))),
            };
        }
    }
    Ok(report)
}
