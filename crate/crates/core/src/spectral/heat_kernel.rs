//! Numerical check of the two-sided bound
//!
//! ```text
//! max{1, t^{-(d+2)/2} / c} <= e^{λ₁t} sup_{x,y} p_t(x,y) / (ψ(x)ψ(y)) <= 1 + c (1∧t)^{-(d+2)/2} e^{-(λ₂-λ₁)t}
//! ```
//!
//! for the Dirichlet heat kernel, with ψ the L²-normalised ground state.
//! The kernel ratio `Σ_k e^{-(λ_k-λ₁)t} q_k(x) q_k(y)` with `q_k = φ_k/φ₁` is
//! positive semidefinite, so by Cauchy–Schwarz its supremum over pairs is
//! attained on the diagonal and only `n` points need to be scanned.

use serde::Serialize;

use crate::error::{Error, Result};

use super::domain::DomainKind;
use super::eigen::{AxisModes, EigenData};

/// Relative slack on the pass/fail comparisons, for rounding only.
const ROUNDING: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct HeatKernelBoundReport {
    pub times: Vec<f64>,
    pub ratio: Vec<f64>,
    pub fitted_c: f64,
    pub lower_bound: Vec<f64>,
    pub upper_bound: Vec<f64>,
    pub pass: Vec<bool>,
    /// Estimated omitted spectral mass at the smallest time, relative to sup p_t.
    pub truncation_relative: Option<f64>,
    pub truncation_warning: Option<String>,
}

impl HeatKernelBoundReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|p| *p)
    }
}

/// `e^{λ₁t} sup_{x,y} p_t(x,y)/(ψ(x)ψ(y))` with L²-normalised ψ.
pub fn kernel_ratio(basis: &EigenData, t: f64) -> f64 {
    let phi1 = basis.ground_state_l2();
    let l1 = basis.lambda1();
    let mut diag = vec![0.0; phi1.len()];
    for (k, l) in basis.lambdas().iter().enumerate() {
        let a = (-(l - l1) * t).exp();
        if a < 1e-300 {
            continue;
        }
        let m = basis.mode(k);
        for ((d, mk), p) in diag.iter_mut().zip(&m).zip(&phi1) {
            let q = mk / p;
            *d += a * q * q;
        }
    }
    diag.into_iter().fold(f64::MIN, f64::max)
}

/// sup_x p_t(x, x) from the truncated expansion.
fn kernel_sup(basis: &EigenData, t: f64) -> f64 {
    let mut diag = vec![0.0; basis.grid().len()];
    for (k, l) in basis.lambdas().iter().enumerate() {
        let a = (-l * t).exp();
        let m = basis.mode(k);
        diag.iter_mut().zip(&m).for_each(|(d, v)| *d += a * v * v);
    }
    diag.into_iter().fold(0.0, f64::max)
}

/// Bound on Σ_{k>m} e^{-λ_k t} sup φ_k² along one axis of length `len`, using
/// λ_k >= 4k²/len² for the discrete stencil and sup φ_k² <= 2/len (1 + slack).
fn axis_tail(len: f64, m: usize, t: f64) -> f64 {
    let c = 4.0 / (len * len);
    let m = m as f64;
    2.0 * 1.01 / len * (-c * m * m * t).exp() / (2.0 * c * m * t)
}

fn axis_kernel_sup(axis: &AxisModes, t: f64) -> f64 {
    let mut diag = vec![0.0; axis.modes[0].len()];
    for (l, m) in axis.lambda.iter().zip(&axis.modes) {
        let a = (-l * t).exp();
        diag.iter_mut().zip(m).for_each(|(d, v)| *d += a * v * v);
    }
    diag.into_iter().fold(0.0, f64::max)
}

pub fn heat_kernel_ratio_report(basis: &EigenData, times: &[f64]) -> Result<HeatKernelBoundReport> {
    if times.is_empty() || times.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("heat-kernel times must be positive and non-empty".into()));
    }
    let d = basis.grid().dimension() as f64;
    let expo = (d + 2.0) / 2.0;
    let gap = basis.lambda2() - basis.lambda1();
    let ratio: Vec<f64> = times.iter().map(|&t| kernel_ratio(basis, t)).collect();

    let mut c: f64 = f64::MIN_POSITIVE;
    for (&t, &r) in times.iter().zip(&ratio) {
        let shape = t.min(1.0).powf(-expo) * (-gap * t).exp();
        c = c.max((r - 1.0) / shape);
        c = c.max(t.powf(-expo) / r);
    }
    let lower_bound: Vec<f64> = times.iter().map(|&t| (t.powf(-expo) / c).max(1.0)).collect();
    let upper_bound: Vec<f64> =
        times.iter().map(|&t| 1.0 + c * t.min(1.0).powf(-expo) * (-gap * t).exp()).collect();
    let pass = ratio
        .iter()
        .zip(lower_bound.iter().zip(&upper_bound))
        .map(|(r, (lo, hi))| *r >= lo * (1.0 - ROUNDING) && *r <= hi * (1.0 + ROUNDING))
        .collect();

    let t_min = times.iter().cloned().fold(f64::INFINITY, f64::min);
    let lengths = basis.grid().domain().lengths().to_vec();
    let tail = match basis.grid().domain().kind() {
        DomainKind::Interval => Some(axis_tail(lengths[0], basis.len(), t_min)),
        DomainKind::Rectangle => basis.product_axes().map(|(x, y)| {
            let tx = axis_tail(lengths[0], x.lambda.len(), t_min);
            let ty = axis_tail(lengths[1], y.lambda.len(), t_min);
            // (Px + Tx)(Py + Ty) - Px Py
            tx * axis_kernel_sup(y, t_min) + axis_kernel_sup(x, t_min) * ty + tx * ty
        }),
    };
    let truncation_relative = tail.map(|tail| tail / kernel_sup(basis, t_min));
    let truncation_warning = match truncation_relative {
        Some(r) if r > 0.01 => Some(format!(
            "spectral tail is {:.2}% of sup p_t at t = {t_min}; add modes",
            100.0 * r
        )),
        Some(_) => None,
        None => Some("cannot estimate the spectral tail for a non-product basis".into()),
    };
    Ok(HeatKernelBoundReport {
        times: times.to_vec(),
        ratio,
        fitted_c: c,
        lower_bound,
        upper_bound,
        pass,
        truncation_relative,
        truncation_warning,
    })
}

/// `count` logarithmically spaced times over `[lo, hi]`.
pub fn log_times(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}
