//! Law of the perpetuity `A_∞ = ∫₀^∞ exp(κβW_s - (λ₁ + κ²/2)βs) ds`.
//!
//! With `W^{(ν)}_s = W_s + νs`, Brownian scaling gives
//! `A_∞ = (4/(κ²β²)) ∫₀^∞ exp(2W^{(μ̂)}_s) ds` and the Dufresne identity
//! `∫₀^∞ exp(2W^{(-ν)}_s) ds = 1/(2Z_ν)` with `Z_ν ~ Gamma(ν, 1)`, so
//!
//! ```text
//! A_∞ = 2 / (κ²β² Z_α),   α = -μ̂ = (2λ₁ + κ²) / (κ²β).
//! ```
//!
//! Hence `P[A_∞ <= x] = Q(α, 2/(κ²β²x))` and the density of `A_∞` is
//! `h(y) = (c/y)^α e^{-c/y} / (y Γ(α))` with `c = 2/(κ²β²)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::special::{gamma_tail, ln_gamma};

/// Drift and scale parameters of the exponential functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DerivedParams {
    /// μ = -(λ₁ + κ²/2)/κ
    pub mu: f64,
    /// β̂ = κβ/2
    pub beta_hat: f64,
    /// μ̂ = μ/β̂
    pub mu_hat: f64,
    /// α = -μ̂, the gamma shape
    pub alpha: f64,
}

pub fn derive_params(beta: f64, kappa: f64, lambda1: f64) -> Result<DerivedParams> {
    if kappa == 0.0 {
        return Err(Error::ZeroNoise);
    }
    if !(beta > 0.0) || !(kappa > 0.0) || !(lambda1 > 0.0) {
        return Err(Error::Domain(format!(
            "need beta, kappa, lambda1 > 0, got {beta}, {kappa}, {lambda1}"
        )));
    }
    let mu = -(lambda1 + 0.5 * kappa * kappa) / kappa;
    let beta_hat = 0.5 * kappa * beta;
    let mu_hat = mu / beta_hat;
    Ok(DerivedParams { mu, beta_hat, mu_hat, alpha: -mu_hat })
}

/// `c = 2/(κ²β²)`, the scale of the reciprocal-gamma law.
pub fn law_scale(kappa: f64, beta: f64) -> f64 {
    2.0 / (kappa * kappa * beta * beta)
}

/// Which algebraic form of the density to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityForm {
    /// The reciprocal-gamma density of `A_∞`; integrates to one.
    GammaLaw,
    /// The same expression with the base `c/y` inverted to `y/c`. It is not a
    /// probability density (its integral diverges); kept only to demonstrate that.
    InvertedBase,
}

/// Density of `A_∞` at `y > 0`.
///
/// ```
/// use spde_blowup::laws::blowup_density;
/// // λ₁ = κ = β = 1, y = 2: h = e^{-1}/4
/// let h = blowup_density(2.0, 1.0, 1.0, 1.0).unwrap();
/// assert!((h - (-1.0f64).exp() / 4.0).abs() < 1e-15);
/// ```
pub fn blowup_density(y: f64, lambda1: f64, kappa: f64, beta: f64) -> Result<f64> {
    density(y, lambda1, kappa, beta, DensityForm::GammaLaw)
}

pub fn density(y: f64, lambda1: f64, kappa: f64, beta: f64, form: DensityForm) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::Domain(format!("density argument must be positive, got {y}")));
    }
    let alpha = derive_params(beta, kappa, lambda1)?.alpha;
    let c = law_scale(kappa, beta);
    let log_base = match form {
        DensityForm::GammaLaw => (c / y).ln(),
        DensityForm::InvertedBase => (y / c).ln(),
    };
    let log_h = alpha * log_base - c / y - y.ln() - ln_gamma(alpha);
    Ok(log_h.exp())
}

/// `P[A_∞ <= x] = Q(α, c/x)`.
pub fn perpetuity_cdf(x: f64, lambda1: f64, kappa: f64, beta: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let alpha = derive_params(beta, kappa, lambda1)?.alpha;
    gamma_tail(alpha, law_scale(kappa, beta) / x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::exp_sinh;

    #[test]
    fn derived_parameters() {
        let p = derive_params(1.0, 1.0, 1.0).unwrap();
        assert_eq!((p.mu, p.beta_hat, p.mu_hat, p.alpha), (-1.5, 0.5, -3.0, 3.0));
        assert_eq!(derive_params(2.0, 1.0, 1.0).unwrap().alpha, 1.5);
        assert!(matches!(derive_params(1.0, 0.0, 1.0), Err(Error::ZeroNoise)));
        assert!(derive_params(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn alpha_identity() {
        for &(b, k, l) in &[(0.3, 0.7, 2.0), (2.5, 1.9, 0.1), (1.0, 3.0, 5.0)] {
            let p = derive_params(b, k, l).unwrap();
            assert!((p.alpha * k * k * b - (2.0 * l + k * k)).abs() < 1e-12);
        }
    }

    #[test]
    fn density_point_values() {
        let h4 = blowup_density(4.0, 1.0, 1.0, 1.0).unwrap();
        let expected = 0.125 * (-0.5f64).exp() / 8.0;
        assert!((h4 - expected).abs() < 1e-15);
        assert!((h4 - 0.00948).abs() < 1e-5);
        // the two forms agree where c/y = 1
        let printed = density(2.0, 1.0, 1.0, 1.0, DensityForm::InvertedBase).unwrap();
        assert!((printed - blowup_density(2.0, 1.0, 1.0, 1.0).unwrap()).abs() < 1e-15);
        assert!(blowup_density(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn density_normalises_and_inverted_base_does_not() {
        let total = exp_sinh(|y| blowup_density(y, 1.0, 1.0, 1.0).unwrap(), 0.0, 1e-13).unwrap();
        assert!((total - 1.0).abs() < 1e-10);
        // y^{α-1}-type growth: the partial integrals keep increasing
        let partial = |upper: f64| {
            crate::quadrature::tanh_sinh(
                |y| density(y, 1.0, 1.0, 1.0, DensityForm::InvertedBase).unwrap(),
                0.0,
                upper,
                1e-10,
            )
            .unwrap()
        };
        assert!(partial(100.0) > 10.0 * partial(10.0));
    }

    #[test]
    fn cdf_matches_gamma_tail() {
        // x = 2 -> z = 1 -> Q(3, 1)
        let p = perpetuity_cdf(2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((p - 2.5 * (-1.0f64).exp()).abs() < 1e-14);
        assert_eq!(perpetuity_cdf(0.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
    }
}
