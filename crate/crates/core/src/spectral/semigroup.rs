use crate::error::Result;

use super::domain::sup_norm;
use super::eigen::EigenData;

/// Relative size below which a decayed mode is dropped from a synthesis.
const DROP_BELOW: f64 = 1e-18;

/// `S_t f = Σ_k e^{-λ_k t} ⟨f, φ_k⟩ φ_k` over the retained basis.
pub fn apply_heat_semigroup(f: &[f64], t: f64, basis: &EigenData) -> Result<Vec<f64>> {
    basis.grid().check_len(f)?;
    if !(t >= 0.0) {
        return Err(crate::Error::Domain(format!("semigroup time must be >= 0, got {t}")));
    }
    Ok(HeatOrbit::new(basis, f)?.at(t))
}

/// `sup_x |e^{-κ²t/2} S_t f(x)|`.
pub fn sup_norm_decay(f: &[f64], t: f64, kappa: f64, basis: &EigenData) -> Result<f64> {
    Ok(HeatOrbit::new(basis, f)?.decayed_sup(t, kappa))
}

/// Sup-norm bound on what the truncated expansion misses at time `t`:
/// `e^{-λ_m t} ‖f - Pf‖₂ / √w`, valid for the full discrete semigroup.
pub fn truncation_bound(f: &[f64], t: f64, basis: &EigenData) -> Result<f64> {
    let g = basis.grid();
    g.check_len(f)?;
    let proj = basis.synthesize(&basis.project(f));
    let resid: Vec<f64> = f.iter().zip(&proj).map(|(a, b)| a - b).collect();
    let l2 = g.inner(&resid, &resid).sqrt();
    let lambda_m = *basis.lambdas().last().expect("non-empty basis");
    Ok((-lambda_m * t).exp() * l2 / g.weight().sqrt())
}

/// The orbit `t ↦ S_t f` of one initial datum, with its coefficients cached.
#[derive(Clone, Debug)]
pub struct HeatOrbit<'a> {
    basis: &'a EigenData,
    coeffs: Vec<f64>,
}

impl<'a> HeatOrbit<'a> {
    pub fn new(basis: &'a EigenData, f: &[f64]) -> Result<Self> {
        basis.grid().check_len(f)?;
        Ok(Self { basis, coeffs: basis.project(f) })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    fn decayed_coeffs(&self, t: f64) -> Vec<f64> {
        let raw: Vec<f64> = self
            .coeffs
            .iter()
            .zip(self.basis.lambdas())
            .map(|(c, l)| c * (-l * t).exp())
            .collect();
        let total: f64 =
            raw.iter().enumerate().map(|(k, c)| c.abs() * self.basis.mode_sup(k)).sum();
        raw.iter()
            .enumerate()
            .map(|(k, c)| if c.abs() * self.basis.mode_sup(k) < DROP_BELOW * total { 0.0 } else { *c })
            .collect()
    }

    pub fn at(&self, t: f64) -> Vec<f64> {
        self.basis.synthesize(&self.decayed_coeffs(t))
    }

    pub fn decayed_sup(&self, t: f64, kappa: f64) -> f64 {
        (-0.5 * kappa * kappa * t).exp() * sup_norm(&self.at(t))
    }

    /// Majorant `Σ_k e^{-λ_k t} |c_k| sup|φ_k|` of `‖S_t f‖_∞`; for `s ≥ t` it
    /// decays at least like `e^{-λ₁ (s - t)}`.
    pub fn envelope(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .zip(self.basis.lambdas())
            .enumerate()
            .map(|(k, (c, l))| c.abs() * self.basis.mode_sup(k) * (-l * t).exp())
            .sum()
    }
}
