use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{derive_params, law_scale};
use crate::special::gamma_tail;
use crate::spectral::EigenData;

use super::lower_solution::BlowupThreshold;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnalyticBound {
    pub x_star: f64,
    pub z_star: f64,
    pub alpha: f64,
    /// `P[τ = ∞] = Q(α, z*)`
    pub p_global: f64,
    /// `P[τ < ∞] = 1 - Q(α, z*)`, a lower bound for the blowup probability
    pub p_blowup_lower: f64,
}

/// Closed-form law of the lower-solution blowup event.
///
/// ```
/// use spde_blowup::blowup::{analytic_blowup_bound, BlowupThreshold};
/// let th = BlowupThreshold::new(0.5, 1.0).unwrap();
/// let b = analytic_blowup_bound(1.0, 1.0, 1.0, th).unwrap();
/// assert_eq!((b.x_star, b.z_star, b.alpha), (2.0, 1.0, 3.0));
/// assert!((b.p_global - 0.9196986029286058).abs() < 1e-12);
/// ```
pub fn analytic_blowup_bound(
    lambda1: f64,
    kappa: f64,
    beta: f64,
    threshold: BlowupThreshold,
) -> Result<AnalyticBound> {
    let alpha = derive_params(beta, kappa, lambda1)?.alpha;
    let z_star = law_scale(kappa, beta) / threshold.x_star;
    let p_global = gamma_tail(alpha, z_star)?;
    Ok(AnalyticBound {
        x_star: threshold.x_star,
        z_star,
        alpha,
        p_global,
        p_blowup_lower: 1.0 - p_global,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dichotomy {
    BlowupCertified,
    TauInfinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub mass: f64,
    pub threshold: f64,
    pub verdict: Dichotomy,
}

/// Zero-noise classification by the initial mass: blowup iff `mass > λ₁^{1/β}`.
pub fn dichotomy_from_mass(mass: f64, lambda1: f64, beta: f64) -> Result<DichotomyReport> {
    if !(beta > 0.0) || !(lambda1 > 0.0) {
        return Err(Error::Config("beta and lambda1 must be positive".into()));
    }
    let threshold = lambda1.powf(1.0 / beta);
    let verdict = if mass > threshold { Dichotomy::BlowupCertified } else { Dichotomy::TauInfinite };
    Ok(DichotomyReport { mass, threshold, verdict })
}

/// [`dichotomy_from_mass`] with `mass = Σ wᵢ fᵢ ψᵢ` and the discrete `λ₁`.
pub fn deterministic_dichotomy(f: &[f64], eigen: &EigenData, beta: f64) -> Result<DichotomyReport> {
    let g = eigen.grid();
    g.check_len(f)?;
    dichotomy_from_mass(g.inner(f, eigen.psi()), eigen.lambda1(), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::blowup_density;
    use crate::quadrature::exp_sinh;

    #[test]
    fn fixture_values() {
        let th = BlowupThreshold::new(0.5, 1.0).unwrap();
        let b = analytic_blowup_bound(1.0, 1.0, 1.0, th).unwrap();
        let q31 = (-1.0f64).exp() * 2.5;
        assert!((b.p_global - q31).abs() < 1e-14);
        assert!((b.p_blowup_lower - 0.08030).abs() < 1e-5);
    }

    #[test]
    fn tiny_data_never_fires() {
        let th = BlowupThreshold::new(1e-9, 1.0).unwrap();
        let b = analytic_blowup_bound(1.0, 1.0, 1.0, th).unwrap();
        assert!(b.z_star < 1e-8);
        assert!(b.p_global > 1.0 - 1e-12);
    }

    #[test]
    fn bounds_sum_to_one() {
        for &m in &[0.01, 0.1, 0.5, 1.0, 3.0, 40.0] {
            for &(k, be) in &[(0.3, 0.5), (1.0, 1.0), (2.0, 3.0)] {
                let th = BlowupThreshold::new(m, be).unwrap();
                let b = analytic_blowup_bound(1.3, k, be, th).unwrap();
                assert_eq!(b.p_global + b.p_blowup_lower, 1.0);
            }
        }
    }

    #[test]
    fn tail_integral_of_density() {
        for &(l, k, be, m) in &[(1.0, 1.0, 1.0, 0.5), (2.0, 0.7, 1.5, 0.3), (0.5, 1.8, 0.6, 2.0)] {
            let th = BlowupThreshold::new(m, be).unwrap();
            let b = analytic_blowup_bound(l, k, be, th).unwrap();
            let tail = exp_sinh(|y| blowup_density(y, l, k, be).unwrap(), th.x_star, 1e-13).unwrap();
            assert!((tail - b.p_blowup_lower).abs() < 1e-8, "{tail} vs {}", b.p_blowup_lower);
        }
    }

    #[test]
    fn zero_noise_is_redirected() {
        let th = BlowupThreshold::new(0.5, 1.0).unwrap();
        assert!(matches!(analytic_blowup_bound(1.0, 0.0, 1.0, th), Err(Error::ZeroNoise)));
    }

    #[test]
    fn dichotomy_threshold() {
        assert_eq!(dichotomy_from_mass(2.0, 1.0, 1.0).unwrap().verdict, Dichotomy::BlowupCertified);
        assert_eq!(dichotomy_from_mass(0.5, 1.0, 1.0).unwrap().verdict, Dichotomy::TauInfinite);
        let r = dichotomy_from_mass(1.0, 1.0, 2.0).unwrap();
        assert_eq!((r.threshold, r.verdict), (1.0, Dichotomy::TauInfinite));
        assert_eq!(dichotomy_from_mass(2.1, 4.0, 2.0).unwrap().verdict, Dichotomy::BlowupCertified);
    }

    #[test]
    fn dichotomy_on_grid() {
        use crate::spectral::{build_laplacian, solve_eigenpairs, DomainSpec, Grid};
        let d = DomainSpec::interval(std::f64::consts::PI).unwrap();
        let g = Grid::new(d.clone(), 128).unwrap();
        let e = solve_eigenpairs(&build_laplacian(&d, &g).unwrap(), 4).unwrap();
        let psi = e.psi();
        let norm2 = g.inner(psi, psi);
        // f scaled so that ⟨f, ψ⟩ = 2 and 0.5
        let f: Vec<f64> = psi.iter().map(|p| 2.0 * p / norm2).collect();
        let r = deterministic_dichotomy(&f, &e, 1.0).unwrap();
        assert!((r.mass - 2.0).abs() < 1e-12);
        assert_eq!(r.verdict, Dichotomy::BlowupCertified);
        let f: Vec<f64> = psi.iter().map(|p| 0.5 * p / norm2).collect();
        assert_eq!(deterministic_dichotomy(&f, &e, 1.0).unwrap().verdict, Dichotomy::TauInfinite);
    }
}
