use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tabulated nonlinearity, linearly interpolated. Beyond the last abscissa the
/// ratio G(z)/z is held at its last tabulated value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedG {
    z: Vec<f64>,
    g: Vec<f64>,
}

impl TabulatedG {
    pub fn new(z: Vec<f64>, g: Vec<f64>) -> Result<Self> {
        if z.len() != g.len() || z.len() < 2 {
            return Err(Error::Config("tabulated G needs matching abscissae and values (>= 2)".into()));
        }
        if z[0] != 0.0 || g[0] != 0.0 {
            return Err(Error::Config("tabulated G must start at G(0) = 0".into()));
        }
        if z.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("tabulated G abscissae must be strictly increasing".into()));
        }
        if g.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Config("tabulated G must be nonnegative".into()));
        }
        let ratios: Vec<f64> = z.iter().zip(&g).skip(1).map(|(z, g)| g / z).collect();
        if let Some(i) = ratios.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::Config(format!(
                "G(z)/z must be increasing; it decreases after z = {}",
                z[i + 1]
            )));
        }
        Ok(Self { z, g })
    }

    pub fn eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        let last = self.z.len() - 1;
        if z >= self.z[last] {
            return z * self.g[last] / self.z[last];
        }
        let k = self.z.partition_point(|&x| x <= z) - 1;
        let frac = (z - self.z[k]) / (self.z[k + 1] - self.z[k]);
        self.g[k] + frac * (self.g[k + 1] - self.g[k])
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.z.iter().cloned().zip(self.g.iter().cloned())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Nonlinearity {
    /// G(z) = Λ z^{1+β}
    PowerLaw,
    Custom(TabulatedG),
}

/// How the noise enters the reaction term of the transformed equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReactionVariant {
    /// e^{-κW} G(e^{κW} v): the exact image of the multiplicative-noise equation.
    #[default]
    Transformed,
    /// e^{-κW} G(v): the saturating modification, where the bound on G is only
    /// required on (0, C*).
    Saturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub beta: f64,
    pub kappa: f64,
    /// Lower constant C in G(z) >= C z^{1+β}.
    pub c_lower: f64,
    /// Upper constant Λ in G(z) <= Λ z^{1+β}.
    pub lambda_upper: f64,
    pub c_star: Option<f64>,
    pub g: Nonlinearity,
    pub variant: ReactionVariant,
}

impl ModelParams {
    /// G(z) = Λ z^{1+β}, for which C = Λ.
    pub fn power_law(lambda: f64, beta: f64, kappa: f64) -> Result<Self> {
        let p = Self {
            beta,
            kappa,
            c_lower: lambda,
            lambda_upper: lambda,
            c_star: None,
            g: Nonlinearity::PowerLaw,
            variant: ReactionVariant::Transformed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive, got {}", self.beta)));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::Config(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.c_lower > 0.0) || !(self.lambda_upper > 0.0) {
            return Err(Error::Config("C and Lambda must be positive".into()));
        }
        if let Some(cs) = self.c_star {
            if !(cs > 0.0) {
                return Err(Error::Config(format!("C* must be positive, got {cs}")));
            }
        }
        if self.g == Nonlinearity::PowerLaw && self.c_lower > self.lambda_upper {
            return Err(Error::Config("power law needs C <= Lambda".into()));
        }
        Ok(())
    }

    pub fn with_c_star(mut self, c_star: f64) -> Self {
        self.c_star = Some(c_star);
        self
    }

    pub fn with_variant(mut self, variant: ReactionVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    /// G(z), with G(z) = 0 for z <= 0.
    #[inline]
    pub fn g(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return 0.0;
        }
        match &self.g {
            Nonlinearity::PowerLaw => self.lambda_upper * z.powf(1.0 + self.beta),
            Nonlinearity::Custom(t) => t.eval(z),
        }
    }

    /// Reaction term of the transformed equation at noise value `w`.
    #[inline]
    pub fn reaction(&self, v: f64, w: f64) -> f64 {
        let scale = (self.kappa * w).exp();
        match self.variant {
            ReactionVariant::Transformed => self.g(scale * v) / scale,
            ReactionVariant::Saturating => self.g(v) / scale,
        }
    }

    /// Whether C z^{1+β} <= G(z) <= Λ z^{1+β} on the tabulation (always true for
    /// the power law).
    pub fn growth_bounds_hold(&self) -> (bool, bool) {
        match &self.g {
            Nonlinearity::PowerLaw => (true, true),
            Nonlinearity::Custom(t) => {
                let mut lower = true;
                let mut upper = true;
                for (z, g) in t.points().skip(1) {
                    let p = z.powf(1.0 + self.beta);
                    lower &= g >= self.c_lower * p * (1.0 - 1e-12);
                    upper &= g <= self.lambda_upper * p * (1.0 + 1e-12);
                }
                (lower, upper)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_bounds_and_reaction() {
        let p = ModelParams::power_law(2.0, 1.0, 0.5).unwrap();
        assert_eq!(p.c_lower, p.lambda_upper);
        assert_eq!(p.g(3.0), 18.0);
        assert_eq!(p.g(-1.0), 0.0);
        // e^{-κW} G(e^{κW} v) = Λ e^{κβW} v^{1+β}
        let w = 0.7;
        let r = p.reaction(1.5, w);
        assert!((r - 2.0 * (0.5 * w).exp() * 2.25).abs() < 1e-12);
        // W = 0 reduces to G
        assert_eq!(p.reaction(1.5, 0.0), p.g(1.5));
        let s = p.clone().with_variant(ReactionVariant::Saturating);
        assert!((s.reaction(1.5, w) - p.g(1.5) * (-0.5 * w).exp()).abs() < 1e-12);
    }

    #[test]
    fn tabulated_validation() {
        assert!(TabulatedG::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).is_ok());
        assert!(TabulatedG::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.5]).is_err());
        assert!(TabulatedG::new(vec![0.5, 1.0], vec![0.0, 1.0]).is_err());
        assert!(TabulatedG::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]).is_err());
        let t = TabulatedG::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(t.eval(1.5), 2.5);
        assert_eq!(t.eval(4.0), 8.0);
        assert_eq!(t.eval(-1.0), 0.0);
    }

    #[test]
    fn custom_growth_bounds() {
        let t = TabulatedG::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 4.0]).unwrap();
        let mut p = ModelParams::power_law(1.0, 1.0, 1.0).unwrap();
        p.g = Nonlinearity::Custom(t);
        assert_eq!(p.growth_bounds_hold(), (true, true));
        p.lambda_upper = 0.5;
        assert_eq!(p.growth_bounds_hold(), (true, false));
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::power_law(1.0, 0.0, 1.0).is_err());
        assert!(ModelParams::power_law(1.0, 1.0, -1.0).is_err());
        assert!(ModelParams::power_law(0.0, 1.0, 1.0).is_err());
    }
}
