use super::brownian::BrownianPath;

/// Exponents above this are clamped and flagged: the functional has entered the
/// blowup regime and its exact value no longer matters.
pub const EXPONENT_CAP: f64 = 700.0;

/// Running values of `A(t) = ∫₀ᵗ exp(a·s + b·W_s) ds` on the path grid.
#[derive(Clone, Debug)]
pub struct ExpFunctional {
    pub a: f64,
    pub b: f64,
    dt: f64,
    values: Vec<f64>,
    saturated_at: Option<usize>,
}

/// Trapezoidal evaluation of `A(t_k)` along `path`.
pub fn exp_functional(path: &BrownianPath, a: f64, b: f64) -> ExpFunctional {
    let dt = path.dt();
    let mut saturated_at = None;
    let mut integrand = |k: usize, w: f64| {
        let e = a * k as f64 * dt + b * w;
        if e > EXPONENT_CAP {
            saturated_at.get_or_insert(k);
            EXPONENT_CAP.exp()
        } else {
            e.exp()
        }
    };
    let mut values = Vec::with_capacity(path.len());
    values.push(0.0);
    let mut prev = integrand(0, path.values()[0]);
    let mut acc = 0.0;
    for (k, &w) in path.values().iter().enumerate().skip(1) {
        let g = integrand(k, w);
        acc += 0.5 * dt * (prev + g);
        values.push(acc);
        prev = g;
    }
    ExpFunctional { a, b, dt, values, saturated_at }
}

impl ExpFunctional {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// First grid index where the exponent was clamped, if any.
    pub fn saturated_at(&self) -> Option<usize> {
        self.saturated_at
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Linear interpolation of A between grid times; clamps beyond the last one.
    pub fn at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let s = t / self.dt;
        let k = s.floor() as usize;
        if k + 1 >= self.values.len() {
            return self.terminal();
        }
        let frac = s - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    /// First time A reaches `level`, linearly interpolated within the step.
    pub fn hitting_time(&self, level: f64) -> Option<f64> {
        if level <= 0.0 {
            return Some(0.0);
        }
        let k = self.values.iter().position(|&v| v >= level)?;
        let (lo, hi) = (self.values[k - 1], self.values[k]);
        Some(self.dt * ((k - 1) as f64 + (level - lo) / (hi - lo)))
    }
}
