use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifies the random stream of one trajectory. Each `(seed, path_index)` pair
/// selects an independent ChaCha stream, so a path never depends on how many
/// other paths were generated before it or on which thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub path_index: u64,
}

impl SeedRecord {
    pub fn new(seed: u64, path_index: u64) -> Self {
        Self { seed, path_index }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.path_index);
        rng
    }

    /// Gaussian increments N(0, dt) in path order.
    pub fn increments(&self, dt: f64) -> Increments {
        Increments { rng: self.rng(), scale: dt.sqrt() }
    }
}

pub struct Increments {
    rng: ChaCha8Rng,
    scale: f64,
}

impl Iterator for Increments {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        Some(self.scale * z)
    }
}

/// Number of steps of size `dt` that fit in `[0, horizon]`.
pub fn step_count(horizon: f64, dt: f64) -> usize {
    (horizon / dt + 1e-9).floor() as usize
}

/// Values `W_{t_k}` at `t_k = k·dt`, `W_0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    dt: f64,
    horizon: f64,
    values: Vec<f64>,
    seed: Option<SeedRecord>,
}

pub fn sample_brownian(horizon: f64, dt: f64, seed: u64, path_index: u64) -> Result<BrownianPath> {
    BrownianPath::sample(horizon, dt, SeedRecord::new(seed, path_index))
}

fn check_grid(horizon: f64, dt: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) || !(dt > 0.0) || dt > horizon {
        return Err(Error::Config(format!(
            "need 0 < dt <= horizon, got dt = {dt}, horizon = {horizon}"
        )));
    }
    Ok(())
}

impl BrownianPath {
    pub fn sample(horizon: f64, dt: f64, seed: SeedRecord) -> Result<Self> {
        check_grid(horizon, dt)?;
        let steps = step_count(horizon, dt);
        let mut values = Vec::with_capacity(steps + 1);
        let mut w = 0.0;
        values.push(w);
        for dw in seed.increments(dt).take(steps) {
            w += dw;
            values.push(w);
        }
        Ok(Self { dt, horizon, values, seed: Some(seed) })
    }

    /// The constant path `W ≡ 0`, used to inject deterministic fixtures.
    pub fn frozen(horizon: f64, dt: f64) -> Result<Self> {
        check_grid(horizon, dt)?;
        Ok(Self { dt, horizon, values: vec![0.0; step_count(horizon, dt) + 1], seed: None })
    }

    /// A path with prescribed values (diagnostic injection); `values[0]` must be 0.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || values[0] != 0.0 || !(dt > 0.0) {
            return Err(Error::Config("an injected path needs W_0 = 0 and at least one step".into()));
        }
        let horizon = dt * (values.len() - 1) as f64;
        Ok(Self { dt, horizon, values, seed: None })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> Option<SeedRecord> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    /// Last grid time.
    pub fn end_time(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Linear interpolation between grid values; clamps outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.values[0];
        }
        let s = t / self.dt;
        let k = s.floor() as usize;
        if k + 1 >= self.values.len() {
            return *self.values.last().unwrap();
        }
        let frac = s - k as f64;
        self.values[k] + frac * (self.values[k + 1] - self.values[k])
    }

    /// Grid index of time `t`, if `t` is a grid time up to 1e-9 relative.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let s = t / self.dt;
        let k = s.round();
        if (s - k).abs() <= 1e-9 * s.max(1.0) && (k as usize) < self.values.len() && k >= 0.0 {
            Some(k as usize)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_record_same_path() {
        let a = sample_brownian(1.0, 1e-3, 7, 3).unwrap();
        let b = sample_brownian(1.0, 1e-3, 7, 3).unwrap();
        assert_eq!(a.values(), b.values());
        let c = sample_brownian(1.0, 1e-3, 7, 4).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn shape_and_start() {
        let p = sample_brownian(2.0, 0.1, 1, 0).unwrap();
        assert_eq!(p.len(), 21);
        assert_eq!(p.values()[0], 0.0);
        assert!((p.end_time() - 2.0).abs() < 1e-12);
        assert!(sample_brownian(1.0, 2.0, 1, 0).is_err());
        assert!(sample_brownian(1.0, 0.0, 1, 0).is_err());
    }

    #[test]
    fn stream_matches_stored_path() {
        let p = sample_brownian(0.5, 1e-2, 11, 5).unwrap();
        let mut w = 0.0;
        for (k, dw) in SeedRecord::new(11, 5).increments(1e-2).take(50).enumerate() {
            w += dw;
            assert_eq!(w, p.values()[k + 1]);
        }
    }

    #[test]
    fn terminal_moments() {
        // CLT oracle: mean within 4 sd of the sample mean, variance within 5%
        let n = 100_000u64;
        let t = 1.0;
        let dt = 0.25;
        let finals: Vec<f64> = (0..n)
            .map(|i| SeedRecord::new(2024, i).increments(dt).take(4).sum::<f64>())
            .collect();
        let mean = finals.iter().sum::<f64>() / n as f64;
        let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 4.0 * (t / n as f64).sqrt(), "{mean}");
        assert!((var - t).abs() < 0.05 * t, "{var}");
    }

    #[test]
    fn interpolation_and_indexing() {
        let p = BrownianPath::from_values(0.5, vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(p.value_at(0.25), 0.5);
        assert_eq!(p.value_at(10.0), -1.0);
        assert_eq!(p.index_of(1.0), Some(2));
        assert_eq!(p.index_of(0.3), None);
        assert!(BrownianPath::from_values(0.5, vec![1.0, 0.0]).is_err());
    }
}
