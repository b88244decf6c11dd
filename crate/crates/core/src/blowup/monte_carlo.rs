use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{perpetuity_cdf, step_count, SeedRecord, EXPONENT_CAP};

use super::bound::analytic_blowup_bound;
use super::lower_solution::{functional_coefficients, BlowupThreshold};
use super::model::ModelParams;

pub const MIN_PATHS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McConfig {
    pub n_paths: usize,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub n_paths: usize,
    pub n_blowup: usize,
    pub n_censored: usize,
    pub stderr: f64,
    pub analytic_blowup: f64,
    pub truncation_allowance: f64,
}

impl ProbabilityEstimate {
    fn from_counts(n_paths: usize, n_blowup: usize, analytic: f64, allowance: f64) -> Self {
        let p = n_blowup as f64 / n_paths as f64;
        Self {
            p_hat: p,
            n_paths,
            n_blowup,
            n_censored: n_paths - n_blowup,
            stderr: (p * (1.0 - p) / n_paths as f64).sqrt(),
            analytic_blowup: analytic,
            truncation_allowance: allowance,
        }
    }

    /// `|p̂ - p| <= 3·stderr + allowance`.
    pub fn agrees_with(&self, p: f64, allowance: f64) -> bool {
        (self.p_hat - p).abs() <= 3.0 * self.stderr + allowance
    }
}

/// Hitting time of `level` by `A(t) = ∫₀ᵗ e^{as+bW_s} ds` on a path that is generated
/// and integrated step by step, never stored. Bit-identical to building the path and
/// calling [`crate::laws::ExpFunctional::hitting_time`].
pub fn streamed_hitting_time(
    seed: SeedRecord,
    steps: usize,
    dt: f64,
    a: f64,
    b: f64,
    level: f64,
) -> Option<f64> {
    if level <= 0.0 {
        return Some(0.0);
    }
    let integrand = |k: usize, w: f64| {
        let e = a * k as f64 * dt + b * w;
        if e > EXPONENT_CAP {
            EXPONENT_CAP.exp()
        } else {
            e.exp()
        }
    };
    let mut w = 0.0;
    let mut prev = integrand(0, w);
    let mut acc = 0.0;
    for (j, dw) in seed.increments(dt).take(steps).enumerate() {
        let k = j + 1;
        w += dw;
        let g = integrand(k, w);
        let next = acc + 0.5 * dt * (prev + g);
        if next >= level {
            return Some(dt * ((k - 1) as f64 + (level - acc) / (next - acc)));
        }
        acc = next;
        prev = g;
    }
    None
}

pub(crate) fn run_pool<T: Send, F: Fn() -> T + Send>(workers: Option<usize>, job: F) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::Config("worker count must be positive".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

/// Hitting times of `x*` for paths `0..n_paths`, in path order.
pub fn mc_hitting_times(
    params: &ModelParams,
    lambda1: f64,
    threshold: BlowupThreshold,
    cfg: &McConfig,
) -> Result<Vec<Option<f64>>> {
    if !(cfg.dt > 0.0 && cfg.horizon >= cfg.dt) {
        return Err(Error::Config(format!(
            "need 0 < dt <= horizon, got dt = {}, horizon = {}",
            cfg.dt, cfg.horizon
        )));
    }
    let (a, b) = functional_coefficients(params.beta, params.kappa, lambda1);
    let steps = step_count(cfg.horizon, cfg.dt);
    let (seed, dt, level) = (cfg.seed, cfg.dt, threshold.x_star);
    run_pool(cfg.workers, || {
        (0..cfg.n_paths as u64)
            .into_par_iter()
            .map(|i| streamed_hitting_time(SeedRecord::new(seed, i), steps, dt, a, b, level))
            .collect()
    })
}

/// Bound on `P[τ ∈ (T, ∞)]`. With `E = E[A_∞ - A_T] = e^{(a+b²/2)T}/|a+b²/2|` and
/// `η = √E`, Markov's inequality gives
/// `P[A_T < x* <= A_∞] <= E/η + P[x* <= A_∞ < x* + η]`.
pub fn truncation_allowance(
    lambda1: f64,
    kappa: f64,
    beta: f64,
    threshold: BlowupThreshold,
    horizon: f64,
) -> Result<f64> {
    let (a, b) = functional_coefficients(beta, kappa, lambda1);
    let rate = a + 0.5 * b * b;
    if rate >= 0.0 {
        return Ok(1.0);
    }
    let mean_tail = (rate * horizon).exp() / rate.abs();
    let eta = mean_tail.sqrt();
    let x = threshold.x_star;
    let mass = perpetuity_cdf(x + eta, lambda1, kappa, beta)? - perpetuity_cdf(x, lambda1, kappa, beta)?;
    Ok((eta + mass).min(1.0))
}

/// Fraction of paths whose functional reaches `x*` before the horizon, with the
/// closed-form lower bound as reference.
pub fn mc_blowup_probability(
    params: &ModelParams,
    lambda1: f64,
    threshold: BlowupThreshold,
    cfg: &McConfig,
) -> Result<ProbabilityEstimate> {
    if params.kappa == 0.0 {
        return Err(Error::ZeroNoise);
    }
    if cfg.n_paths < MIN_PATHS {
        return Err(Error::Config(format!(
            "Monte Carlo needs at least {MIN_PATHS} paths, got {}",
            cfg.n_paths
        )));
    }
    let times = mc_hitting_times(params, lambda1, threshold, cfg)?;
    let n_blowup = times.iter().filter(|t| t.is_some()).count();
    let analytic = analytic_blowup_bound(lambda1, params.kappa, params.beta, threshold)?;
    let allowance =
        truncation_allowance(lambda1, params.kappa, params.beta, threshold, cfg.horizon)?;
    Ok(ProbabilityEstimate::from_counts(
        cfg.n_paths,
        n_blowup,
        analytic.p_blowup_lower,
        allowance,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::{exp_functional, BrownianPath};

    fn fixture() -> (ModelParams, BlowupThreshold) {
        (ModelParams::power_law(1.0, 1.0, 1.0).unwrap(), BlowupThreshold::new(0.5, 1.0).unwrap())
    }

    #[test]
    fn streaming_matches_stored_path() {
        let (a, b) = functional_coefficients(1.0, 1.0, 1.0);
        for i in 0..200 {
            let seed = SeedRecord::new(9, i);
            let path = BrownianPath::sample(5.0, 1e-2, seed).unwrap();
            let stored = exp_functional(&path, a, b).hitting_time(0.3);
            let streamed = streamed_hitting_time(seed, path.len() - 1, 1e-2, a, b, 0.3);
            assert_eq!(stored, streamed);
        }
    }

    #[test]
    fn huge_mass_always_blows_up() {
        let (params, _) = fixture();
        let th = BlowupThreshold::new(1e6, 1.0).unwrap();
        let cfg = McConfig { n_paths: 1000, horizon: 1.0, dt: 1e-2, seed: 1, workers: None };
        let est = mc_blowup_probability(&params, 1.0, th, &cfg).unwrap();
        assert_eq!(est.p_hat, 1.0);
        assert_eq!(est.n_censored, 0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn worker_count_does_not_change_result() {
        let (params, th) = fixture();
        let run = |w| {
            let cfg = McConfig { n_paths: 1000, horizon: 5.0, dt: 1e-2, seed: 3, workers: Some(w) };
            mc_hitting_times(&params, 1.0, th, &cfg).unwrap()
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn coarse_estimate_is_near_the_law() {
        // dt = 1e-2 biases A slightly upward; a loose tolerance still rules out gross errors
        let (params, th) = fixture();
        let cfg = McConfig { n_paths: 4000, horizon: 20.0, dt: 1e-2, seed: 11, workers: None };
        let est = mc_blowup_probability(&params, 1.0, th, &cfg).unwrap();
        assert!((est.analytic_blowup - 0.0803013970713942).abs() < 1e-12);
        assert!(est.agrees_with(est.analytic_blowup, 0.01), "{est:?}");
        assert_eq!(est.n_blowup + est.n_censored, est.n_paths);
    }

    #[test]
    fn allowance_shrinks_with_horizon() {
        let (_, th) = fixture();
        let a10 = truncation_allowance(1.0, 1.0, 1.0, th, 10.0).unwrap();
        let a50 = truncation_allowance(1.0, 1.0, 1.0, th, 50.0).unwrap();
        assert!(a50 < a10 && a50 < 1e-9);
    }

    #[test]
    fn rejects_small_runs_and_zero_noise() {
        let (params, th) = fixture();
        let cfg = McConfig { n_paths: 10, horizon: 1.0, dt: 1e-2, seed: 1, workers: None };
        assert!(matches!(mc_blowup_probability(&params, 1.0, th, &cfg), Err(Error::Config(_))));
        let cfg = McConfig { n_paths: 1000, ..cfg };
        let p0 = params.with_kappa(0.0);
        assert!(matches!(mc_blowup_probability(&p0, 1.0, th, &cfg), Err(Error::ZeroNoise)));
    }
}
