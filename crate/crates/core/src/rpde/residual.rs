use serde::Serialize;

use crate::blowup::ModelParams;
use crate::error::{Error, Result};
use crate::laws::BrownianPath;
use crate::spectral::{sup_norm, truncation_bound, DomainKind, EigenData};

use super::trajectory::{FieldKind, TrajectoryResult};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualSeries {
    pub times: Vec<f64>,
    /// One series per test function (weak form) or a single sup-norm series (mild form).
    pub residual: Vec<Vec<f64>>,
    pub max_abs: f64,
    /// Spectral truncation bound of the initial datum (mild form only).
    pub truncation: Option<f64>,
}

fn check_traj(traj: &TrajectoryResult, path: &BrownianPath, eigen: &EigenData) -> Result<()> {
    if traj.kind != FieldKind::V {
        return Err(Error::Config("residuals are evaluated for the transformed field".into()));
    }
    if (traj.path_dt - path.dt()).abs() > 1e-12 * path.dt() {
        return Err(Error::Config("trajectory and path do not share a time grid".into()));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::Config("need at least two snapshots".into()));
    }
    eigen.grid().check_len(&traj.snapshots[0].values)
}

fn left_noise(path: &BrownianPath, t: f64, dt: f64) -> f64 {
    let k = ((t + 1e-9 * dt) / path.dt()).floor() as usize;
    path.values()[k.min(path.len() - 1)]
}

/// Sampled continuum Dirichlet eigenfunctions (sines) of the domain, the first
/// `count` by eigenvalue, with their eigenvalues.
pub fn continuum_test_functions(eigen: &EigenData, count: usize) -> Vec<(f64, Vec<f64>)> {
    let g = eigen.grid();
    let d = g.domain();
    let lens = d.lengths().to_vec();
    let mut idx: Vec<Vec<usize>> = match d.kind() {
        DomainKind::Interval => (1..=count).map(|j| vec![j]).collect(),
        DomainKind::Rectangle => {
            let r = count + 1;
            (1..=r).flat_map(|a| (1..=r).map(move |b| vec![a, b])).collect()
        }
    };
    idx.sort_by(|a, b| d.analytic_eigenvalue(a).total_cmp(&d.analytic_eigenvalue(b)));
    idx.truncate(count);
    idx.into_iter()
        .map(|k| {
            let mu = d.analytic_eigenvalue(&k);
            let phi = g.sample(|x| {
                x.iter()
                    .zip(&k)
                    .zip(&lens)
                    .map(|((xi, ki), l)| (*ki as f64 * std::f64::consts::PI * xi / l).sin())
                    .product()
            });
            (mu, phi)
        })
        .collect()
}

/// Integrated weak identity for the transformed equation tested against sampled
/// sines `φ` with `Δφ = -μφ`:
/// `⟨v(t),φ⟩ - ⟨f,φ⟩ - ∫₀ᵗ [-(μ + κ²/2)⟨v,φ⟩ + ⟨R(v, W), φ⟩] ds`,
/// with the time integral taken by the trapezoidal rule on the stored snapshots.
pub fn weak_form_residual(
    traj: &TrajectoryResult,
    path: &BrownianPath,
    params: &ModelParams,
    eigen: &EigenData,
    test_functions: usize,
) -> Result<ResidualSeries> {
    check_traj(traj, path, eigen)?;
    let g = eigen.grid();
    let k2 = 0.5 * params.kappa * params.kappa;
    let tests = continuum_test_functions(eigen, test_functions.max(1));
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.t).collect();
    let mut residual = Vec::with_capacity(tests.len());
    for (mu, phi) in &tests {
        let integrand: Vec<f64> = traj
            .snapshots
            .iter()
            .map(|s| {
                let w = left_noise(path, s.t, traj.dt);
                let react: Vec<f64> = s.values.iter().map(|v| params.reaction(*v, w)).collect();
                -(mu + k2) * g.inner(&s.values, phi) + g.inner(&react, phi)
            })
            .collect();
        let p0 = g.inner(&traj.snapshots[0].values, phi);
        let mut acc = 0.0;
        let mut series = vec![0.0];
        for m in 1..traj.snapshots.len() {
            acc += 0.5 * (times[m] - times[m - 1]) * (integrand[m] + integrand[m - 1]);
            series.push(g.inner(&traj.snapshots[m].values, phi) - p0 - acc);
        }
        residual.push(series);
    }
    let max_abs = residual.iter().flatten().fold(0.0f64, |m, r| m.max(r.abs()));
    Ok(ResidualSeries { times, residual, max_abs, truncation: None })
}

/// Mild-form residual `v(t) - e^{-κ²t/2}S_t f - ∫₀ᵗ e^{-κ²(t-r)/2} S_{t-r} R(r) dr`
/// in the retained spectral basis, with the Duhamel integral accumulated by the
/// trapezoidal rule on the stored snapshots; sup-norm per time.
pub fn mild_residual(
    traj: &TrajectoryResult,
    path: &BrownianPath,
    params: &ModelParams,
    basis: &EigenData,
) -> Result<ResidualSeries> {
    check_traj(traj, path, basis)?;
    let k2 = 0.5 * params.kappa * params.kappa;
    let rates: Vec<f64> = basis.lambdas().iter().map(|l| l + k2).collect();
    let snaps = &traj.snapshots;
    let c0 = basis.project(&snaps[0].values);
    let source = |m: usize| -> Vec<f64> {
        let w = left_noise(path, snaps[m].t, traj.dt);
        let r: Vec<f64> = snaps[m].values.iter().map(|v| params.reaction(*v, w)).collect();
        basis.project(&r)
    };
    let mut duhamel = vec![0.0; rates.len()];
    let mut prev_src = source(0);
    let mut times = vec![snaps[0].t];
    let mut series = vec![0.0];
    for m in 1..snaps.len() {
        let h = snaps[m].t - snaps[m - 1].t;
        let src = source(m);
        let t = snaps[m].t;
        let c = basis.project(&snaps[m].values);
        let diff: Vec<f64> = (0..rates.len())
            .map(|k| {
                let decay = (-rates[k] * h).exp();
                duhamel[k] = decay * duhamel[k] + 0.5 * h * (decay * prev_src[k] + src[k]);
                c[k] - (-rates[k] * t).exp() * c0[k] - duhamel[k]
            })
            .collect();
        series.push(sup_norm(&basis.synthesize(&diff)));
        times.push(t);
        prev_src = src;
    }
    let max_abs = series.iter().fold(0.0f64, |a, b| a.max(*b));
    let truncation = truncation_bound(&snaps[0].values, 0.0, basis)?;
    Ok(ResidualSeries { times, residual: vec![series], max_abs, truncation: Some(truncation) })
}
