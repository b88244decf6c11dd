//! Double-exponential quadrature on finite and semi-infinite intervals, plus the
//! trapezoidal helpers used on uniformly sampled data.
//!
//! The double-exponential rules are trapezoidal sums in a transformed variable
//! whose integrand decays like `exp(-c·exp|t|)`. They handle algebraic endpoint
//! singularities and slowly decaying power-law tails, which is exactly what the
//! reciprocal-gamma densities look like for small shape parameters.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

const MAX_LEVELS: usize = 14;
const T_MAX: f64 = 7.0;

/// ∫_a^b f(x) dx by the tanh-sinh rule.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("tanh_sinh needs finite limits".into()));
    }
    if a == b {
        return Ok(0.0);
    }
    let half = 0.5 * (b - a);
    let g = |t: f64| {
        let u = FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        // distance to the nearest endpoint, computed without cancellation
        let gap = half * 2.0 / ((2.0 * u.abs()).exp() + 1.0);
        let x = if t >= 0.0 { b - gap } else { a + gap };
        if gap == 0.0 || !ch.is_finite() {
            return None;
        }
        let w = half * FRAC_PI_2 * t.cosh() / (ch * ch);
        Some(f(x) * w)
    };
    de_trapezoid(g, tol)
}

/// ∫_a^∞ f(x) dx by the exp-sinh rule, `x = a + exp(π/2·sinh t)`.
///
/// ```
/// use spde_blowup::quadrature::exp_sinh;
/// let v = exp_sinh(|x| (-x).exp(), 0.0, 1e-12).unwrap();
/// assert!((v - 1.0).abs() < 1e-12);
/// ```
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    if !a.is_finite() {
        return Err(Error::Domain("exp_sinh needs a finite lower limit".into()));
    }
    let g = |t: f64| {
        let e = (FRAC_PI_2 * t.sinh()).exp();
        if e == 0.0 || !e.is_finite() {
            return None;
        }
        let w = FRAC_PI_2 * t.cosh() * e;
        Some(f(a + e) * w)
    };
    de_trapezoid(g, tol)
}

/// Trapezoidal sums of a transformed integrand `g(t)` on `[-T_MAX, T_MAX]`, refining
/// the step by halving until two successive levels agree.
fn de_trapezoid<G: Fn(f64) -> Option<f64>>(g: G, tol: f64) -> Result<f64> {
    let eval = |t: f64| -> f64 {
        match g(t) {
            Some(v) if v.is_finite() => v,
            _ => 0.0,
        }
    };
    let mut step = 0.5;
    let mut sum = eval(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * step;
        if t > T_MAX {
            break;
        }
        sum += eval(t) + eval(-t);
        k += 1;
    }
    let mut estimate = sum * step;
    for _ in 0..MAX_LEVELS {
        step *= 0.5;
        let mut added = 0.0;
        let mut k = 1;
        loop {
            let t = k as f64 * step;
            if t > T_MAX {
                break;
            }
            added += eval(t) + eval(-t);
            k += 2;
        }
        sum += added;
        let next = sum * step;
        if (next - estimate).abs() <= tol * next.abs().max(1.0) {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::Numerical("double-exponential quadrature did not converge".into()))
}

/// Running trapezoidal integral of uniformly spaced samples; `out[0] = 0`.
pub fn cumulative_trapezoid(samples: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(samples.len());
    out
}

/// Trapezoidal integral over possibly non-uniform abscissae.
pub fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_interval_with_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(|x| x.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10, "{v}");
        let v = tanh_sinh(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-13).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn semi_infinite_power_tail() {
        // ∫_1^∞ x^{-3/2} dx = 2
        let v = exp_sinh(|x| x.powf(-1.5), 1.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn cumulative_trapezoid_is_exact_for_lines() {
        let dt = 0.1;
        let s: Vec<f64> = (0..11).map(|k| 2.0 * k as f64 * dt + 1.0).collect();
        let c = cumulative_trapezoid(&s, dt);
        // ∫_0^1 (2t + 1) dt = 2
        assert!((c[10] - 2.0).abs() < 1e-14);
        assert_eq!(c.len(), s.len());
    }
}
