//! Composite quadrature weights on uniform grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Rule used along the anchor axis of the two-time double integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Trapezoid,
    #[default]
    Simpson,
}

/// Composite trapezoid weights for `n` points with spacing `h`.
pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => {
            let mut w = vec![h; n];
            w[0] = 0.5 * h;
            w[n - 1] = 0.5 * h;
            w
        }
    }
}

/// Composite Simpson weights; an odd number of intervals closes with the
/// 3/8 rule on the last three, two points fall back to the trapezoid.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let intervals = n.saturating_sub(1);
    if intervals < 2 {
        return trapezoid_weights(n, h);
    }
    let mut w = vec![0.0; n];
    let (simpson_intervals, tail) = if intervals % 2 == 0 {
        (intervals, false)
    } else if intervals >= 3 {
        (intervals - 3, true)
    } else {
        unreachable!()
    };
    for i in (0..simpson_intervals).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if tail {
        let s = simpson_intervals;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

pub fn weights(rule: Rule, n: usize, h: f64) -> Vec<f64> {
    match rule {
        Rule::Trapezoid => trapezoid_weights(n, h),
        Rule::Simpson => simpson_weights(n, h),
    }
}

/// Spacing of a uniform grid, or an error if the samples are not uniform.
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::NonUniformGrid);
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::NonUniformGrid);
    }
    let tol = 1e-9 * (h + times[0].abs().max(times[times.len() - 1].abs()));
    for (k, t) in times.iter().enumerate() {
        if (t - (times[0] + k as f64 * h)).abs() > tol {
            return Err(Error::NonUniformGrid);
        }
    }
    Ok(h)
}

/// `∫ f(t) e^{iωt} dt` by the composite trapezoid on a uniform grid.
pub fn fourier_trapezoid(values: &[f64], times: &[f64], omega: f64) -> Result<C64> {
    if values.len() != times.len() {
        return Err(Error::Domain("values and times differ in length".into()));
    }
    let h = uniform_step(times)?;
    let w = trapezoid_weights(times.len(), h);
    Ok(values
        .iter()
        .zip(times)
        .zip(&w)
        .map(|((&f, &t), &wk)| C64::from_polar(wk * f, omega * t))
        .sum())
}
