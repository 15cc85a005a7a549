#![allow(dead_code)]

pub mod fock;

use hhg_core::correlation::{CorrelationTable, TableMeta};
use hhg_core::pulse::PulseParams;
use hhg_core::C64;

pub fn meta(key: &str) -> TableMeta {
    TableMeta {
        backend: "test".into(),
        key: key.into(),
        dipole_sign: -1,
        pulse: PulseParams::reference(0.0),
        anchor_stride: 1,
        dt: 0.0,
        grid: serde_json::Value::Null,
        absorbed_norm: 0.0,
        flagged: false,
    }
}

/// Table sampled from a kernel on the computed triangle `t' >= t''`.
pub fn kernel_table(times: Vec<f64>, stride: usize, f: impl Fn(f64, f64) -> C64) -> CorrelationTable {
    let n = times.len();
    let anchors: Vec<usize> = (0..n).step_by(stride).collect();
    assert_eq!(*anchors.last().unwrap(), n - 1, "stride must divide the grid");
    let columns = anchors
        .iter()
        .map(|&k| (k..n).map(|i| f(times[i], times[k])).collect())
        .collect();
    CorrelationTable::from_lower(times, anchors, columns, meta("kernel")).unwrap()
}

pub fn uniform(t_end: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps).map(|k| t_end * k as f64 / n_steps as f64).collect()
}

/// Classical driven oscillator `ẍ = -ω0² x + E(t)` from rest, RK4 with
/// `sub` substeps per output interval. Returns `x` at the output times.
pub fn driven_oscillator(omega0: f64, field: impl Fn(f64) -> f64, times: &[f64], sub: usize) -> Vec<f64> {
    let rhs = |t: f64, x: f64, v: f64| (v, -omega0 * omega0 * x + field(t));
    let (mut x, mut v) = (0.0, 0.0);
    let mut out = vec![x];
    for w in times.windows(2) {
        let h = (w[1] - w[0]) / sub as f64;
        for s in 0..sub {
            let t = w[0] + s as f64 * h;
            let (k1x, k1v) = rhs(t, x, v);
            let (k2x, k2v) = rhs(t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
            let (k3x, k3v) = rhs(t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
            let (k4x, k4v) = rhs(t + h, x + h * k3x, v + h * k3v);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        }
        out.push(x);
    }
    out
}

/// Composite Simpson over an odd number of uniform samples.
pub fn simpson(values: &[C64], h: f64) -> C64 {
    let n = values.len();
    assert!(n % 2 == 1 && n >= 3);
    let mut s = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    s * (h / 3.0)
}

/// `log10 |∫ ä(t) e^{iqωt} dt|²` for `q = 1..=q_max`, with the dipole
/// acceleration from second differences.
pub fn acceleration_spectrum(times: &[f64], d: &[f64], omega: f64, q_max: usize) -> Vec<f64> {
    let h = times[1] - times[0];
    let n = d.len();
    let acc: Vec<f64> = (0..n)
        .map(|k| {
            if k == 0 || k == n - 1 {
                0.0
            } else {
                (d[k + 1] - 2.0 * d[k] + d[k - 1]) / (h * h)
            }
        })
        .collect();
    (1..=q_max)
        .map(|q| {
            let w = q as f64 * omega;
            let mut s = C64::new(0.0, 0.0);
            for (k, (&t, &a)) in times.iter().zip(&acc).enumerate() {
                let wt = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                s += wt * a * C64::from_polar(1.0, w * t);
            }
            (s * h).norm_sqr().log10()
        })
        .collect()
}

/// Highest order whose five-order running mean of the log spectrum stays
/// within one decade of the plateau median (orders `plateau.0..=plateau.1`).
pub fn cutoff_order(log_spec: &[f64], plateau: (usize, usize)) -> usize {
    let mut p: Vec<f64> = log_spec[plateau.0 - 1..plateau.1].to_vec();
    p.sort_by(f64::total_cmp);
    let median = p[p.len() / 2];
    let n = log_spec.len();
    let smooth = |i: usize| {
        let lo = i.saturating_sub(2);
        let hi = (i + 2).min(n - 1);
        log_spec[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64
    };
    (0..n).filter(|&i| smooth(i) >= median - 1.0).max().unwrap() + 1
}
