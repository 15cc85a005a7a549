//! Strong-field-approximation backend.
//!
//! The bound–continuum transition kernel is
//! `d_vg(t) = d(v + A(t)) · exp(i S(v, t))` with
//! `S(v, t) = (v²/2 + I_p) t + v ∫A + ½ ∫A²` (integrals from the start of the
//! window, `A = -∫E`). Continuum–continuum transitions are neglected and the
//! ground-state amplitude is kept at one. All integrals are direct
//! quadratures over the momentum and time grids; no saddle points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationTable, DipoleRecord, TableMeta};
use crate::error::{Error, Result};
use crate::pulse::{vector_potential, PulseParams, TimeGrid};
use crate::quad::trapezoid_weights;
use crate::C64;

/// Momenta handled per work item when streaming over the grid.
const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DipoleElement {
    /// Hydrogen-like 1s: `d(p) ∝ p / (p² + 2 I_p)³`.
    Hydrogenic1s,
    /// `d(p) ∝ p exp(-p² w² / 2)`, normalized to `∫|d|² dp = 1`.
    Gaussian { width: f64 },
}

impl DipoleElement {
    pub fn value(&self, p: f64, ip: f64) -> C64 {
        match *self {
            Self::Hydrogenic1s => {
                let a = 2.0 * ip;
                let c = 2f64.powf(3.5) * a.powf(1.25) / std::f64::consts::PI;
                C64::new(0.0, c * p / (p * p + a).powi(3))
            }
            Self::Gaussian { width } => {
                let c = (2.0 * width.powi(3) / std::f64::consts::PI.sqrt()).sqrt();
                C64::new(0.0, c * p * (-0.5 * p * p * width * width).exp())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub v_min: f64,
    pub v_max: f64,
    pub n_v: usize,
}

impl MomentumGrid {
    pub fn dv(&self) -> f64 {
        (self.v_max - self.v_min) / (self.n_v - 1) as f64
    }

    pub fn values(&self) -> Vec<f64> {
        let dv = self.dv();
        (0..self.n_v).map(|j| self.v_min + j as f64 * dv).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_v, self.dv())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfaParams {
    pub ip: f64,
    pub dipole_matrix_element: DipoleElement,
    pub v_grid: MomentumGrid,
    pub dt: f64,
    pub anchor_stride: usize,
    #[serde(default)]
    pub tail_cycles: u32,
}

impl Default for SfaParams {
    fn default() -> Self {
        Self {
            ip: 0.5,
            dipole_matrix_element: DipoleElement::Hydrogenic1s,
            v_grid: MomentumGrid {
                v_min: -6.0,
                v_max: 6.0,
                n_v: 8192,
            },
            dt: 0.1,
            anchor_stride: 10,
            tail_cycles: 0,
        }
    }
}

impl SfaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ip > 0.0) {
            return Err(Error::Domain(format!("ionization potential must be positive, got {}", self.ip)));
        }
        let g = &self.v_grid;
        if g.n_v < 512 {
            return Err(Error::InvalidGrid(format!("n_v must be >= 512, got {}", g.n_v)));
        }
        if !(g.v_max > 0.0) || (g.v_min + g.v_max).abs() > 1e-12 * g.v_max {
            return Err(Error::InvalidGrid(format!(
                "momentum grid [{}, {}] must be symmetric about zero",
                g.v_min, g.v_max
            )));
        }
        if let DipoleElement::Gaussian { width } = self.dipole_matrix_element {
            if !(width > 0.0) {
                return Err(Error::Domain(format!("Gaussian width must be positive, got {width}")));
            }
        }
        if self.anchor_stride == 0 || !(self.dt > 0.0) {
            return Err(Error::InvalidGrid("dt and anchor stride must be positive".into()));
        }
        Ok(())
    }

    pub fn time_grid(&self, pulse: &PulseParams) -> Result<TimeGrid> {
        TimeGrid::for_pulse(pulse, self.dt, self.anchor_stride, self.tail_cycles)
    }
}

/// Time-dependent pieces of the action shared by every momentum.
struct Dressing {
    times: Vec<f64>,
    field: Vec<f64>,
    a: Vec<f64>,
    int_a: Vec<f64>,
    int_a2: Vec<f64>,
}

impl Dressing {
    fn new(pulse: &PulseParams, tg: &TimeGrid) -> Self {
        let times = tg.times();
        let field: Vec<f64> = times.iter().map(|&t| pulse.field_at(t)).collect();
        let a = vector_potential(pulse, tg);
        let mut int_a = Vec::with_capacity(a.len());
        let mut int_a2 = Vec::with_capacity(a.len());
        let (mut s1, mut s2) = (0.0, 0.0);
        int_a.push(0.0);
        int_a2.push(0.0);
        for w in a.windows(2) {
            s1 += 0.5 * tg.dt * (w[0] + w[1]);
            s2 += 0.5 * tg.dt * (w[0] * w[0] + w[1] * w[1]);
            int_a.push(s1);
            int_a2.push(s2);
        }
        Self {
            times,
            field,
            a,
            int_a,
            int_a2,
        }
    }

    fn action(&self, v: f64, ip: f64) -> Vec<f64> {
        self.times
            .iter()
            .zip(&self.int_a)
            .zip(&self.int_a2)
            .map(|((t, ia), ia2)| (0.5 * v * v + ip) * t + v * ia + 0.5 * ia2)
            .collect()
    }

    fn row(&self, v: f64, params: &SfaParams, out: &mut [C64]) {
        let ip = params.ip;
        for (k, z) in out.iter_mut().enumerate() {
            let s = (0.5 * v * v + ip) * self.times[k] + v * self.int_a[k] + 0.5 * self.int_a2[k];
            *z = params.dipole_matrix_element.value(v + self.a[k], ip) * C64::from_polar(1.0, s);
        }
    }

    /// Largest phase step between neighbouring momenta, relative to the
    /// start of the window (a common offset cancels in every observable).
    fn max_phase_step(&self, grid: &MomentumGrid) -> f64 {
        let span = self.times.last().unwrap() - self.times[0];
        let vmax = grid.v_max.abs().max(grid.v_min.abs());
        let range_ia = self.int_a.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        grid.dv() * (vmax * span + range_ia)
    }
}

fn check_nyquist(dressing: &Dressing, grid: &MomentumGrid) -> Result<()> {
    let step = dressing.max_phase_step(grid);
    if step > std::f64::consts::PI {
        let max_dv = grid.dv() * std::f64::consts::PI / step;
        return Err(Error::CoarseMomentumGrid { dv: grid.dv(), max_dv });
    }
    Ok(())
}

/// `d_vg(t)` on the momentum grid × time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    pub times: Vec<f64>,
    pub momenta: Vec<f64>,
    /// Row-major `n_v × n_t`.
    pub values: Vec<C64>,
}

impl TransitionKernel {
    pub fn get(&self, v: usize, t: usize) -> C64 {
        self.values[v * self.times.len() + t]
    }

    pub fn row(&self, v: usize) -> &[C64] {
        let n = self.times.len();
        &self.values[v * n..(v + 1) * n]
    }
}

pub fn transition_amplitude(params: &SfaParams, pulse: &PulseParams) -> Result<TransitionKernel> {
    params.validate()?;
    pulse.validate()?;
    let tg = params.time_grid(pulse)?;
    let dressing = Dressing::new(pulse, &tg);
    check_nyquist(&dressing, &params.v_grid)?;
    let n_t = tg.len();
    let momenta = params.v_grid.values();
    let mut values = vec![C64::new(0.0, 0.0); momenta.len() * n_t];
    values
        .par_chunks_mut(n_t)
        .zip(&momenta)
        .for_each(|(row, &v)| dressing.row(v, params, row));
    Ok(TransitionKernel {
        times: dressing.times,
        momenta,
        values,
    })
}

/// Accumulated action `S(v, t)` on the params' time grid.
pub fn action(params: &SfaParams, pulse: &PulseParams, v: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let tg = params.time_grid(pulse)?;
    let dressing = Dressing::new(pulse, &tg);
    let s = dressing.action(v, params.ip);
    Ok((dressing.times, s))
}

/// Sums per-chunk partial results in chunk order so the answer does not
/// depend on thread scheduling.
fn chunked_sum<F>(params: &SfaParams, len: usize, f: F) -> Vec<C64>
where
    F: Fn(&[f64], &[f64], &mut [C64]) + Sync,
{
    let vs = params.v_grid.values();
    let ws = params.v_grid.weights();
    let partials: Vec<Vec<C64>> = vs
        .par_chunks(CHUNK)
        .zip(ws.par_chunks(CHUNK))
        .map(|(v, w)| {
            let mut acc = vec![C64::new(0.0, 0.0); len];
            f(v, w, &mut acc);
            acc
        })
        .collect();
    let mut total = vec![C64::new(0.0, 0.0); len];
    for p in partials {
        total.iter_mut().zip(p).for_each(|(t, x)| *t += x);
    }
    total
}

/// Lewenstein-form dipole expectation value
/// `⟨d(t)⟩ = 2 Re[i ∫dv d*_vg(t) ∫_0^t E(t') d_vg(t') dt']`.
pub fn sfa_dipole_mean(params: &SfaParams, pulse: &PulseParams) -> Result<DipoleRecord> {
    params.validate()?;
    pulse.validate()?;
    let tg = params.time_grid(pulse)?;
    let dressing = Dressing::new(pulse, &tg);
    check_nyquist(&dressing, &params.v_grid)?;
    let n_t = tg.len();
    let h = tg.dt;
    let sum = chunked_sum(params, n_t, |vs, ws, acc| {
        let mut row = vec![C64::new(0.0, 0.0); n_t];
        for (&v, &w) in vs.iter().zip(ws) {
            dressing.row(v, params, &mut row);
            let mut inner = C64::new(0.0, 0.0);
            let mut prev = dressing.field[0] * row[0];
            for k in 1..n_t {
                let cur = dressing.field[k] * row[k];
                inner += 0.5 * h * (prev + cur);
                prev = cur;
                acc[k] += w * row[k].conj() * inner;
            }
        }
    });
    let d_mean = sum.iter().map(|z| 2.0 * (C64::i() * z).re).collect();
    Ok(DipoleRecord {
        times: dressing.times,
        d_mean,
        absorbed_norm: 0.0,
    })
}

/// `C_c(t', t'') = ∫dv d*_vg(t') d_vg(t'')` on the probe × anchor grid.
pub fn sfa_connected_correlation(
    params: &SfaParams,
    pulse: &PulseParams,
    key: &str,
) -> Result<CorrelationTable> {
    params.validate()?;
    pulse.validate()?;
    let tg = params.time_grid(pulse)?;
    let dressing = Dressing::new(pulse, &tg);
    check_nyquist(&dressing, &params.v_grid)?;
    let n_t = tg.len();
    let anchors = tg.anchor_indices();
    // Packed lower columns: column a holds probes k_a..n_t.
    let offsets: Vec<usize> = anchors
        .iter()
        .scan(0usize, |acc, &k| {
            let o = *acc;
            *acc += n_t - k;
            Some(o)
        })
        .collect();
    let packed_len = anchors.iter().map(|&k| n_t - k).sum();
    let packed = chunked_sum(params, packed_len, |vs, ws, acc| {
        let mut row = vec![C64::new(0.0, 0.0); n_t];
        for (&v, &w) in vs.iter().zip(ws) {
            dressing.row(v, params, &mut row);
            for (&ka, &off) in anchors.iter().zip(&offsets) {
                let at_anchor = w * row[ka];
                for (slot, z) in acc[off..off + n_t - ka].iter_mut().zip(&row[ka..]) {
                    *slot += z.conj() * at_anchor;
                }
            }
        }
    });
    let columns: Vec<Vec<C64>> = anchors
        .iter()
        .zip(&offsets)
        .map(|(&ka, &off)| {
            let mut col = packed[off..off + n_t - ka].to_vec();
            col[0].im = 0.0;
            col
        })
        .collect();
    let meta = TableMeta {
        backend: "sfa".into(),
        key: key.into(),
        dipole_sign: -1,
        pulse: pulse.clone(),
        anchor_stride: tg.anchor_stride,
        dt: tg.dt,
        grid: serde_json::to_value(params)?,
        absorbed_norm: 0.0,
        flagged: false,
    };
    CorrelationTable::from_lower(dressing.times, anchors, columns, meta)
}
