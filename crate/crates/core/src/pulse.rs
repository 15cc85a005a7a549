//! Atomic-unit conversions and the classical driving field.
//!
//! Everything downstream works in Hartree atomic units; the conversions below
//! are only used at the configuration boundary.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Atomic unit of intensity in W/cm².
pub const AU_INTENSITY_WCM2: f64 = 3.509_447_58e16;
/// Wavelength (nm) of a photon carrying one Hartree.
pub const AU_WAVELENGTH_NM: f64 = 45.563_352_6;
/// Atomic unit of time in femtoseconds.
pub const AU_TIME_FS: f64 = 0.024_188_84;

/// Peak electric field (a.u.) for a given cycle-averaged intensity.
pub fn intensity_to_field(intensity_wcm2: f64) -> Result<f64> {
    if !(intensity_wcm2 > 0.0) || !intensity_wcm2.is_finite() {
        return Err(Error::Domain(format!(
            "intensity must be positive, got {intensity_wcm2}"
        )));
    }
    Ok((intensity_wcm2 / AU_INTENSITY_WCM2).sqrt())
}

/// Angular frequency (a.u.) of light with the given vacuum wavelength.
pub fn wavelength_to_omega(lambda_nm: f64) -> Result<f64> {
    if !(lambda_nm > 0.0) || !lambda_nm.is_finite() {
        return Err(Error::Domain(format!(
            "wavelength must be positive, got {lambda_nm}"
        )));
    }
    Ok(AU_WAVELENGTH_NM / lambda_nm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Envelope {
    /// sin² envelope applied to the electric field.
    Sin2,
}

/// Classical driver: `E(t) = E0 sin²(π(t - t_start)/T) cos(ω(t - t_start) + φ)`
/// on `[t_start, t_start + T]`, zero elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseParams {
    pub intensity_wcm2: f64,
    pub omega: f64,
    pub cep: f64,
    pub n_cycles: u32,
    pub envelope: Envelope,
    #[serde(default)]
    pub t_start: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    pub t: f64,
    pub e: f64,
}

impl PulseParams {
    pub fn new(intensity_wcm2: f64, omega: f64, cep: f64, n_cycles: u32) -> Result<Self> {
        let p = Self {
            intensity_wcm2,
            omega,
            cep,
            n_cycles,
            envelope: Envelope::Sin2,
            t_start: 0.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// The driver used throughout: 4e14 W/cm², 800 nm, two cycles.
    pub fn reference(cep: f64) -> Self {
        Self {
            intensity_wcm2: 4e14,
            omega: AU_WAVELENGTH_NM / 800.0,
            cep,
            n_cycles: 2,
            envelope: Envelope::Sin2,
            t_start: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.intensity_wcm2 > 0.0) || !self.intensity_wcm2.is_finite() {
            return Err(Error::Domain(format!(
                "intensity must be positive, got {}",
                self.intensity_wcm2
            )));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(Error::Domain(format!(
                "omega must be positive, got {}",
                self.omega
            )));
        }
        if self.n_cycles < 1 {
            return Err(Error::Domain("n_cycles must be at least 1".into()));
        }
        if !self.cep.is_finite() || !self.t_start.is_finite() {
            return Err(Error::Domain("cep and t_start must be finite".into()));
        }
        Ok(())
    }

    pub fn with_cep(&self, cep: f64) -> Self {
        Self { cep, ..self.clone() }
    }

    pub fn peak_field(&self) -> f64 {
        (self.intensity_wcm2 / AU_INTENSITY_WCM2).sqrt()
    }

    /// Total duration `T = n_cycles · 2π/ω` in a.u.
    pub fn duration(&self) -> f64 {
        self.n_cycles as f64 * TAU / self.omega
    }

    pub fn duration_fs(&self) -> f64 {
        self.duration() * AU_TIME_FS
    }

    pub fn t_end(&self) -> f64 {
        self.t_start + self.duration()
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// Ponderomotive energy `E0² / 4ω²`.
    pub fn ponderomotive_energy(&self) -> f64 {
        let e0 = self.peak_field();
        e0 * e0 / (4.0 * self.omega * self.omega)
    }

    /// Classical quiver amplitude `E0 / ω²`.
    pub fn quiver_amplitude(&self) -> f64 {
        self.peak_field() / (self.omega * self.omega)
    }

    /// Harmonic order of the `I_p + 3.17 U_p` cutoff.
    pub fn cutoff_order(&self, ip: f64) -> f64 {
        (ip + 3.17 * self.ponderomotive_energy()) / self.omega
    }

    pub fn field_at(&self, t: f64) -> f64 {
        let tau = t - self.t_start;
        let total = self.duration();
        if tau <= 0.0 || tau >= total {
            return 0.0;
        }
        let env = match self.envelope {
            Envelope::Sin2 => {
                let s = (PI * tau / total).sin();
                s * s
            }
        };
        self.peak_field() * env * (self.omega * tau + self.cep).cos()
    }

    pub fn sample(&self, times: &[f64]) -> Vec<FieldSample> {
        times
            .iter()
            .map(|&t| FieldSample { t, e: self.field_at(t) })
            .collect()
    }

    /// CEP of the pulse obtained by flipping the sign and reversing time:
    /// `E_{φ'}(T - t) = -E_φ(t)` for `φ' = 2π n - φ + π`, reduced to `[0, 2π)`.
    pub fn reversal_partner_cep(&self) -> f64 {
        (TAU * self.n_cycles as f64 - self.cep + PI).rem_euclid(TAU)
    }
}

/// Uniform time grid over the pulse (plus an optional field-free tail) whose
/// step count is a multiple of the anchor stride, so anchors land exactly on
/// both ends of the window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub anchor_stride: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, span: f64, dt_nominal: f64, anchor_stride: usize) -> Result<Self> {
        if !(dt_nominal > 0.0) || !(span > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "time step {dt_nominal} and span {span} must be positive"
            )));
        }
        if anchor_stride == 0 {
            return Err(Error::InvalidGrid("anchor stride must be >= 1".into()));
        }
        let blocks = (span / (dt_nominal * anchor_stride as f64) - 1e-9).ceil().max(1.0) as usize;
        let n_steps = blocks * anchor_stride;
        Ok(Self {
            t0,
            dt: span / n_steps as f64,
            n_steps,
            anchor_stride,
        })
    }

    /// Grid over `[t_start, t_end + tail_cycles · period]`.
    pub fn for_pulse(
        pulse: &PulseParams,
        dt_nominal: f64,
        anchor_stride: usize,
        tail_cycles: u32,
    ) -> Result<Self> {
        let span = pulse.duration() + tail_cycles as f64 * pulse.period();
        Self::new(pulse.t_start, span, dt_nominal, anchor_stride)
    }

    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.time(k)).collect()
    }

    pub fn anchor_indices(&self) -> Vec<usize> {
        (0..self.len()).step_by(self.anchor_stride).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.n_steps)
    }
}

/// Vector potential `A(t) = -∫ E dt` on the grid (cumulative trapezoid, A(t0) = 0).
pub fn vector_potential(pulse: &PulseParams, grid: &TimeGrid) -> Vec<f64> {
    let field: Vec<f64> = grid.times().iter().map(|&t| pulse.field_at(t)).collect();
    let mut a = Vec::with_capacity(field.len());
    let mut acc = 0.0;
    a.push(0.0);
    for w in field.windows(2) {
        acc -= 0.5 * grid.dt * (w[0] + w[1]);
        a.push(acc);
    }
    a
}
