//! Grid-based 1D time-dependent Schrödinger solver (length gauge).
//!
//! Strang splitting `e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}` with a spectral
//! kinetic step, imaginary-time relaxation for the initial state, and a
//! cos^{1/8} absorbing mask at the box edges. The electron dipole is `d = -x`.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::correlation::{CorrelationTable, DipoleRecord, TableMeta};
use crate::error::{Error, Result};
use crate::pulse::{PulseParams, TimeGrid};
use crate::C64;

/// Absorbed-norm fraction above which a run is flagged.
pub const ABSORBED_NORM_FLAG: f64 = 0.10;

/// Imaginary time spent relaxing after the energy criterion is met.
const SETTLE_TIME: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub dt: f64,
    pub absorber_width: f64,
    /// Exponent of the cosine mask (1/8 by default).
    pub absorber_strength: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: -240.0,
            x_max: 240.0,
            n_x: 8192,
            dt: 0.05,
            absorber_width: 40.0,
            absorber_strength: 0.125,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        let span = self.x_max - self.x_min;
        if !(span > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "x_max ({}) must exceed x_min ({})",
                self.x_max, self.x_min
            )));
        }
        if self.n_x < 256 || !self.n_x.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_x must be a power of two >= 256, got {}",
                self.n_x
            )));
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidGrid(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.absorber_width >= 0.0) || self.absorber_width >= span / 4.0 {
            return Err(Error::InvalidGrid(format!(
                "absorber width {} must be below a quarter of the box ({})",
                self.absorber_width,
                span / 4.0
            )));
        }
        if !(self.absorber_strength > 0.0) {
            return Err(Error::InvalidGrid("absorber strength must be positive".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    pub fn xs(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_x).map(|k| self.x_min + k as f64 * dx).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn ks(&self) -> Vec<f64> {
        let n = self.n_x;
        let dk = std::f64::consts::TAU / (n as f64 * self.dx());
        (0..n)
            .map(|j| if j < n / 2 { j as f64 } else { j as f64 - n as f64 } * dk)
            .collect()
    }

    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    fn mask(&self) -> Vec<(usize, f64)> {
        let w = self.absorber_width;
        if w <= 0.0 {
            return Vec::new();
        }
        let lo = self.x_min + w;
        let hi = self.x_max - w;
        self.xs()
            .into_iter()
            .enumerate()
            .filter_map(|(k, x)| {
                let depth = if x < lo {
                    lo - x
                } else if x > hi {
                    x - hi
                } else {
                    return None;
                };
                let c = (std::f64::consts::FRAC_PI_2 * (depth / w).min(1.0)).cos().max(0.0);
                Some((k, c.powf(self.absorber_strength)))
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// `-1/sqrt(x² + a²)`
    SoftCoreCoulomb { a: f64 },
    /// `ω0² x² / 2`
    Harmonic { omega0: f64 },
}

impl PotentialSpec {
    /// Soft-core parameter reproducing the hydrogen binding energy.
    pub fn hydrogen() -> Self {
        Self::SoftCoreCoulomb { a: std::f64::consts::SQRT_2 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::SoftCoreCoulomb { a } if !(a > 0.0) => {
                Err(Error::Domain(format!("soft-core parameter must be positive, got {a}")))
            }
            Self::Harmonic { omega0 } if !(omega0 > 0.0) => {
                Err(Error::Domain(format!("oscillator frequency must be positive, got {omega0}")))
            }
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Self::SoftCoreCoulomb { a } => -1.0 / (x * x + a * a).sqrt(),
            Self::Harmonic { omega0 } => 0.5 * omega0 * omega0 * x * x,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveFunction {
    pub grid: GridSpec,
    pub psi: Vec<C64>,
}

impl WaveFunction {
    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        self.psi.iter_mut().for_each(|z| *z /= n);
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.grid.dx()
    }

    /// `⟨ψ|x|ψ⟩` (not divided by the norm).
    pub fn expect_x(&self) -> f64 {
        expect_x(&self.psi, &self.grid.xs(), self.grid.dx())
    }
}

fn expect_x(psi: &[C64], xs: &[f64], dx: f64) -> f64 {
    psi.iter().zip(xs).map(|(z, x)| z.norm_sqr() * x).sum::<f64>() * dx
}

/// One Strang step of fixed length on a fixed grid. Cloning is cheap and gives
/// each worker its own scratch space.
#[derive(Clone)]
pub struct SplitStep {
    x: Vec<f64>,
    dx: f64,
    dt: f64,
    kinetic: Vec<C64>,
    v_half: Vec<C64>,
    v_full: Vec<C64>,
    mask: Vec<(usize, f64)>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<C64>,
}

impl SplitStep {
    pub fn new(grid: &GridSpec, pot: &PotentialSpec, dt: f64) -> Self {
        let n = grid.n_x;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let x = grid.xs();
        let inv_n = 1.0 / n as f64;
        Self {
            kinetic: grid
                .ks()
                .iter()
                .map(|k| C64::from_polar(inv_n, -0.5 * k * k * dt))
                .collect(),
            v_half: x
                .iter()
                .map(|&xi| C64::from_polar(1.0, -0.5 * dt * pot.value(xi)))
                .collect(),
            v_full: x
                .iter()
                .map(|&xi| C64::from_polar(1.0, -dt * pot.value(xi)))
                .collect(),
            mask: grid.mask(),
            x,
            dx: grid.dx(),
            dt,
            fft,
            ifft,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `ψ ← e^{-i(V + xE)τ} ψ` with `τ = dt/2` (`full = false`) or `dt`.
    fn kick(&self, psi: &mut [C64], field: f64, full: bool) {
        let (factors, tau) = if full {
            (&self.v_full, self.dt)
        } else {
            (&self.v_half, 0.5 * self.dt)
        };
        if field == 0.0 {
            psi.iter_mut().zip(factors).for_each(|(z, v)| *z *= v);
            return;
        }
        let c = tau * field;
        let ratio = C64::from_polar(1.0, -self.dx * c);
        const REANCHOR: usize = 256;
        for (block, (chunk, vchunk)) in psi
            .chunks_mut(REANCHOR)
            .zip(factors.chunks(REANCHOR))
            .enumerate()
        {
            let mut phase = C64::from_polar(1.0, -self.x[block * REANCHOR] * c);
            for (z, v) in chunk.iter_mut().zip(vchunk) {
                *z *= v * phase;
                phase *= ratio;
            }
        }
    }

    /// Kinetic propagation over a full step.
    fn drift(&mut self, psi: &mut [C64]) {
        self.fft.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.kinetic).for_each(|(z, k)| *z *= k);
        self.ifft.process_with_scratch(psi, &mut self.scratch);
    }

    /// Advances `ψ` by one step with field values at the step's start and end.
    pub fn step(&mut self, psi: &mut [C64], field_start: f64, field_end: f64) {
        self.kick(psi, field_start, false);
        self.drift(psi);
        self.kick(psi, field_end, false);
    }

    /// Mask applied without bookkeeping.
    fn mask_only(&self, psi: &mut [C64]) {
        for &(k, m) in &self.mask {
            psi[k] *= m;
        }
    }

    /// Applies the absorbing mask and returns the norm it removed.
    pub fn absorb(&self, psi: &mut [C64]) -> f64 {
        let mut removed = 0.0;
        for &(k, m) in &self.mask {
            let before = psi[k].norm_sqr();
            psi[k] *= m;
            removed += before - psi[k].norm_sqr();
        }
        removed * self.dx
    }
}

#[derive(Clone, Copy, Debug)]
pub struct GroundStateOptions {
    /// Convergence threshold on the energy change per imaginary-time step.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iterations: 200_000,
        }
    }
}

pub fn ground_state(grid: &GridSpec, pot: &PotentialSpec) -> Result<(WaveFunction, f64)> {
    ground_state_with(grid, pot, GroundStateOptions::default())
}

/// Imaginary-time split-operator relaxation with a decreasing step, so that
/// the splitting error of the fixed point is of order `(0.001)²`.
pub fn ground_state_with(
    grid: &GridSpec,
    pot: &PotentialSpec,
    opts: GroundStateOptions,
) -> Result<(WaveFunction, f64)> {
    grid.validate()?;
    pot.validate()?;
    let n = grid.n_x;
    let xs = grid.xs();
    let ks = grid.ks();
    let potential: Vec<f64> = xs.iter().map(|&x| pot.value(x)).collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len().max(ifft.get_inplace_scratch_len())];
    let mut spectrum = vec![C64::new(0.0, 0.0); n];

    let mut wf = WaveFunction {
        grid: grid.clone(),
        psi: xs.iter().map(|&x| C64::new((-0.5 * x * x).exp(), 0.0)).collect(),
    };
    wf.normalize();

    let energy_of = |psi: &[C64], spectrum: &mut Vec<C64>, scratch: &mut Vec<C64>| {
        spectrum.copy_from_slice(psi);
        fft.process_with_scratch(spectrum, scratch);
        let (mut t, mut norm_k) = (0.0, 0.0);
        for (z, k) in spectrum.iter().zip(&ks) {
            t += z.norm_sqr() * 0.5 * k * k;
            norm_k += z.norm_sqr();
        }
        let (mut v, mut norm_x) = (0.0, 0.0);
        for (z, p) in psi.iter().zip(&potential) {
            v += z.norm_sqr() * p;
            norm_x += z.norm_sqr();
        }
        t / norm_k + v / norm_x
    };

    let mut energy = energy_of(&wf.psi, &mut spectrum, &mut scratch);
    let mut iterations = 0usize;
    let stages = [(0.1, opts.tol.max(1e-8)), (0.02, opts.tol), (0.005, opts.tol), (0.001, opts.tol)];
    for (stage, (tau, tol)) in stages.into_iter().enumerate() {
        let inv_n = 1.0 / n as f64;
        let kin: Vec<f64> = ks.iter().map(|k| (-0.5 * k * k * tau).exp() * inv_n).collect();
        let vh: Vec<f64> = potential.iter().map(|v| (-0.5 * tau * v).exp()).collect();
        let relax = |psi: &mut Vec<C64>, scratch: &mut Vec<C64>| {
            psi.iter_mut().zip(&vh).for_each(|(z, v)| *z *= v);
            fft.process_with_scratch(psi, scratch);
            psi.iter_mut().zip(&kin).for_each(|(z, k)| *z *= k);
            ifft.process_with_scratch(psi, scratch);
            psi.iter_mut().zip(&vh).for_each(|(z, v)| *z *= v);
        };
        let mut residual = f64::INFINITY;
        while residual >= tol {
            if iterations >= opts.max_iterations {
                return Err(Error::NoConvergence { iterations, residual });
            }
            relax(&mut wf.psi, &mut scratch);
            wf.normalize();
            let e = energy_of(&wf.psi, &mut spectrum, &mut scratch);
            if !e.is_finite() {
                return Err(Error::NonFinite { step: iterations });
            }
            residual = (e - energy).abs();
            energy = e;
            iterations += 1;
        }
        // A small energy change per step still leaves a state error of order
        // sqrt(ΔE/τ); a fixed stretch of extra relaxation removes it.
        if stage + 1 == stages.len() {
            for _ in 0..(SETTLE_TIME / tau).ceil() as usize {
                relax(&mut wf.psi, &mut scratch);
                wf.normalize();
            }
            energy = energy_of(&wf.psi, &mut spectrum, &mut scratch);
        }
    }
    // Real ground state with a fixed sign convention.
    let peak = wf
        .psi
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = peak.conj() / peak.norm();
    wf.psi.iter_mut().for_each(|z| *z = C64::new((*z * phase).re, 0.0));
    wf.normalize();
    Ok((wf, energy))
}

fn check_finite(psi: &[C64], step: usize) -> Result<()> {
    if psi.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

/// Propagates `psi` from `t0` to `t1` in steps of `psi.grid.dt`, with absorption.
pub fn propagate(
    psi: &WaveFunction,
    pot: &PotentialSpec,
    pulse: &PulseParams,
    t0: f64,
    t1: f64,
) -> Result<WaveFunction> {
    let grid = &psi.grid;
    grid.validate()?;
    if t1 < t0 {
        return Err(Error::Domain(format!("t1 ({t1}) precedes t0 ({t0})")));
    }
    let steps_f = (t1 - t0) / grid.dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-6 {
        return Err(Error::InvalidGrid(format!(
            "dt = {} does not divide the interval {}",
            grid.dt,
            t1 - t0
        )));
    }
    let steps = steps as usize;
    let mut stepper = SplitStep::new(grid, pot, grid.dt);
    let mut out = psi.clone();
    for k in 0..steps {
        let ta = t0 + k as f64 * grid.dt;
        let tb = t0 + (k + 1) as f64 * grid.dt;
        stepper.step(&mut out.psi, pulse.field_at(ta), pulse.field_at(tb));
        stepper.absorb(&mut out.psi);
        if k % 64 == 63 || k + 1 == steps {
            check_finite(&out.psi, k)?;
        }
    }
    Ok(out)
}

/// Backend configuration: grid, model potential and table layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdseSetup {
    pub grid: GridSpec,
    pub potential: PotentialSpec,
    pub anchor_stride: usize,
    #[serde(default)]
    pub tail_cycles: u32,
}

impl TdseSetup {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.potential.validate()?;
        if self.anchor_stride == 0 {
            return Err(Error::InvalidGrid("anchor stride must be >= 1".into()));
        }
        Ok(())
    }

    pub fn time_grid(&self, pulse: &PulseParams) -> Result<TimeGrid> {
        TimeGrid::for_pulse(pulse, self.grid.dt, self.anchor_stride, self.tail_cycles)
    }

    pub fn backend_tag(&self) -> &'static str {
        match self.potential {
            PotentialSpec::Harmonic { .. } => "oscillator",
            PotentialSpec::SoftCoreCoulomb { .. } => "tdse",
        }
    }
}

struct Trajectory {
    times: Vec<f64>,
    fields: Vec<f64>,
    x_mean: Vec<f64>,
    x2_mean: Vec<f64>,
    norm: Vec<f64>,
    absorbed: f64,
    snapshots: Option<Vec<Vec<C64>>>,
}

fn forward(
    setup: &TdseSetup,
    pulse: &PulseParams,
    tg: &TimeGrid,
    keep_snapshots: bool,
) -> Result<(Trajectory, SplitStep)> {
    setup.validate()?;
    pulse.validate()?;
    let grid = &setup.grid;
    let (psi0, _) = ground_state(grid, &setup.potential)?;
    let xs = grid.xs();
    let dx = grid.dx();
    let times = tg.times();
    let fields: Vec<f64> = times.iter().map(|&t| pulse.field_at(t)).collect();
    let mut stepper = SplitStep::new(grid, &setup.potential, tg.dt);

    let mut psi = psi0.psi;
    let mut x_mean = Vec::with_capacity(times.len());
    let mut x2_mean = Vec::with_capacity(times.len());
    let mut norm = Vec::with_capacity(times.len());
    let mut snapshots = keep_snapshots.then(|| Vec::with_capacity(times.len()));
    let mut absorbed = 0.0;
    let mut record = |psi: &[C64]| {
        let (mut n0, mut n1, mut n2) = (0.0, 0.0, 0.0);
        for (z, x) in psi.iter().zip(&xs) {
            let w = z.norm_sqr();
            n0 += w;
            n1 += w * x;
            n2 += w * x * x;
        }
        norm.push(n0 * dx);
        x_mean.push(n1 * dx);
        x2_mean.push(n2 * dx);
    };
    record(&psi);
    if let Some(s) = snapshots.as_mut() {
        s.push(psi.clone());
    }
    for k in 0..tg.n_steps {
        stepper.step(&mut psi, fields[k], fields[k + 1]);
        absorbed += stepper.absorb(&mut psi);
        if k % 64 == 63 || k + 1 == tg.n_steps {
            check_finite(&psi, k)?;
        }
        record(&psi);
        if let Some(s) = snapshots.as_mut() {
            s.push(psi.clone());
        }
    }
    if absorbed > ABSORBED_NORM_FLAG {
        log::warn!(
            "absorbed norm {absorbed:.3} exceeds {ABSORBED_NORM_FLAG}: bound-state correlations degrade"
        );
    }
    Ok((
        Trajectory {
            times,
            fields,
            x_mean,
            x2_mean,
            norm,
            absorbed,
            snapshots,
        },
        stepper,
    ))
}

/// `⟨d(t)⟩ = -⟨ψ(t)|x|ψ(t)⟩` on the setup's time grid, starting from the ground state.
pub fn dipole_mean(setup: &TdseSetup, pulse: &PulseParams) -> Result<DipoleRecord> {
    let tg = setup.time_grid(pulse)?;
    let (traj, _) = forward(setup, pulse, &tg, false)?;
    Ok(DipoleRecord {
        times: traj.times,
        d_mean: traj.x_mean.iter().map(|x| -x).collect(),
        absorbed_norm: traj.absorbed,
    })
}

/// Norm of the wavefunction at every grid time (diagnostics).
pub fn norm_history(setup: &TdseSetup, pulse: &PulseParams) -> Result<Vec<f64>> {
    let tg = setup.time_grid(pulse)?;
    Ok(forward(setup, pulse, &tg, false)?.0.norm)
}

/// Dipole record and connected two-time correlation in one pass.
///
/// For every anchor `t''` the auxiliary state `x|ψ(t'')⟩` is propagated to the
/// end of the window and `C(t', t'') = ⟨ψ(t')|x|aux(t')⟩` is read off for
/// `t' >= t''`. Anchors run in parallel; each column is independent, so the
/// result does not depend on scheduling.
pub fn two_time_correlation(
    setup: &TdseSetup,
    pulse: &PulseParams,
    key: &str,
) -> Result<(DipoleRecord, CorrelationTable)> {
    let tg = setup.time_grid(pulse)?;
    let (mut traj, stepper) = forward(setup, pulse, &tg, true)?;
    let snapshots = traj.snapshots.take().expect("snapshots kept");
    let xs = setup.grid.xs();
    let dx = setup.grid.dx();
    let anchors = tg.anchor_indices();
    let last = tg.n_steps;

    // Consecutive half kicks of the auxiliary states are fused into one
    // full kick. The overlap at t_k is then taken before the final half kick,
    // which is folded into the bra: w_k = conj(ψ_k) · x · V_half(E_k).
    // The mask is diagonal, so it commutes with the kicks.
    let mut starts: Vec<Vec<C64>> = Vec::with_capacity(anchors.len());
    let mut bras = snapshots;
    for &ka in &anchors {
        starts.push(bras[ka].iter().zip(&xs).map(|(z, x)| z * *x).collect());
    }
    bras.par_iter_mut().enumerate().for_each(|(k, w)| {
        w.iter_mut().zip(&xs).for_each(|(z, x)| *z = z.conj() * *x);
        stepper.kick(w, traj.fields[k], false);
    });

    let columns: Vec<Vec<C64>> = anchors
        .par_iter()
        .zip(starts)
        .map_with(stepper, |st, (&ka, mut aux)| -> Result<Vec<C64>> {
            let mut col = Vec::with_capacity(last + 1 - ka);
            let mean_a = traj.x_mean[ka];
            col.push(C64::new(traj.x2_mean[ka] - mean_a * mean_a, 0.0));
            st.kick(&mut aux, traj.fields[ka], false);
            for k in ka..last {
                st.drift(&mut aux);
                st.mask_only(&mut aux);
                if k % 64 == 63 {
                    check_finite(&aux, k)?;
                }
                let w = &bras[k + 1];
                let ov: C64 = w.iter().zip(&aux).map(|(a, b)| a * b).sum::<C64>() * dx;
                col.push(ov - traj.x_mean[k + 1] * mean_a);
                if k + 1 < last {
                    st.kick(&mut aux, traj.fields[k + 1], true);
                }
            }
            Ok(col)
        })
        .collect::<Result<_>>()?;

    let meta = TableMeta {
        backend: setup.backend_tag().into(),
        key: key.into(),
        dipole_sign: -1,
        pulse: pulse.clone(),
        anchor_stride: tg.anchor_stride,
        dt: tg.dt,
        grid: serde_json::to_value(setup)?,
        absorbed_norm: traj.absorbed,
        flagged: traj.absorbed > ABSORBED_NORM_FLAG,
    };
    let table = CorrelationTable::from_lower(traj.times.clone(), anchors, columns, meta)?;
    let record = DipoleRecord {
        times: traj.times,
        d_mean: traj.x_mean.iter().map(|x| -x).collect(),
        absorbed_norm: traj.absorbed,
    };
    Ok((record, table))
}
