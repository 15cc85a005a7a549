//! Dry-run grid checks reported as a pass/warn/fail table.

use std::f64::consts::PI;
use std::fmt;

use hhg_core::pulse::{vector_potential, TimeGrid};
use hhg_core::scan::Backend;
use hhg_core::spectral::MIN_ANCHORS_PER_CYCLE;
use hhg_core::tdse::TdseSetup;
use hhg_core::PulseParams;

use crate::config::RunConfig;

/// Harmonic `q` is resolved on a grid of step `h` when `q ω h ≤ π / NYQUIST_MARGIN`.
pub const NYQUIST_MARGIN: f64 = 1.8;
/// Snapshot memory above which a warning is raised (bytes).
pub const MEMORY_WARN: f64 = 8.0 * (1u64 << 30) as f64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Pass => "pass",
            Self::Warn => "warn",
            Self::Fail => "fail",
        })
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    fn push(&mut self, name: &str, status: Status, detail: String) {
        self.checks.push(Check {
            name: name.into(),
            status,
            detail,
        });
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    pub fn status_of(&self, name: &str) -> Option<Status> {
        self.checks.iter().find(|c| c.name == name).map(|c| c.status)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w = self.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:<w$}  status  detail", "check")?;
        for c in &self.checks {
            writeln!(f, "{:<w$}  {:<6}  {}", c.name, c.status, c.detail)?;
        }
        let fails = self.failures();
        let warns = self.checks.iter().filter(|c| c.status == Status::Warn).count();
        write!(f, "{} checks: {fails} fail, {warns} warn", self.checks.len())
    }
}

/// Highest harmonic order resolved on a step `h`.
pub fn max_resolved_order(omega: f64, h: f64) -> usize {
    (PI / (NYQUIST_MARGIN * omega * h) + 1e-9).floor() as usize
}

fn time_check(r: &mut Report, name: &str, omega: f64, h: f64, needed: usize, what: &str) {
    let q = max_resolved_order(omega, h);
    let status = if q >= needed { Status::Pass } else { Status::Fail };
    let detail = if q >= needed {
        format!("step {h:.4} resolves up to harmonic {q} (need {needed}, {what})")
    } else {
        format!("step {h:.4} resolves up to harmonic {q}: harmonics >= {} unresolved (need {needed}, {what})", q + 1)
    };
    r.push(name, status, detail);
}

fn tdse_checks(r: &mut Report, setup: &TdseSetup, pulse: &PulseParams, bound: bool, cutoff: usize) {
    let g = &setup.grid;
    let span = g.x_max - g.x_min;
    if !(span > 0.0) || g.n_x < 2 {
        r.push("spatial grid", Status::Fail, format!("box [{}, {}] with {} points", g.x_min, g.x_max, g.n_x));
        return;
    }
    let shape_ok = g.n_x >= 256 && g.n_x.is_power_of_two() && g.dt > 0.0;
    r.push(
        "spatial grid",
        if shape_ok { Status::Pass } else { Status::Fail },
        format!("n_x = {} (power of two >= 256), dt = {}", g.n_x, g.dt),
    );

    // Absorber margins.
    let w = g.absorber_width;
    let (status, detail) = if !(w >= 0.0) || w >= span / 2.0 {
        (Status::Fail, format!("absorber width {w} is at least half the box ({})", span / 2.0))
    } else if w >= span / 4.0 {
        (Status::Fail, format!("absorber width {w} exceeds the engine limit of a quarter box ({})", span / 4.0))
    } else if w == 0.0 && !bound {
        (Status::Warn, "no absorber: continuum flux reflects from the box edges".into())
    } else {
        (Status::Pass, format!("absorber width {w} of box {span}"))
    };
    r.push("absorber margin", status, detail);

    // Interior region against the classical excursion.
    let quiver = pulse.quiver_amplitude();
    let interior = 0.5 * span - w;
    if bound {
        r.push("box vs quiver", Status::Pass, format!("bound potential; interior half width {interior:.1}"));
    } else {
        let status = if interior >= 2.0 * quiver {
            Status::Pass
        } else if interior >= quiver {
            Status::Warn
        } else {
            Status::Fail
        };
        r.push(
            "box vs quiver",
            status,
            format!("interior half width {interior:.1} vs quiver amplitude {quiver:.1}"),
        );
    }

    // Spatial Nyquist against the largest classical momentum (10 Up backscatter).
    let up = pulse.ponderomotive_energy();
    let k_need = (20.0 * up).sqrt() + pulse.peak_field() / pulse.omega;
    let k_max = g.k_max();
    let status = if k_max >= 2.0 * k_need {
        Status::Pass
    } else if k_max >= k_need {
        Status::Warn
    } else {
        Status::Fail
    };
    r.push("momentum Nyquist", status, format!("k_max {k_max:.2} vs classical momentum {k_need:.2}"));

    time_check(r, "time Nyquist", pulse.omega, g.dt, cutoff, "cutoff");

    if let Ok(tg) = setup.time_grid(pulse) {
        let bytes = (tg.len() * g.n_x * 16) as f64;
        let status = if bytes > MEMORY_WARN { Status::Warn } else { Status::Pass };
        r.push(
            "memory",
            status,
            format!("{:.2} GiB of snapshots ({} steps x {} points)", bytes / (1u64 << 30) as f64, tg.len(), g.n_x),
        );
    }
}

fn anchor_check(r: &mut Report, tg: &TimeGrid, pulse: &PulseParams, n_modes: usize) {
    let h = tg.dt * tg.anchor_stride as f64;
    let per_cycle = pulse.period() / h;
    let q = max_resolved_order(pulse.omega, h);
    let status = if q < n_modes {
        Status::Fail
    } else if per_cycle < MIN_ANCHORS_PER_CYCLE {
        Status::Warn
    } else {
        Status::Pass
    };
    r.push(
        "anchor density",
        status,
        format!("{per_cycle:.1} anchors per cycle, resolves harmonic {q} (modes kept: {n_modes})"),
    );
}

fn sfa_checks(r: &mut Report, cfg: &RunConfig, pulse: &PulseParams, cutoff: usize) {
    let p = &cfg.sfa;
    if let Err(e) = p.validate() {
        r.push("sfa parameters", Status::Fail, e.to_string());
        return;
    }
    time_check(r, "time Nyquist", pulse.omega, p.dt, cutoff, "cutoff");
    let Ok(tg) = p.time_grid(pulse) else {
        r.push("time grid", Status::Fail, "cannot build the time grid".into());
        return;
    };
    anchor_check(r, &tg, pulse, cfg.n_modes);
    // Momentum sampling of the Volkov phase.
    let a = vector_potential(pulse, &tg);
    let mut int_a = 0.0f64;
    let mut range = 0.0f64;
    for w in a.windows(2) {
        int_a += 0.5 * (w[0] + w[1]) * tg.dt;
        range = range.max(int_a.abs());
    }
    let span = tg.t_end() - tg.t0;
    let g = &p.v_grid;
    let dv = g.dv();
    let step = dv * (g.v_max.abs() * span + range);
    let status = if step <= PI { Status::Pass } else { Status::Fail };
    r.push(
        "momentum Nyquist",
        status,
        format!("phase step {step:.3} rad between momenta (limit π), dv = {dv:.2e}"),
    );
    let v_need = 2.0 * pulse.peak_field() / pulse.omega;
    let status = if g.v_max >= v_need { Status::Pass } else { Status::Warn };
    r.push(
        "momentum range",
        status,
        format!("v_max {} vs 2 E0/ω = {v_need:.2}", g.v_max),
    );
    let bytes = (tg.len() * (tg.n_steps / tg.anchor_stride + 1) * 16) as f64 / 2.0;
    r.push("memory", if bytes > MEMORY_WARN { Status::Warn } else { Status::Pass }, format!("{:.3} GiB of table", bytes / (1u64 << 30) as f64));
}

/// Checks the active backend of `cfg`. Never runs a propagation.
pub fn validate(cfg: &RunConfig) -> Report {
    let mut r = Report::default();
    let status = if cfg.cep_values.is_empty() { Status::Fail } else { Status::Pass };
    r.push("cep values", status, format!("{} CEP points", cfg.cep_values.len()));
    let pulse = match cfg.pulse.params(0.0) {
        Ok(p) => {
            r.push(
                "pulse",
                Status::Pass,
                format!("E0 = {:.5}, ω = {:.5}, {} cycles, Up = {:.3}", p.peak_field(), p.omega, p.n_cycles, p.ponderomotive_energy()),
            );
            p
        }
        Err(e) => {
            r.push("pulse", Status::Fail, e.to_string());
            return r;
        }
    };
    let ip = match cfg.backend {
        Backend::Sfa => cfg.sfa.ip,
        _ => 0.5,
    };
    let cutoff = pulse.cutoff_order(ip).ceil() as usize;
    let cutoff = cutoff.max(cfg.n_modes);
    match cfg.backend {
        Backend::Sfa => sfa_checks(&mut r, cfg, &pulse, cutoff),
        Backend::Tdse | Backend::Oscillator => {
            let (setup, bound) = match cfg.backend {
                Backend::Tdse => (&cfg.tdse, false),
                _ => (&cfg.oscillator, true),
            };
            tdse_checks(&mut r, setup, &pulse, bound, cutoff);
            if setup.anchor_stride == 0 {
                r.push("anchor density", Status::Fail, "anchor stride is zero".into());
            } else if let Ok(tg) = setup.time_grid(&pulse) {
                anchor_check(&mut r, &tg, &pulse, cfg.n_modes);
            }
            if let Err(e) = setup.potential.validate() {
                r.push("potential", Status::Fail, e.to_string());
            }
        }
    }
    r
}
