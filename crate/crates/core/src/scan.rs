//! CEP scans over a backend with content-addressed table caching.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{content_key, TableCache, FORMAT_VERSION};
use crate::correlation::{CorrelationTable, DipoleRecord};
use crate::error::{Error, Result};
use crate::gaussian::{apply_gaussian_filter, BilinearForm, GaussianState};
use crate::pulse::PulseParams;
use crate::quad::Rule;
use crate::sfa::{sfa_connected_correlation, sfa_dipole_mean, SfaParams};
use crate::spectral::{harmonic_comb, squeeze_record, SpectralMoments, SqueezeRecord};
use crate::tdse::{two_time_correlation, GridSpec, PotentialSpec, TdseSetup};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Tdse,
    Sfa,
    Oscillator,
}

impl Backend {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Tdse => "tdse",
            Self::Sfa => "sfa",
            Self::Oscillator => "oscillator",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tdse" => Ok(Self::Tdse),
            "sfa" => Ok(Self::Sfa),
            "oscillator" => Ok(Self::Oscillator),
            _ => Err(Error::Domain(format!("unknown backend {s:?} (tdse, sfa, oscillator)"))),
        }
    }
}

/// Configuration of every backend; a scan uses one of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendSet {
    pub tdse: TdseSetup,
    pub oscillator: TdseSetup,
    pub sfa: SfaParams,
}

impl Default for BackendSet {
    fn default() -> Self {
        Self {
            tdse: TdseSetup {
                grid: GridSpec::default(),
                potential: PotentialSpec::hydrogen(),
                anchor_stride: 20,
                tail_cycles: 0,
            },
            oscillator: TdseSetup {
                grid: GridSpec {
                    x_min: -40.0,
                    x_max: 40.0,
                    n_x: 2048,
                    dt: 0.025,
                    absorber_width: 0.0,
                    absorber_strength: 0.125,
                },
                potential: PotentialSpec::Harmonic { omega0: 0.5 },
                anchor_stride: 40,
                tail_cycles: 0,
            },
            sfa: SfaParams::default(),
        }
    }
}

impl BackendSet {
    pub fn validate(&self, backend: Backend) -> Result<()> {
        match backend {
            Backend::Tdse => self.tdse.validate(),
            Backend::Oscillator => self.oscillator.validate(),
            Backend::Sfa => self.sfa.validate(),
        }
    }

    /// Cache key covering every numerically relevant input.
    pub fn key(&self, backend: Backend, pulse: &PulseParams) -> Result<String> {
        let grid = match backend {
            Backend::Tdse => serde_json::to_value(&self.tdse)?,
            Backend::Oscillator => serde_json::to_value(&self.oscillator)?,
            Backend::Sfa => serde_json::to_value(&self.sfa)?,
        };
        Ok(content_key(&serde_json::json!({
            "format": FORMAT_VERSION,
            "backend": backend.tag(),
            "grid": grid,
            "pulse": pulse,
        })))
    }
}

/// One backend evaluation.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub record: DipoleRecord,
    pub table: CorrelationTable,
    pub cache_hit: bool,
}

fn compute(backend: Backend, set: &BackendSet, pulse: &PulseParams, key: &str) -> Result<(DipoleRecord, CorrelationTable)> {
    match backend {
        Backend::Tdse => two_time_correlation(&set.tdse, pulse, key),
        Backend::Oscillator => {
            let (rec, mut table) = two_time_correlation(&set.oscillator, pulse, key)?;
            table.meta.backend = Backend::Oscillator.tag().into();
            Ok((rec, table))
        }
        Backend::Sfa => {
            let rec = sfa_dipole_mean(&set.sfa, pulse)?;
            let table = sfa_connected_correlation(&set.sfa, pulse, key)?;
            Ok((rec, table))
        }
    }
}

/// Dipole record and correlation table, from the cache when possible.
/// A corrupt entry is recomputed and overwritten.
pub fn run_backend(
    backend: Backend,
    set: &BackendSet,
    pulse: &PulseParams,
    cache: Option<&TableCache>,
) -> Result<RunOutput> {
    set.validate(backend)?;
    pulse.validate()?;
    let key = set.key(backend, pulse)?;
    if let Some(cache) = cache {
        match cache.load(&key) {
            Ok(Some((table, record))) => {
                return Ok(RunOutput {
                    record,
                    table,
                    cache_hit: true,
                })
            }
            Ok(None) => {}
            Err(e) => log::warn!("recomputing {key}: {e}"),
        }
    }
    let (record, table) = compute(backend, set, pulse, &key)?;
    if let Some(cache) = cache {
        cache.store(&table, &record)?;
    }
    Ok(RunOutput {
        record,
        table,
        cache_hit: false,
    })
}

/// Coupling constant: either fixed, or chosen so that `g² B N_at = 1` for the
/// φ = 0 pulse under the SFA backend.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Coupling {
    Normalized,
    Absolute(f64),
}

impl Default for Coupling {
    fn default() -> Self {
        Self::Normalized
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub backend: Backend,
    pub backends: BackendSet,
    pub pulse: PulseParams,
    pub ceps: Vec<f64>,
    pub coupling: Coupling,
    pub n_at: f64,
    /// Harmonic modes kept in the moment matrices (mode 1 is the fundamental).
    pub n_modes: usize,
    pub outer_rule: Rule,
    /// Concurrent CEP jobs; 0 uses the global thread pool.
    pub workers: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            backend: Backend::Sfa,
            backends: BackendSet::default(),
            pulse: PulseParams::reference(0.0),
            ceps: (0..16).map(|k| k as f64 * std::f64::consts::TAU / 16.0).collect(),
            coupling: Coupling::Normalized,
            n_at: 5e13,
            n_modes: 1,
            outer_rule: Rule::Simpson,
            workers: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ceps.is_empty() {
            return Err(Error::Domain("cep list is empty".into()));
        }
        if self.ceps.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain("cep values must be finite".into()));
        }
        if !(self.n_at >= 0.0) {
            return Err(Error::Domain(format!("n_at must be >= 0, got {}", self.n_at)));
        }
        if let Coupling::Absolute(g) = self.coupling {
            if !(g >= 0.0) {
                return Err(Error::Domain(format!("g must be >= 0, got {g}")));
            }
        }
        if self.n_modes == 0 {
            return Err(Error::Domain("n_modes must be >= 1".into()));
        }
        self.pulse.validate()?;
        self.backends.validate(self.backend)
    }

    pub fn omegas(&self) -> Vec<f64> {
        harmonic_comb(self.pulse.omega, self.n_modes)
    }
}

/// Result for one CEP.
#[derive(Clone, Debug)]
pub struct ScanPoint {
    pub record: SqueezeRecord,
    pub moments: SpectralMoments,
    pub flagged: bool,
    pub cache_hit: bool,
}

#[derive(Clone, Debug)]
pub struct ScanResult {
    pub backend: Backend,
    pub g: f64,
    pub points: Vec<ScanPoint>,
}

/// Resolves the coupling constant for a configuration.
pub fn resolve_coupling(cfg: &ScanConfig, cache: Option<&TableCache>) -> Result<f64> {
    match cfg.coupling {
        Coupling::Absolute(g) => Ok(g),
        Coupling::Normalized => {
            if cfg.n_at == 0.0 {
                return Ok(0.0);
            }
            let reference = cfg.pulse.with_cep(0.0);
            let out = run_backend(Backend::Sfa, &cfg.backends, &reference, cache)?;
            let m = SpectralMoments::from_run(&out.table, &out.record, &cfg.omegas()[..1], 1.0, cfg.outer_rule)?;
            let b = m.m_matrix[(0, 0)].norm();
            if !(b > 0.0) {
                return Err(Error::Domain("reference B vanishes; cannot normalize g".into()));
            }
            Ok(1.0 / (b * cfg.n_at).sqrt())
        }
    }
}

fn scan_point(cfg: &ScanConfig, g: f64, cep: f64, cache: Option<&TableCache>) -> Result<ScanPoint> {
    let pulse = cfg.pulse.with_cep(cep);
    let out = run_backend(cfg.backend, &cfg.backends, &pulse, cache)?;
    let moments = SpectralMoments::from_run(&out.table, &out.record, &cfg.omegas(), g, cfg.outer_rule)?;
    let record = squeeze_record(moments.m_matrix[(0, 0)], g, cfg.n_at, cep)?;
    Ok(ScanPoint {
        record,
        moments,
        flagged: out.table.meta.flagged,
        cache_hit: out.cache_hit,
    })
}

/// One record per CEP, in input order.
pub fn cep_scan(cfg: &ScanConfig, cache: Option<&TableCache>) -> Result<ScanResult> {
    cfg.validate()?;
    let g = resolve_coupling(cfg, cache)?;
    let job = || -> Result<Vec<ScanPoint>> {
        cfg.ceps.par_iter().map(|&c| scan_point(cfg, g, c, cache)).collect()
    };
    let points = if cfg.workers == 0 {
        job()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Domain(format!("thread pool: {e}")))?
            .install(job)?
    };
    Ok(ScanResult {
        backend: cfg.backend,
        g,
        points,
    })
}

/// Laser amplitude of the fundamental mode in the laboratory frame.
pub fn laser_amplitude(pulse: &PulseParams, g: f64) -> C64 {
    if g == 0.0 {
        return C64::new(0.0, 0.0);
    }
    C64::from_polar(pulse.peak_field() / (2.0 * g), -(pulse.cep + std::f64::consts::FRAC_PI_2))
}

/// Fundamental-mode state `D[α] D[χ₁] S(ψ) |0⟩` with the filter normalized.
pub fn fundamental_state(point: &ScanPoint, g: f64, n_at: f64, alpha: C64) -> Result<GaussianState> {
    let single = SpectralMoments {
        omegas: point.moments.omegas[..1].to_vec(),
        m_matrix: point.moments.m_matrix.view((0, 0), (1, 1)).into_owned(),
        n_matrix: point.moments.n_matrix.view((0, 0), (1, 1)).into_owned(),
        ns_matrix: point.moments.ns_matrix.view((0, 0), (1, 1)).into_owned(),
        chi: point.moments.chi[..1].to_vec(),
        coarse: point.moments.coarse,
        psd_defect: point.moments.psd_defect,
    };
    let form = BilinearForm::from_moments(&single, g)?;
    let filtered = apply_gaussian_filter(&GaussianState::vacuum(1), &form, n_at)?;
    filtered.displace(0, single.chi[0])?.displace(0, alpha)
}
