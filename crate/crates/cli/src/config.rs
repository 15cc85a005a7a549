//! Layered run configuration: built-in defaults, TOML files, `--set`
//! overrides and the `HHG_CACHE_DIR` environment variable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hhg_core::pulse::{wavelength_to_omega, Envelope, AU_WAVELENGTH_NM};
use hhg_core::quad::Rule;
use hhg_core::scan::{Backend, BackendSet, Coupling, ScanConfig};
use hhg_core::sfa::SfaParams;
use hhg_core::tdse::TdseSetup;
use hhg_core::PulseParams;

use crate::error::{CliError, Result};

pub const CACHE_ENV: &str = "HHG_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseSection {
    pub intensity_wcm2: f64,
    pub wavelength_nm: f64,
    pub n_cycles: u32,
    pub t_start: f64,
}

impl Default for PulseSection {
    fn default() -> Self {
        let p = PulseParams::reference(0.0);
        Self {
            intensity_wcm2: p.intensity_wcm2,
            wavelength_nm: AU_WAVELENGTH_NM / p.omega,
            n_cycles: p.n_cycles,
            t_start: p.t_start,
        }
    }
}

impl PulseSection {
    pub fn params(&self, cep: f64) -> Result<PulseParams> {
        let p = PulseParams {
            intensity_wcm2: self.intensity_wcm2,
            omega: wavelength_to_omega(self.wavelength_nm).map_err(config_err)?,
            cep,
            n_cycles: self.n_cycles,
            envelope: Envelope::Sin2,
            t_start: self.t_start,
        };
        p.validate().map_err(config_err)?;
        Ok(p)
    }
}

/// `g = "normalized"` or a fixed non-negative number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GSetting {
    Fixed(f64),
    Named(String),
}

impl GSetting {
    pub fn coupling(&self) -> Result<Coupling> {
        match self {
            Self::Fixed(g) if *g >= 0.0 && g.is_finite() => Ok(Coupling::Absolute(*g)),
            Self::Fixed(g) => Err(CliError::Config(format!("g must be finite and >= 0, got {g}"))),
            Self::Named(s) if s == "normalized" => Ok(Coupling::Normalized),
            Self::Named(s) => Err(CliError::Config(format!("g must be a number or \"normalized\", got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerSection {
    /// Half width of the β window around the state center.
    pub half_width: f64,
    /// Points per axis.
    pub points: usize,
    pub lab_frame: bool,
    /// CEPs of the panel batch.
    pub ceps: Vec<f64>,
}

impl Default for WignerSection {
    fn default() -> Self {
        Self {
            half_width: 4.0,
            points: 201,
            lab_frame: false,
            ceps: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub backend: Backend,
    pub g: GSetting,
    pub n_at: f64,
    pub n_modes: usize,
    pub cep_values: Vec<f64>,
    pub outer_rule: Rule,
    /// Concurrent CEP jobs; 0 uses every core.
    pub workers: usize,
    /// Keep wall-clock data out of every written artifact.
    pub deterministic: bool,
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub pulse: PulseSection,
    pub tdse: TdseSetup,
    pub oscillator: TdseSetup,
    pub sfa: SfaParams,
    pub wigner: WignerSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        let scan = ScanConfig::default();
        let BackendSet { tdse, oscillator, sfa } = scan.backends;
        Self {
            backend: scan.backend,
            g: GSetting::Named("normalized".into()),
            n_at: scan.n_at,
            n_modes: scan.n_modes,
            cep_values: scan.ceps,
            outer_rule: scan.outer_rule,
            workers: scan.workers,
            deterministic: true,
            output_dir: PathBuf::from("hhg-out"),
            cache_dir: PathBuf::from(".hhg-cache"),
            pulse: PulseSection::default(),
            tdse,
            oscillator,
            sfa,
            wigner: WignerSection::default(),
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl RunConfig {
    /// Defaults, then each file in order, then `HHG_CACHE_DIR`, then the
    /// `section.key=value` overrides.
    pub fn load(files: &[PathBuf], overrides: &[String]) -> Result<Self> {
        let env = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        Self::layered(files, overrides, env.as_deref())
    }

    /// As [`RunConfig::load`] but without the structural checks.
    pub fn load_unchecked(files: &[PathBuf], overrides: &[String]) -> Result<Self> {
        let env = std::env::var_os(CACHE_ENV).map(PathBuf::from);
        Self::merged(files, overrides, env.as_deref())
    }

    pub fn layered(files: &[PathBuf], overrides: &[String], cache_env: Option<&Path>) -> Result<Self> {
        let cfg = Self::merged(files, overrides, cache_env)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn merged(files: &[PathBuf], overrides: &[String], cache_env: Option<&Path>) -> Result<Self> {
        let defaults = toml::Value::try_from(Self::default()).map_err(config_err)?;
        let mut merged = defaults.clone();
        for f in files {
            let text = std::fs::read_to_string(f)
                .map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
            let layer: toml::Table = text
                .parse()
                .map_err(|e| CliError::Config(format!("{}: {e}", f.display())))?;
            merge(&mut merged, toml::Value::Table(layer));
        }
        if let Some(dir) = cache_env {
            set_path(&mut merged, "cache_dir", toml::Value::String(dir.to_string_lossy().into_owned()))?;
        }
        for o in overrides {
            let (key, raw) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("override {o:?} is not key=value")))?;
            set_path(&mut merged, key.trim(), parse_scalar(raw.trim()))?;
        }
        check_keys(&defaults, &merged, "")?;
        merged.try_into().map_err(config_err)
    }

    /// Structural checks that must pass before any compute.
    pub fn validate(&self) -> Result<()> {
        if self.cep_values.is_empty() {
            return Err(CliError::Config("cep_values is empty".into()));
        }
        self.g.coupling()?;
        if self.wigner.points < 2 || !(self.wigner.half_width > 0.0) {
            return Err(CliError::Config("wigner grid needs >= 2 points and a positive half width".into()));
        }
        self.scan_config()?.validate().map_err(config_err)
    }

    pub fn backends(&self) -> BackendSet {
        BackendSet {
            tdse: self.tdse.clone(),
            oscillator: self.oscillator.clone(),
            sfa: self.sfa.clone(),
        }
    }

    pub fn scan_config(&self) -> Result<ScanConfig> {
        Ok(ScanConfig {
            backend: self.backend,
            backends: self.backends(),
            pulse: self.pulse.params(0.0)?,
            ceps: self.cep_values.clone(),
            coupling: self.g.coupling()?,
            n_at: self.n_at,
            n_modes: self.n_modes,
            outer_rule: self.outer_rule,
            workers: self.workers,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(config_err)
    }
}

/// TOML literal if it parses as one, otherwise a bare string.
fn parse_scalar(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

fn merge(base: &mut toml::Value, layer: toml::Value) {
    match (base, layer) {
        (toml::Value::Table(b), toml::Value::Table(l)) => {
            for (k, v) in l {
                match b.get_mut(&k) {
                    // A tagged variant is replaced wholesale so stale fields do not leak.
                    Some(slot @ toml::Value::Table(_)) if !v.as_table().is_some_and(|t| t.contains_key("kind")) => {
                        merge(slot, v)
                    }
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, l) => *b = l,
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key {key:?}")));
    }
    let mut node = root;
    for p in &parts[..parts.len() - 1] {
        node = node
            .as_table_mut()
            .and_then(|t| t.get_mut(*p))
            .filter(|v| v.is_table())
            .ok_or_else(|| CliError::Config(format!("unknown section {p:?} in {key:?}")))?;
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| CliError::Config(format!("{key:?} does not name a field")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Rejects keys absent from the defaults. Tagged tables (`kind = ...`) are
/// left to the deserializer because their fields depend on the variant.
fn check_keys(defaults: &toml::Value, merged: &toml::Value, prefix: &str) -> Result<()> {
    let (Some(d), Some(m)) = (defaults.as_table(), merged.as_table()) else {
        return Ok(());
    };
    if d.contains_key("kind") || m.contains_key("kind") {
        return Ok(());
    }
    for (k, v) in m {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match d.get(k) {
            None => return Err(CliError::Config(format!("unknown key {path:?}"))),
            Some(dv) => check_keys(dv, v, &path)?,
        }
    }
    Ok(())
}

pub fn cep_label(cep: f64) -> String {
    format!("{cep:.4}").replace('-', "m").replace('.', "p")
}
