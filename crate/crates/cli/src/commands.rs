//! Subcommand implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use hhg_core::cache::{atomic_write, EntryStatus, TableCache};
use hhg_core::gaussian::StateDump;
use hhg_core::scan::{cep_scan, fundamental_state, laser_amplitude, ScanResult};
use hhg_core::{GaussianState, C64};

use crate::config::{cep_label, RunConfig};
use crate::error::{CliError, Result};
use crate::output::{linspace, parse_scan_csv, parse_wigner_csv, scan_csv, scan_rows, wigner_csv, WignerGrid};
use crate::svg::{scan_svg, wigner_svg, PanelLabels};
use crate::validate::{validate, Report};

pub const SCAN_CSV: &str = "scan.csv";
pub const SCAN_SVG: &str = "scan.svg";
pub const RESOLVED_CONFIG: &str = "run.toml";

fn cache_for(cfg: &RunConfig, use_cache: bool) -> Option<TableCache> {
    use_cache.then(|| TableCache::new(&cfg.cache_dir))
}

fn write(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text.as_bytes()).map_err(CliError::from)
}

#[derive(Debug)]
pub struct ScanArtifacts {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub result: ScanResult,
    pub cache_hits: usize,
}

/// CEP scan: CSV, SVG derived from that CSV, and the resolved config.
pub fn run_scan(cfg: &RunConfig, use_cache: bool) -> Result<ScanArtifacts> {
    cfg.validate()?;
    let scan_cfg = cfg.scan_config()?;
    let cache = cache_for(cfg, use_cache);
    let start = Instant::now();
    let result = cep_scan(&scan_cfg, cache.as_ref())?;
    let elapsed = start.elapsed().as_secs_f64();
    for p in result.points.iter().filter(|p| p.flagged) {
        log::warn!("cep {:.4}: absorbed norm above threshold; table flagged", p.record.cep);
    }
    let text = scan_csv(&scan_rows(&result));
    let dir = &cfg.output_dir;
    let csv = dir.join(SCAN_CSV);
    let svg = dir.join(SCAN_SVG);
    write(&csv, &text)?;
    write(&svg, &scan_svg(&parse_scan_csv(&text)?))?;
    write(&dir.join(RESOLVED_CONFIG), &cfg.to_toml()?)?;
    if !cfg.deterministic {
        write(&dir.join("timing.json"), &serde_json::json!({ "scan_seconds": elapsed }).to_string())?;
    }
    let cache_hits = result.points.iter().filter(|p| p.cache_hit).count();
    log::info!("scan of {} CEPs in {elapsed:.2} s ({cache_hits} cache hits)", result.points.len());
    Ok(ScanArtifacts {
        csv,
        svg,
        result,
        cache_hits,
    })
}

pub fn scan_summary(a: &ScanArtifacts) -> String {
    let mut s = format!("{:>10} {:>14} {:>10} {:>10} {:>6}\n", "cep_rad", "B_au", "psi_rad", "dB", "cached");
    for p in &a.result.points {
        let r = &p.record;
        s.push_str(&format!(
            "{:>10.4} {:>14.6e} {:>10.4} {:>10.4} {:>6}{}\n",
            r.cep,
            r.b,
            r.psi,
            r.db,
            if p.cache_hit { "yes" } else { "no" },
            if p.flagged { "  (flagged)" } else { "" }
        ));
    }
    s.push_str(&format!("g = {:.6e}\nwrote {} and {}", a.result.g, a.csv.display(), a.svg.display()));
    s
}

/// Sidecar of a Wigner panel: the laboratory-frame state plus the numbers
/// shown on the panel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelState {
    pub cep: f64,
    pub psi: f64,
    pub r: f64,
    pub r_eff: f64,
    pub g: f64,
    pub n_at: f64,
    pub backend: String,
    /// `"displaced"` (grid relative to the state center) or `"lab"`.
    pub frame: String,
    /// Center of the plotted window in laboratory β.
    pub center_beta: [f64; 2],
    pub alpha: [f64; 2],
    pub chi1: [f64; 2],
    pub state: StateDump,
}

impl PanelState {
    /// The state in the coordinates of the plotted grid.
    pub fn panel_dump(&self) -> StateDump {
        let mut d = self.state.clone();
        if self.frame != "lab" {
            let s2 = std::f64::consts::SQRT_2;
            d.mean[0] -= s2 * self.center_beta[0];
            d.mean[1] -= s2 * self.center_beta[1];
        }
        d
    }

    pub fn labels(&self) -> PanelLabels {
        let frame = if self.frame == "lab" {
            "laboratory frame".to_string()
        } else {
            "displaced frame, origin at α + χ₁".to_string()
        };
        PanelLabels {
            cep: self.cep,
            psi: self.psi,
            r_eff: self.r_eff,
            frame,
        }
    }
}

/// SVG of a panel from its CSV text and sidecar.
pub fn render_panel(csv_text: &str, panel: &PanelState) -> Result<String> {
    let grid = parse_wigner_csv(csv_text)?;
    Ok(wigner_svg(&grid, &panel.panel_dump(), &panel.labels()))
}

#[derive(Debug)]
pub struct WignerArtifacts {
    pub csv: PathBuf,
    pub svg: PathBuf,
    pub json: PathBuf,
    pub panel: PanelState,
    /// Major-axis angle of the state covariance in `[0, π)`.
    pub ellipse_angle: f64,
}

fn c2(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

/// Wigner panels for each CEP: CSV grid, SVG and JSON state dump.
pub fn run_wigner(cfg: &RunConfig, ceps: &[f64], lab_frame: bool, use_cache: bool) -> Result<Vec<WignerArtifacts>> {
    let ceps: Vec<f64> = if ceps.is_empty() { cfg.wigner.ceps.clone() } else { ceps.to_vec() };
    if ceps.is_empty() {
        return Err(CliError::Config("no CEP given (use --cep or wigner.ceps)".into()));
    }
    let run = RunConfig {
        cep_values: ceps,
        ..cfg.clone()
    };
    run.validate()?;
    let lab_frame = lab_frame || cfg.wigner.lab_frame;
    let scan_cfg = run.scan_config()?;
    let cache = cache_for(cfg, use_cache);
    let result = cep_scan(&scan_cfg, cache.as_ref())?;
    let g = result.g;
    let mut out = Vec::new();
    for point in &result.points {
        let rec = &point.record;
        let alpha = laser_amplitude(&scan_cfg.pulse.with_cep(rec.cep), g);
        let state: GaussianState = fundamental_state(point, g, cfg.n_at, alpha)?;
        let ellipse = state.ellipse(0)?;
        let s2 = std::f64::consts::SQRT_2;
        let center = [state.mean[0] / s2, state.mean[1] / s2];
        let panel = PanelState {
            cep: rec.cep,
            psi: rec.psi,
            r: rec.r,
            r_eff: rec.r_eff,
            g,
            n_at: cfg.n_at,
            backend: result.backend.tag().into(),
            frame: if lab_frame { "lab" } else { "displaced" }.into(),
            center_beta: center,
            alpha: c2(alpha),
            chi1: c2(point.moments.chi[0]),
            state: state.dump(),
        };
        let plotted = GaussianState::from_dump(&panel.panel_dump())?;
        let (c_re, c_im) = if lab_frame { (center[0], center[1]) } else { (0.0, 0.0) };
        let re = linspace(c_re, cfg.wigner.half_width, cfg.wigner.points);
        let im = linspace(c_im, cfg.wigner.half_width, cfg.wigner.points);
        let w = plotted.wigner(&re, &im)?;
        let text = wigner_csv(&WignerGrid { re, im, w });
        let stem = format!("wigner_phi_{}", cep_label(rec.cep));
        let dir = &cfg.output_dir;
        let (csv, svg, json) = (
            dir.join(format!("{stem}.csv")),
            dir.join(format!("{stem}.svg")),
            dir.join(format!("{stem}.json")),
        );
        write(&csv, &text)?;
        write(&json, &serde_json::to_string_pretty(&panel).map_err(hhg_core::Error::from)?)?;
        write(&svg, &render_panel(&text, &panel)?)?;
        out.push(WignerArtifacts {
            csv,
            svg,
            json,
            panel,
            ellipse_angle: ellipse.angle,
        });
    }
    Ok(out)
}

pub fn run_validate(cfg: &RunConfig) -> Report {
    validate(cfg)
}

/// Lists cache entries; corrupt entries make the listing an integrity error.
pub fn cache_ls(cfg: &RunConfig) -> Result<String> {
    let cache = TableCache::new(&cfg.cache_dir);
    let entries = cache.list()?;
    let mut s = format!("cache {}\n{:<64}  {:<10} {:>10} {:>12}  status\n", cfg.cache_dir.display(), "key", "backend", "cep", "bytes");
    let mut corrupt = 0;
    for e in &entries {
        let status = match &e.status {
            EntryStatus::Ok => "ok".to_string(),
            EntryStatus::Corrupt(m) => {
                corrupt += 1;
                format!("corrupt: {m}")
            }
        };
        s.push_str(&format!("{:<64}  {:<10} {:>10.4} {:>12}  {status}\n", e.key, e.backend, e.cep, e.bytes));
    }
    s.push_str(&format!("{} entries", entries.len()));
    if corrupt > 0 {
        return Err(CliError::Cache(format!("{corrupt} corrupt entries\n{s}")));
    }
    Ok(s)
}

/// Removes the given keys, every entry, or only corrupt ones.
pub fn cache_rm(cfg: &RunConfig, keys: &[String], all: bool, corrupt: bool) -> Result<usize> {
    let cache = TableCache::new(&cfg.cache_dir);
    if all {
        return Ok(cache.clear()?);
    }
    let mut targets: Vec<String> = keys.to_vec();
    if corrupt {
        targets.extend(
            cache
                .list()?
                .into_iter()
                .filter(|e| e.status != EntryStatus::Ok)
                .map(|e| e.key),
        );
    }
    if targets.is_empty() {
        return Err(CliError::Config("nothing to remove (give keys, --all or --corrupt)".into()));
    }
    let mut n = 0;
    for k in &targets {
        if k.contains(['/', '\\']) || k.starts_with('.') {
            return Err(CliError::Config(format!("invalid key {k:?}")));
        }
        if cache.remove(k)? {
            n += 1;
        } else {
            log::warn!("no cache entry {k}");
        }
    }
    Ok(n)
}
