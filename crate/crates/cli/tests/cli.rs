//! End-to-end tests of the `hhg` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hhg_cli::commands::PanelState;
use hhg_cli::output::{parse_scan_csv, parse_wigner_csv};

const QUICK_SFA: &str = r#"
output_dir = "out"
cache_dir = "cache"
[sfa]
dt = 0.2
anchor_stride = 5
[sfa.v_grid]
v_min = -4.0
v_max = 4.0
n_v = 4096
"#;

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("quick.toml"), QUICK_SFA).unwrap();
        Self { dir }
    }

    fn path(&self, p: &str) -> PathBuf {
        self.dir.path().join(p)
    }

    fn run(&self, args: &[&str]) -> Output {
        self.run_env(args, &[])
    }

    fn run_env(&self, args: &[&str], env: &[(&str, &Path)]) -> Output {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_hhg"));
        cmd.current_dir(self.dir.path()).args(args).env_remove("HHG_CACHE_DIR");
        for (k, v) in env {
            cmd.env(k, v);
        }
        cmd.output().unwrap()
    }
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn wrap_pi(x: f64) -> f64 {
    let y = x.rem_euclid(std::f64::consts::PI);
    y.min(std::f64::consts::PI - y)
}

fn panel(path: &Path) -> PanelState {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn config_errors_exit_2_before_compute() {
    let s = Sandbox::new();
    for set in ["cep_values=[]", "no_such_key=1", "sfa.dt=-1.0", "g=\"loud\""] {
        let o = s.run(&["scan", "-c", "quick.toml", "--set", set]);
        assert_eq!(code(&o), 2, "{set}: {}", stderr(&o));
    }
    let o = s.run(&["scan", "-c", "missing.toml"]);
    assert_eq!(code(&o), 2);
    assert!(!s.path("cache").exists() && !s.path("out").exists());
}

#[test]
fn validate_reports_and_strict_exit() {
    let s = Sandbox::new();
    for backend in ["sfa", "tdse", "oscillator"] {
        let o = s.run(&["validate", "--strict", "--set", &format!("backend=\"{backend}\"")]);
        assert_eq!(code(&o), 0, "{backend}: {}", stdout(&o));
        assert!(stdout(&o).contains("0 fail, 0 warn"), "{}", stdout(&o));
    }
    let o = s.run(&["validate", "--set", "sfa.dt=1.0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("harmonics >= 31 unresolved"));
    let o = s.run(&["validate", "--strict", "--set", "sfa.dt=1.0"]);
    assert_ne!(code(&o), 0);
    let o = s.run(&["validate", "--strict", "--set", "backend=\"tdse\"", "--set", "tdse.grid.absorber_width=300.0"]);
    assert_ne!(code(&o), 0);
    assert!(stdout(&o).lines().any(|l| l.starts_with("absorber margin") && l.contains("fail")));
    let o = s.run(&["validate", "--strict", "--set", "cep_values=[]"]);
    assert_ne!(code(&o), 0);
}

#[test]
fn scan_writes_contract_csv_and_reuses_cache() {
    let s = Sandbox::new();
    let args = ["scan", "-c", "quick.toml", "--set", "cep_values=[0.0, 0.7854, 2.3562, 0.7854]"];
    let o = s.run(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(s.path("out/scan.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "cep_rad,B_au,psi_rad,r,squeezing_db,backend,g,n_at");
    for l in lines {
        for (i, f) in l.split(',').enumerate() {
            if i == 5 {
                assert_eq!(f, "sfa");
            } else {
                let mantissa = f.trim_start_matches('-').split('e').next().unwrap();
                assert_eq!(mantissa.replace('.', "").len(), 12, "{f}");
            }
        }
    }
    let rows = parse_scan_csv(&csv).unwrap();
    assert_eq!(rows.len(), 4);
    // Normalized coupling: r = -1 at φ = 0.
    assert!((rows[0].r + 1.0).abs() < 1e-10);
    assert_eq!(rows[1].b, rows[3].b);
    // Symmetry pair φ ↔ π - φ.
    assert!(wrap_pi(rows[2].psi - (std::f64::consts::PI - rows[1].psi)) < 0.05);
    let svg = fs::read_to_string(s.path("out/scan.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("squeezing (dB)"));
    assert!(s.path("out/run.toml").exists());

    let o = s.run(&args);
    assert_eq!(code(&o), 0);
    assert_eq!(fs::read_to_string(s.path("out/scan.csv")).unwrap(), csv);
    assert!(stdout(&o).lines().filter(|l| l.trim_end().ends_with("yes")).count() == 4);
    assert!(!s.path("out/timing.json").exists());
}

#[test]
fn cache_env_overrides_config() {
    let s = Sandbox::new();
    let env_dir = s.path("env-cache");
    let o = s.run_env(&["scan", "-c", "quick.toml", "--set", "cep_values=[1.0]", "--set", "g=1e-7"], &[("HHG_CACHE_DIR", &env_dir)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(env_dir.exists());
    assert!(!s.path("cache").exists());
    let o = s.run_env(&["cache", "ls"], &[("HHG_CACHE_DIR", &env_dir)]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("1 entries"));
}

#[test]
fn corrupt_cache_recomputes_and_is_reported() {
    let s = Sandbox::new();
    let args = ["scan", "-c", "quick.toml", "--set", "cep_values=[0.3]", "--set", "g=1e-7"];
    assert_eq!(code(&s.run(&args)), 0);
    let before = fs::read_to_string(s.path("out/scan.csv")).unwrap();
    let bin = fs::read_dir(s.path("cache"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "bin"))
        .unwrap();
    let mut bytes = fs::read(&bin).unwrap();
    bytes[100] ^= 0xff;
    fs::write(&bin, &bytes).unwrap();

    let o = s.run(&["cache", "ls", "-c", "quick.toml"]);
    assert_eq!(code(&o), 4, "{}", stderr(&o));
    assert!(stderr(&o).contains("corrupt"));

    // Recompute with a warning, overwrite the entry, same bytes out.
    let o = s.run(&args);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("recomputing"), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(s.path("out/scan.csv")).unwrap(), before);
    assert_eq!(code(&s.run(&["cache", "ls", "-c", "quick.toml"])), 0);

    fs::write(&bin, b"garbage").unwrap();
    let o = s.run(&["cache", "rm", "--corrupt", "-c", "quick.toml"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("removed 1"));
    let o = s.run(&["cache", "ls", "-c", "quick.toml"]);
    assert!(stdout(&o).contains("0 entries"));
    assert_eq!(code(&s.run(&["cache", "rm", "-c", "quick.toml"])), 2);
}

#[test]
fn oscillator_scan_is_flat() {
    let s = Sandbox::new();
    let o = s.run(&[
        "scan",
        "--no-cache",
        "--set",
        "backend=\"oscillator\"",
        "--set",
        "oscillator.grid.n_x=256",
        "--set",
        "oscillator.grid.x_min=-16.0",
        "--set",
        "oscillator.grid.x_max=16.0",
        "--set",
        "oscillator.grid.dt=0.1",
        "--set",
        "oscillator.anchor_stride=10",
        "--set",
        "g=1e-7",
        "--set",
        "cep_values=[0.0, 0.785, 1.571, 2.356, 3.142, 3.927, 4.712, 5.498]",
        "--set",
        "output_dir=\"osc\"",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!s.path(".hhg-cache").exists());
    let rows = parse_scan_csv(&fs::read_to_string(s.path("osc/scan.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    let db0 = rows[0].db;
    for r in &rows {
        assert_eq!(r.backend, "oscillator");
        assert!((r.db - db0).abs() <= 1e-3 * db0, "{} vs {db0}", r.db);
    }
}

#[test]
fn wigner_panels_follow_scan_psi() {
    let s = Sandbox::new();
    let ceps = "cep_values=[0.0, 1.5708, 3.1416, 4.7124]";
    assert_eq!(code(&s.run(&["scan", "-c", "quick.toml", "--set", ceps])), 0);
    let rows = parse_scan_csv(&fs::read_to_string(s.path("out/scan.csv")).unwrap()).unwrap();
    let o = s.run(&[
        "wigner", "-c", "quick.toml", "--cep", "0.0", "--cep", "1.5708", "--cep", "3.1416", "--cep", "4.7124",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stems = ["0p0000", "1p5708", "3p1416", "4p7124"];
    for (row, stem) in rows.iter().zip(stems) {
        let svg = fs::read_to_string(s.path(&format!("out/wigner_phi_{stem}.svg"))).unwrap();
        assert!(svg.contains("ψ = ") && svg.contains("r_eff = ") && svg.contains("stroke=\"red\""));
        let p = panel(&s.path(&format!("out/wigner_phi_{stem}.json")));
        assert!((p.psi - row.psi).abs() <= 1e-11 * row.psi.abs().max(1e-3));
        assert_eq!(p.frame, "displaced");
        let grid = parse_wigner_csv(&fs::read_to_string(s.path(&format!("out/wigner_phi_{stem}.csv"))).unwrap()).unwrap();
        assert_eq!((grid.re.len(), grid.im.len()), (201, 201));
        assert_eq!((grid.re[0], grid.re[200]), (-4.0, 4.0));
        let (mean, _, angle) = grid.moments();
        assert!(mean[0].abs() < 1e-9 && mean[1].abs() < 1e-9);
        assert!(wrap_pi(angle - row.psi) < 0.02, "{angle} vs {}", row.psi);
        assert!((grid.integral() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn wigner_lab_frame_and_zero_coupling() {
    let s = Sandbox::new();
    let o = s.run(&["wigner", "-c", "quick.toml", "--cep", "0.5", "--lab-frame", "--set", "g=0.05", "--set", "n_at=10.0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = panel(&s.path("out/wigner_phi_0p5000.json"));
    assert_eq!(p.frame, "lab");
    let grid = parse_wigner_csv(&fs::read_to_string(s.path("out/wigner_phi_0p5000.csv")).unwrap()).unwrap();
    let (mean, _, _) = grid.moments();
    assert!((mean[0] - p.center_beta[0]).abs() < 1e-6 && (mean[1] - p.center_beta[1]).abs() < 1e-6);
    let alpha_plus_chi = [p.alpha[0] + p.chi1[0], p.alpha[1] + p.chi1[1]];
    assert!((p.center_beta[0] - alpha_plus_chi[0]).abs() < 1e-9 * p.alpha[1].abs().max(1.0));
    assert!((p.center_beta[1] - alpha_plus_chi[1]).abs() < 1e-9 * p.alpha[1].abs().max(1.0));

    // g = 0: a vacuum-like disk.
    let o = s.run(&["wigner", "-c", "quick.toml", "--cep", "0.5", "--set", "g=0.0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let p = panel(&s.path("out/wigner_phi_0p5000.json"));
    let c = &p.state.cov;
    let disc = (0.25 * (c[0][0] - c[1][1]).powi(2) + c[0][1].powi(2)).sqrt();
    assert!(2.0 * disc <= 1e-9, "anisotropy {disc}");
    assert!((c[0][0] - 0.5).abs() < 1e-12);
    assert_eq!(p.r_eff, 0.0);
}

#[test]
fn wigner_without_cep_is_config_error() {
    let s = Sandbox::new();
    assert_eq!(code(&s.run(&["wigner", "-c", "quick.toml"])), 2);
}

#[test]
fn config_subcommand_prints_resolved_toml() {
    let s = Sandbox::new();
    let o = s.run(&["config", "-c", "quick.toml", "--set", "n_at=7.0"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("n_at = 7.0"));
    let back: hhg_cli::RunConfig = toml::from_str(&text).unwrap();
    assert_eq!(back.sfa.v_grid.n_v, 4096);
}
