use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hhg_cli::commands::{cache_ls, cache_rm, run_scan, run_validate, run_wigner, scan_summary};
use hhg_cli::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "hhg", version, about = "CEP scans, Wigner panels and grid checks for HHG squeezing")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; repeat to layer several.
    #[arg(short, long = "config")]
    config: Vec<PathBuf>,

    /// Override a single key, e.g. `--set tdse.grid.n_x=4096`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, CliError> {
        RunConfig::load(&self.config, &self.set)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Squeezing against CEP: scan.csv and scan.svg.
    Scan {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Neither read nor write the table cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Wigner panels (CSV, SVG, JSON) of the fundamental mode.
    Wigner {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// CEP in radians; repeat for a batch (defaults to wigner.ceps).
        #[arg(long, allow_negative_numbers = true)]
        cep: Vec<f64>,
        /// Plot in laboratory β instead of relative to the state center.
        #[arg(long)]
        lab_frame: bool,
        /// Neither read nor write the table cache.
        #[arg(long)]
        no_cache: bool,
    },
    /// Dry-run grid checks.
    Validate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Exit nonzero when a check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Inspect or prune the table cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
    /// Print the resolved configuration as TOML.
    Config {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    /// List entries and verify their integrity.
    Ls {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Remove entries.
    Rm {
        #[command(flatten)]
        cfg: ConfigArgs,
        keys: Vec<String>,
        #[arg(long)]
        all: bool,
        /// Remove entries that fail verification.
        #[arg(long)]
        corrupt: bool,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Scan { cfg, no_cache } => {
            let art = run_scan(&cfg.load()?, !no_cache)?;
            println!("{}", scan_summary(&art));
        }
        Command::Wigner {
            cfg,
            cep,
            lab_frame,
            no_cache,
        } => {
            for a in run_wigner(&cfg.load()?, &cep, lab_frame, !no_cache)? {
                println!(
                    "φ = {:.4}  ψ = {:.4}  ellipse angle = {:.4}  r_eff = {:.4}  -> {}",
                    a.panel.cep,
                    a.panel.psi,
                    a.ellipse_angle,
                    a.panel.r_eff,
                    a.svg.display()
                );
            }
        }
        Command::Validate { cfg, strict } => {
            // Structural errors are reported as rows, not raised.
            let config = RunConfig::load(&cfg.config, &cfg.set).or_else(|e| match e {
                CliError::Config(_) => lenient(&cfg),
                e => Err(e),
            })?;
            let report = run_validate(&config);
            println!("{report}");
            if strict && report.failures() > 0 {
                return Err(CliError::Validation(report.failures()));
            }
        }
        Command::Cache { action } => match action {
            CacheAction::Ls { cfg } => println!("{}", cache_ls(&cfg.load()?)?),
            CacheAction::Rm { cfg, keys, all, corrupt } => {
                let n = cache_rm(&cfg.load()?, &keys, all, corrupt)?;
                println!("removed {n} entries");
            }
        },
        Command::Config { cfg } => print!("{}", cfg.load()?.to_toml()?),
    }
    Ok(())
}

/// Loads without the structural validation, so `validate` can report it.
fn lenient(cfg: &ConfigArgs) -> Result<RunConfig, CliError> {
    RunConfig::load_unchecked(&cfg.config, &cfg.set)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
