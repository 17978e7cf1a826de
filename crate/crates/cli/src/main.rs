//! Command-line front end for the tricolor simulator.

mod config;
mod design;
mod dispersion;
mod error;
mod output;
mod run;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "tricolor", version, about = "Three-color stationary light simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write snapshots, time series and scores.
    Run {
        #[command(flatten)]
        common: Common,
        /// Rerun with halved dt and doubled grid and report the change.
        #[arg(long)]
        check_convergence: bool,
    },
    /// Print the stationary amplitude, optimal detunings and lifetimes.
    Design {
        #[command(flatten)]
        common: Common,
    },
    /// Tabulate the dispersion relation against the eigenvalue oracle.
    Dispersion {
        #[command(flatten)]
        common: Common,
    },
    /// Run the configuration along one numeric axis.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        check_convergence: bool,
    },
}

fn out_dir(common: &Common, cfg: &RunConfig) -> CliResult<PathBuf> {
    common
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| CliError::Invalid("no output directory: pass --out or set output.dir".into()))
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn load(common: &Common) -> CliResult<RunConfig> {
    RunConfig::load(Path::new(&common.config))
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run {
            common,
            check_convergence,
        } => {
            let cfg = load(&common)?;
            let files = run::cmd_run(&cfg, &out_dir(&common, &cfg)?, check_convergence)?;
            report(&files);
        }
        Command::Design { common } => {
            let cfg = load(&common)?;
            let out = common.out.clone().or_else(|| cfg.output.dir.clone());
            if let Some(f) = design::cmd_design(&cfg, out.as_deref())? {
                report(&[f]);
            }
        }
        Command::Dispersion { common } => {
            let cfg = load(&common)?;
            report(&[dispersion::cmd_dispersion(&cfg, &out_dir(&common, &cfg)?)?]);
        }
        Command::Sweep {
            common,
            check_convergence,
        } => {
            let cfg = load(&common)?;
            let files = sweep::cmd_sweep(&cfg, &out_dir(&common, &cfg)?, check_convergence)?;
            report(&files);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
