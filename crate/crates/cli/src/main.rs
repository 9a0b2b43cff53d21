use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use xcisim::campaign::Scale;
use xcisim_cli::commands;
use xcisim_cli::config::{Config, Overrides};

/// Pump-and-probe XCI simulator for dispersion-managed links.
#[derive(Parser)]
#[command(name = "xcisim", version)]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration; omitted sections take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// desk or full.
    #[arg(long)]
    scale: Option<Scale>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario in the configured modes.
    Run(Common),
    /// Run the full experiment matrix.
    Matrix(Common),
    /// Incoherent GN trace of the configured segment.
    Gn(Common),
    /// Accumulated dispersion before and after each DCU.
    DispersionMap(Common),
    /// Coherency coefficients against θ from trace CSVs.
    Scatter {
        #[command(flatten)]
        common: Common,
        /// Trace CSV files.
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Asymptotes and correlation sets of trace CSVs.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
}

fn load(common: &Common) -> anyhow::Result<Config> {
    let mut cfg = match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    cfg.apply(&Overrides {
        seed: common.seed,
        scale: common.scale,
        out: common.out.clone(),
    });
    Ok(cfg)
}

fn dispatch(cmd: &Command) -> anyhow::Result<PathBuf> {
    match cmd {
        Command::Run(c) => commands::cmd_run(&load(c)?),
        Command::Matrix(c) => commands::cmd_matrix(&load(c)?),
        Command::Gn(c) => commands::cmd_gn(&load(c)?),
        Command::DispersionMap(c) => commands::cmd_dispersion_map(&load(c)?),
        Command::Scatter { common, traces } => commands::cmd_scatter(&load(common)?, traces),
        Command::Analyze { common, traces } => commands::cmd_analyze(&load(common)?, traces),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match dispatch(&cli.command) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(xcisim_cli::exit_code(&e) as u8)
        }
    }
}
