mod commands;
mod config;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::CliError;
use config::{ConfigError, Model, RunConfig};

/// Quench dynamics of long-range transverse-field Ising chains.
#[derive(Parser)]
#[command(name = "prethermal", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coupling matrix, its mode spectrum and, for traps, the effective potential.
    Couplings(Common),
    /// Quench traces with GGE and diagonal-ensemble references.
    Evolve(Common),
    /// Spin-wave GGE predictions only.
    Gge(Common),
    /// Weighted pair gaps of the first pattern over `alpha_grid`.
    Gaps(Common),
    /// Simulated measurement shots and post-selected estimates.
    Shots(Common),
    /// Fitted exponent against beatnote detuning for the configured trap.
    SweepAlpha(Common),
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `out_dir`, default is the working directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `model`: exact, xy or spinwave.
    #[arg(long)]
    model: Option<String>,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Couplings(c)
            | Command::Evolve(c)
            | Command::Gge(c)
            | Command::Gaps(c)
            | Command::Shots(c)
            | Command::SweepAlpha(c) => c,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(model) = &common.model {
        cfg.model = model.parse::<Model>()?;
        cfg.validate()?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = cli.command.common();
    let cfg = load(common)?;
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError(format!("--threads: {e}")))?;
    }
    let dir = common
        .out
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let out = io::OutDir::create(&dir)?;
    match &cli.command {
        Command::Couplings(_) => commands::couplings(&cfg, &out),
        Command::Evolve(_) => commands::evolve(&cfg, &out),
        Command::Gge(_) => commands::gge(&cfg, &out),
        Command::Gaps(_) => commands::gaps(&cfg, &out),
        Command::Shots(_) => commands::shots(&cfg, &out),
        Command::SweepAlpha(_) => commands::sweep_alpha(&cfg, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("prethermal: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
