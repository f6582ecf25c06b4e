mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use config::{Format, RunConfig, SGrid};
use error::{CliError, CliResult};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "nahm", version, about = "Nahm data and zero modes for Dirac multimonopoles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Single flow parameter; overrides the configured grid.
    #[arg(long, conflicts_with = "s_grid")]
    s: Option<f64>,
    /// Linear grid `start:stop:count`; overrides the configured grid.
    #[arg(long = "s-grid")]
    s_grid: Option<String>,
    /// Expansion order for `perturb`.
    #[arg(long, default_value_t = 1)]
    order: u32,
    /// Evaluation point `x1,x2,x3` for `zeromode`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Nahm matrices with verification over the s-grid.
    Solve(Common),
    /// Full verification report plus both boundary limits.
    Verify(Common),
    /// Raw and normalized section bases.
    Basis(Common),
    /// Large-s expansion of the basis.
    Perturb(Common),
    /// Dirac zero modes at a point.
    Zeromode(Common),
    /// Pipeline against closed forms.
    Oracle(Common),
}

fn context(c: &Common) -> CliResult<commands::Context> {
    let mut run = RunConfig::load(&c.config)?;
    if let Some(s) = c.s {
        run.s_grid = SGrid::single(s);
    }
    if let Some(g) = &c.s_grid {
        run.s_grid = SGrid::parse(g)?;
    }
    if let Some(seed) = c.seed {
        run.seed = seed;
    }
    let x = match c.x.as_deref() {
        None => None,
        Some(&[a, b, d]) => Some([a, b, d]),
        Some(v) => return Err(CliError::Config(format!("--x needs three comma-separated values, got {}", v.len()))),
    };
    commands::Context::new(run, c.order, x, c.format, c.out.clone())
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Solve(c) => commands::solve(&context(c)?),
        Command::Verify(c) => commands::verify(&context(c)?),
        Command::Basis(c) => commands::basis(&context(c)?),
        Command::Perturb(c) => commands::perturb(&context(c)?),
        Command::Zeromode(c) => commands::zeromode(&context(c)?),
        Command::Oracle(c) => commands::oracle(&context(c)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NAHM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("{}", output::to_json(&e.report()));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
