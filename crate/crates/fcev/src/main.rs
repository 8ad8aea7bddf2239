use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcev::{commands, CliError, Format, Overrides, RunConfig};
use fcev_core::Engine;

/// Fractional CEV option pricing.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Price the configured contracts with one engine.
    Price(Common),
    /// Price with every engine and check pairwise agreement.
    Xcheck(Common),
    /// Implied volatility across a strike grid.
    Skew(Common),
    /// Dump simulated paths.
    Paths(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Engine: series, quadrature, pde, mc or black_scholes.
    #[arg(long, value_parser = parse_engine)]
    engine: Option<Engine>,
    /// Report file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: fcev_core::Error| e.to_string())
}

type Handler = fn(&RunConfig) -> Result<i32, CliError>;

fn run(cli: Cli) -> Result<i32, CliError> {
    let (common, cmd): (&Common, Handler) = match &cli.command {
        Command::Price(c) => (c, commands::price),
        Command::Xcheck(c) => (c, commands::xcheck),
        Command::Skew(c) => (c, commands::skew),
        Command::Paths(c) => (c, commands::paths),
    };
    let cfg = RunConfig::load(&common.config)?.apply(&Overrides {
        engine: common.engine,
        out: common.out.clone(),
        format: common.format,
        seed: common.seed,
    })?;
    cmd(&cfg)
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            let report = e.report();
            eprintln!(
                "{}",
                serde_json::to_string(&report).unwrap_or_else(|_| e.to_string())
            );
            report.exit_code
        }
    };
    ExitCode::from(code as u8)
}
