//! `mkdv`: generate, check, simulate and export mKdV hierarchies for A_r^(1).
//!
//! Exit codes: 0 success, 1 a check or simulation failed, 2 usage or I/O error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::RunError;
use config::{config_args, FlowList, Format, RawConfig, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "mkdv", version, about, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a JSON and a LaTeX file for each requested flow.
    Generate(Common),
    /// Run the symbolic check suite; exit 1 if any residual is nonzero.
    Check(Common),
    /// Integrate one flow numerically and monitor conserved densities.
    Simulate(Common),
    /// Export all requested flows (or a stored flow file) as one document.
    Export {
        #[command(flatten)]
        common: Common,
        /// A flow JSON file written by `generate` to convert instead of recomputing.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Flat `key = value` file; keys are the long flag names. Flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rank r of A_r^(1).
    #[arg(long)]
    rank: Option<usize>,
    /// Comma-separated flow indices (exponents of A_r^(1)).
    #[arg(long)]
    flows: Option<FlowList>,
    /// Degree bound D of the recursion; at least max(flows) + 2.
    #[arg(long)]
    degree: Option<i32>,
    /// Comma-separated checks, or `all`.
    #[arg(long)]
    checks: Option<String>,
    /// Grid points for `simulate`.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Period of the spatial domain.
    #[arg(long)]
    length: Option<f64>,
    /// RK4 time step.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    /// Keep every k-th frame of the trajectory.
    #[arg(long)]
    stride: Option<usize>,
    /// Initial data: zero, sine[:a,mode], gaussian[:a,w] or sech[:a,w].
    #[arg(long)]
    profile: Option<String>,
    /// Output directory. `check` and `export` print to stdout without it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Largest tolerated relative drift of a conserved integral.
    #[arg(long)]
    drift_tol: Option<f64>,
    #[arg(long, hide = true)]
    perturb_flow: Option<u32>,
}

impl Common {
    fn raw(self) -> RawConfig {
        RawConfig {
            rank: self.rank,
            flows: self.flows,
            degree: self.degree,
            checks: self.checks,
            grid_n: self.grid_n,
            length: self.length,
            dt: self.dt,
            steps: self.steps,
            stride: self.stride,
            profile: self.profile,
            out: self.out,
            format: self.format,
            drift_tol: self.drift_tol,
            perturb: self.perturb_flow,
        }
    }
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Generate(c) | Command::Check(c) | Command::Simulate(c) => c,
            Command::Export { common, .. } => common,
        }
    }
}

/// Parses the command line; if it names a config file, parses again with the
/// file's entries inserted right after the subcommand so later flags override them.
fn parse() -> Result<Cli, RunError> {
    let argv: Vec<OsString> = std::env::args_os().collect();
    let cli = Cli::parse_from(&argv);
    let Some(path) = cli.command.common().config.clone() else {
        return Ok(cli);
    };
    let pos = argv
        .iter()
        .position(|a| ["generate", "check", "simulate", "export"].iter().any(|s| a == s))
        .expect("clap accepted a subcommand");
    let mut merged = argv[..=pos].to_vec();
    merged.extend(config_args(&path)?);
    merged.extend_from_slice(&argv[pos + 1..]);
    Ok(Cli::parse_from(merged))
}

fn run() -> Result<u8, RunError> {
    let cli = parse()?;
    match cli.command {
        Command::Generate(c) => commands::generate(&RunConfig::resolve(c.raw(), false)?),
        Command::Check(c) => commands::check(&RunConfig::resolve(c.raw(), false)?),
        Command::Simulate(c) => commands::simulate(&RunConfig::resolve(c.raw(), true)?),
        Command::Export { common, input } => {
            commands::export(&RunConfig::resolve(common.raw(), false)?, input.as_deref())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
