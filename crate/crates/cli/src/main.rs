//! `robust-potts <command> [--config FILE] [--key value ...]`

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robust_potts::config::{parse_with, Command};
use robust_potts::runner::{dispatch, WORKERS_ENV};

#[derive(Parser, Debug)]
#[command(
    name = "robust-potts",
    version,
    about = "Exact and Monte Carlo checks of Potts order under weakened cutsets",
    after_help = format!(
        "Any config key can be overridden as `--key value` or `--section.key value`.\n\
         The worker count is read from {WORKERS_ENV}."
    )
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Exact marginals by edge enumeration or the frontier method
    Enumerate(RunArgs),
    /// Monte Carlo marginals for each (q, ε, L)
    Sample(RunArgs),
    /// Theta versus L for each ε, with trend verdicts
    Robustness(RunArgs),
    /// The scan with the cutset on the ghost edges
    Diagonal(RunArgs),
    /// Exact stochastic-ordering checks across ε
    FkgCheck(RunArgs),
    /// Contour census from sampled configurations
    Contours(RunArgs),
    /// Constrained partition sums for every bond pattern
    BklCheck(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML configuration file
    #[arg(long, short)]
    config: Option<PathBuf>,

    /// Overrides, as `--key value` pairs
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "OVERRIDES"
    )]
    overrides: Vec<String>,
}

impl Cmd {
    fn split(self) -> (Command, RunArgs) {
        match self {
            Cmd::Enumerate(a) => (Command::Enumerate, a),
            Cmd::Sample(a) => (Command::Sample, a),
            Cmd::Robustness(a) => (Command::Robustness, a),
            Cmd::Diagonal(a) => (Command::Diagonal, a),
            Cmd::FkgCheck(a) => (Command::FkgCheck, a),
            Cmd::Contours(a) => (Command::Contours, a),
            Cmd::BklCheck(a) => (Command::BklCheck, a),
        }
    }
}

fn pair_overrides(raw: &[String]) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    let mut it = raw.iter();
    while let Some(arg) = it.next() {
        let Some(key) = arg.strip_prefix("--") else {
            return Err(format!("expected `--key value`, found {arg:?}"));
        };
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let value = it
                    .next()
                    .ok_or_else(|| format!("missing value for --{key}"))?;
                out.push((key.to_string(), value.clone()));
            }
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();

    let overrides = match pair_overrides(&args.overrides) {
        Ok(o) => o,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let text = match &args.config {
        Some(path) => match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let cfg = match parse_with(&text, Some(command), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match dispatch(&cfg) {
        Ok(summary) => {
            for path in &summary.artifacts {
                println!("wrote {}", path.display());
            }
            println!("verdicts: {}", summary.verdicts);
            println!(
                "wall time {:.2} s on {} workers",
                summary.wall_time_s, summary.workers
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
