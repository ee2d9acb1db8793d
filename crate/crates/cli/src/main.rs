use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hblab_cli::commands::{self, Outcome, Status};
use hblab_cli::config::{ConfigError, ExperimentConfig, RecurrenceConfig};
use hblab_cli::selftest;

/// Heavy Ball non-monotonicity laboratory.
#[derive(Parser)]
#[command(name = "hblab", version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV destination; defaults to `outputs.csv_path`, then standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides `problem.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress report lines.
    #[arg(long, global = true)]
    quiet: bool,
    /// Without a command the config decides: `[recurrence]` means peak,
    /// `[adaptive]` adaptive, `policies` compare, anything else run.
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Iterate a second-order recurrence and report its peak.
    Peak(PeakArgs),
    /// Heavy Ball with fixed parameters and one restart policy.
    Run,
    /// Adaptive Heavy Ball with L doubling.
    Adaptive,
    /// Summary table over a list of restart policies.
    Compare,
    /// Run the acceptance checks.
    Selftest,
    /// Print an embedded recipe, or list them.
    Recipe { name: Option<String> },
}

#[derive(Args)]
struct PeakArgs {
    /// Double root of the characteristic polynomial.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a2: Option<f64>,
    /// Two real roots, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 2, allow_hyphen_values = true)]
    roots: Option<Vec<f64>>,
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    x1: Option<f64>,
    /// Last index to iterate to.
    #[arg(long)]
    k: Option<usize>,
}

impl PeakArgs {
    fn any(&self) -> bool {
        self.rho.is_some()
            || self.a1.is_some()
            || self.a2.is_some()
            || self.roots.is_some()
            || self.x0.is_some()
            || self.x1.is_some()
            || self.k.is_some()
    }

    fn recurrence(&self) -> RecurrenceConfig {
        RecurrenceConfig {
            rho: self.rho,
            a1: self.a1,
            a2: self.a2,
            roots: self.roots.clone(),
            x0: self.x0.unwrap_or(0.0),
            x1: self.x1.unwrap_or(1.0),
            k: self.k,
        }
    }
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.ok_or_else(|| ConfigError("--config is required".into()))?;
    ExperimentConfig::load(path)
}

fn execute(cli: &Cli) -> Result<(Outcome, Option<PathBuf>), ConfigError> {
    let cfg_path = cli.config.as_deref();
    let outcome_of = |cfg: &ExperimentConfig, f: fn(&hblab_cli::config::Experiment) -> Result<Outcome, ConfigError>| {
        let exp = cfg.validate(cli.seed)?;
        let path = exp.csv_path.clone();
        Ok((f(&exp)?, path))
    };
    match &cli.command {
        Some(Command::Peak(args)) => {
            let rec = if args.any() {
                if cfg_path.is_some() {
                    return Err(ConfigError("peak: give either flags or --config, not both".into()));
                }
                args.recurrence()
            } else {
                load(cfg_path)?
                    .recurrence
                    .ok_or_else(|| ConfigError("peak: config has no [recurrence] table".into()))?
            };
            Ok((commands::peak(&rec)?, None))
        }
        Some(Command::Run) => outcome_of(&load(cfg_path)?, commands::run),
        Some(Command::Adaptive) => outcome_of(&load(cfg_path)?, commands::adaptive),
        Some(Command::Compare) => outcome_of(&load(cfg_path)?, commands::compare),
        None => {
            let cfg = load(cfg_path)?;
            let path = cfg.outputs.csv_path.clone();
            Ok((commands::infer(&cfg, cli.seed)?, path))
        }
        Some(Command::Selftest | Command::Recipe { .. }) => unreachable!(),
    }
}

fn emit(cli: &Cli, outcome: &Outcome, csv_path: Option<PathBuf>) -> io::Result<()> {
    let dest = cli.out.clone().or(csv_path);
    let report_to_stdout = dest.is_some();
    match dest {
        Some(path) => File::create(&path)?.write_all(&outcome.csv)?,
        None => io::stdout().lock().write_all(&outcome.csv)?,
    }
    if !cli.quiet {
        for line in &outcome.report {
            if report_to_stdout {
                println!("{line}");
            } else {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn recipe(name: Option<&str>) -> ExitCode {
    match name {
        None => {
            for (name, _) in hblab_cli::recipes::RECIPES {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
        Some(name) => match hblab_cli::recipes::RECIPES.iter().find(|(n, _)| *n == name) {
            Some((_, text)) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("error: no recipe named `{name}`");
                ExitCode::from(Status::Config.code() as u8)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Some(Command::Selftest) => {
            let checks = selftest::all_checks();
            for c in &checks {
                println!("{}", c.line());
            }
            let status = if checks.iter().all(|c| c.passed()) { Status::Ok } else { Status::SelftestFailed };
            return ExitCode::from(status.code() as u8);
        }
        Some(Command::Recipe { name }) => return recipe(name.as_deref()),
        _ => {}
    }
    match execute(&cli) {
        Ok((outcome, path)) => {
            if let Err(e) = emit(&cli, &outcome, path) {
                eprintln!("error: {e}");
                return ExitCode::from(Status::Config.code() as u8);
            }
            ExitCode::from(outcome.status.code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Status::Config.code() as u8)
        }
    }
}
