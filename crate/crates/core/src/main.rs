use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisealloc::cli::{self, ExperimentConfig, RunRecord};
use noisealloc::Error;

#[derive(Parser)]
#[command(name = "noisealloc", version, about = "Optimal training distributions over noise levels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured solver and write rounds.csv, summary.toml and report.txt.
    Solve(RunArgs),
    /// Grid-search reference solution for the analytic linear model.
    Oracle(RunArgs),
    /// Re-emit the report from a stored run.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output_dir in the config.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding rounds.csv and summary.toml.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Read the run directory from this config's output_dir instead.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&args.config).map_err(|e| match e {
        Error::Io(io) => Error::Config(format!("cannot read {}: {io}", args.config.display())),
        other => other,
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Solve(args) => {
            let cfg = load(&args)?;
            let outcome = cli::run_experiment(&cfg)?;
            let s = &outcome.record.summary;
            println!(
                "{}: {} after {} rounds, max gap {:.6}, overall risk {:.6}",
                cfg.problem.as_str(),
                if s.converged { "converged" } else { "not converged" },
                s.rounds,
                s.max_gap,
                s.overall_risk
            );
            if let Some(e) = s.epsilon_min {
                println!("epsilon_min {e:.6}");
            }
            if let Some(a) = &s.advisory {
                eprintln!("{a}");
            }
            println!("wrote {}", cfg.output_dir.display());
            Ok(outcome.exit_code())
        }
        Command::Oracle(args) => {
            let cfg = load(&args)?;
            let rep = cli::run_oracle(&cfg)?;
            if rep.feasible {
                println!(
                    "oracle: sigma_bar^2 {:.6}, gain {:.6}, overall risk {:.6}, max gap {:.6}, epsilon_min {:.6}",
                    rep.sigma_bar_sq.unwrap_or(f64::NAN),
                    rep.gain.unwrap_or(f64::NAN),
                    rep.overall_risk.unwrap_or(f64::NAN),
                    rep.max_gap.unwrap_or(f64::NAN),
                    rep.epsilon_min
                );
            } else {
                eprintln!(
                    "oracle: infeasible, epsilon {} is below epsilon_min {:.6}",
                    rep.epsilon.unwrap_or(f64::NAN),
                    rep.epsilon_min
                );
            }
            Ok(rep.exit_code())
        }
        Command::Report(args) => {
            let dir = match (args.out, args.config) {
                (Some(out), _) => out,
                (None, Some(path)) => ExperimentConfig::load(&path)?.output_dir,
                (None, None) => return Err(Error::Config("report needs --out or --config".into())),
            };
            let record = RunRecord::read(&dir)?;
            let files = cli::emit_report(&record, &dir)?;
            print!("{}", std::fs::read_to_string(&files.report)?);
            Ok(cli::EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let code = match run(args.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            cli::exit_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
