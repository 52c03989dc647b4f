use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use qbst::pipeline::{run, Command, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    SolveBcr,
    Decompose,
    Sample,
    OracleCheck,
    FullPipeline,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Command {
        match c {
            CommandArg::SolveBcr => Command::SolveBcr,
            CommandArg::Decompose => Command::Decompose,
            CommandArg::Sample => Command::Sample,
            CommandArg::OracleCheck => Command::OracleCheck,
            CommandArg::FullPipeline => Command::FullPipeline,
        }
    }
}

/// Exact solver pipeline for quasi-bipartite Steiner tree LP relaxations.
#[derive(Debug, Parser)]
#[command(name = "qbst", version, about)]
struct Cli {
    /// Pipeline stage to run.
    #[arg(long, value_enum)]
    command: CommandArg,
    /// Instance file in STP format.
    #[arg(long)]
    input: PathBuf,
    /// Seed for the sampling stage.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sampling trials.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Largest terminal count for exhaustive oracle checks.
    #[arg(long, default_value_t = 8)]
    oracle_limit: usize,
    /// Emit per-step traces and the generated cut log.
    #[arg(long)]
    trace: bool,
    /// Write the report to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also emit the report as JSON (to `<output>.json` or stdout).
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("QBST_LOG")).init();
    let cli = Cli::parse();
    let config = RunConfig {
        command: cli.command.into(),
        input_path: cli.input,
        seed: cli.seed,
        trials: cli.trials,
        oracle_limit: cli.oracle_limit,
        output: cli.output,
        trace: cli.trace,
        json: cli.json,
    };
    let outcome = run(&config);

    match &config.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.report) {
                eprintln!("cannot write report to {}: {e}", path.display());
                return ExitCode::from(1);
            }
            if let Some(json) = &outcome.json {
                let json_path = path.with_extension("json");
                if let Err(e) = std::fs::write(&json_path, json) {
                    eprintln!("cannot write JSON report to {}: {e}", json_path.display());
                    return ExitCode::from(1);
                }
            }
        }
        None => {
            print!("{}", outcome.report);
            if let Some(json) = &outcome.json {
                println!("{json}");
            }
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
