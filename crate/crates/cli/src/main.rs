use std::path::PathBuf;
use std::process::ExitCode;

use aseshm::{Error, ErrorClass};
use clap::{Args, Parser, Subcommand};

mod commands;
mod inspect;

#[derive(Parser, Debug)]
#[command(name = "aseshm", version, about = "Wing simulation and tensor-based damage detection")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON pipeline configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configured one.
    #[arg(long, global = true, value_name = "INT")]
    pub seed: Option<u64>,
    /// Output directory, overriding the configured one (default `out`).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate healthy and damaged recordings.
    Simulate {
        /// Schedule generator (`grid`, `lhs`, `lhs-large`).
        #[arg(long)]
        schedule: Option<String>,
    },
    /// Build the feature tensor from recordings.
    Featurize {
        /// Directory holding `healthy.csv` and `damaged.csv`.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Decompose healthy training events and embed every event in C-space.
    Decompose {
        /// Directory holding `features.ashm`.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Fit one-class SVMs over the configured hyperparameter grid.
    Train {
        /// Directory holding `embedding.ashm`.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
        /// Train at a single ν instead of the configured grid.
        #[arg(long)]
        nu: Option<f64>,
        /// Train at a single γ instead of the configured grid.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Score evaluation events with the trained model.
    Evaluate {
        /// Directory holding `embedding.ashm` and `model.ashm`.
        #[arg(long, value_name = "DIR")]
        input: Option<PathBuf>,
    },
    /// Run one end-to-end study and emit its report and plot data.
    Pipeline {
        /// `dim-compare`, `angle-compare` or `per-cluster`.
        #[arg(long, default_value = "dim-compare")]
        experiment: String,
    },
    /// Summarise an artifact or recordings file.
    Inspect {
        path: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Usage => 2,
        ErrorClass::Integrity => 3,
        ErrorClass::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Simulate { schedule } => commands::simulate(&cli.common, schedule.as_deref()),
        Command::Featurize { input } => commands::featurize(&cli.common, input),
        Command::Decompose { input, rank } => commands::decompose(&cli.common, input, rank),
        Command::Train { input, nu, gamma } => commands::train(&cli.common, input, nu, gamma),
        Command::Evaluate { input } => commands::evaluate(&cli.common, input),
        Command::Pipeline { experiment } => commands::pipeline(&cli.common, &experiment),
        Command::Inspect { path } => inspect::inspect(&path),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
