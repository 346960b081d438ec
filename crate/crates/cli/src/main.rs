use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thinlayer_cli::{run_path, Experiment, Overrides, EXIT_VALIDATION};

/// Thin-insulation eigenvalue experiments.
#[derive(Debug, Parser)]
#[command(name = "thinlayer", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// output directory (overrides the config)
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// seed of the eigensolver start block (overrides the config)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads for parallel solves
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment named in the config.
    Run { config: PathBuf },
    /// Compare finite element and semi-analytic spectra for the config's geometry.
    OracleCompare { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: cannot start {n} worker threads");
            return ExitCode::from(EXIT_VALIDATION as u8);
        }
    }
    let (config, experiment) = match cli.command {
        Command::Run { config } => (config, None),
        Command::OracleCompare { config } => (config, Some(Experiment::OracleCompare)),
    };
    let overrides = Overrides {
        output: cli.output,
        seed: cli.seed,
        threads: cli.threads,
        experiment,
    };
    ExitCode::from(run_path(&config, &overrides) as u8)
}
