//! Batch runner: reads a TOML run configuration, executes one experiment and
//! writes CSV tables, a JSON manifest and a plain-text summary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use thiserror::Error;

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{Experiment, Resolved, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Numerical(_) => EXIT_NUMERICAL,
            RunError::Validation(_) | RunError::Io(_) => EXIT_VALIDATION,
        }
    }
}

impl From<thinlayer_core::Error> for RunError {
    fn from(e: thinlayer_core::Error) -> Self {
        if e.is_numerical() {
            RunError::Numerical(e.to_string())
        } else {
            RunError::Validation(e.to_string())
        }
    }
}

impl From<thinlayer_core::geometry::GeometryError> for RunError {
    fn from(e: thinlayer_core::geometry::GeometryError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<thinlayer_core::profiles::ProfileError> for RunError {
    fn from(e: thinlayer_core::profiles::ProfileError) -> Self {
        RunError::Validation(e.to_string())
    }
}

impl From<thinlayer_oracles::OracleError> for RunError {
    fn from(e: thinlayer_oracles::OracleError) -> Self {
        RunError::Numerical(format!("oracle: {e}"))
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e.to_string())
    }
}

/// What an experiment produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(file name, contents)`
    pub files: Vec<(String, String)>,
    /// derived settings that influenced the run (grids, tolerances)
    pub parameters: Value,
    /// machine-readable results and verdicts
    pub results: Value,
    pub summary: Vec<String>,
    /// the computation finished but did not meet its stopping criterion
    pub not_converged: bool,
}

/// Overrides from the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub experiment: Option<Experiment>,
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Runs the configuration at `path`; returns the process exit code. Errors
/// are reported on stderr and, once the output directory exists, in the
/// manifest.
pub fn run_path(path: &Path, overrides: &Overrides) -> i32 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return EXIT_VALIDATION;
        }
    };
    let mut config = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(experiment) = overrides.experiment {
        config.experiment = experiment;
    }
    let resolved = match config.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let dir = overrides
        .output
        .clone()
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| PathBuf::from("thinlayer-output"));
    run_resolved(&resolved, path, &dir, overrides.threads)
}

fn run_resolved(resolved: &Resolved, config_path: &Path, dir: &Path, threads: Option<usize>) -> i32 {
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("error: cannot create output directory {}: {e}", dir.display());
        return EXIT_VALIDATION;
    }
    let mut manifest = json!({
        "tool": "thinlayer",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": resolved.experiment.name(),
        "status": "INCOMPLETE",
        "config_path": config_path.display().to_string(),
        "started_unix": unix_seconds(),
        "threads": threads.unwrap_or_else(rayon::current_num_threads),
        "resolved": resolved,
        "artifacts": [],
    });
    let write_manifest = |m: &Value| -> Result<(), RunError> {
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(m).map_err(|e| RunError::Io(e.to_string()))? + "\n")?;
        Ok(())
    };
    if let Err(e) = write_manifest(&manifest) {
        eprintln!("error: {e}");
        return e.exit_code();
    }

    let outcome = experiments::run(resolved);
    manifest["finished_unix"] = json!(unix_seconds());
    let code = match outcome {
        Ok(outcome) => {
            let mut names = Vec::new();
            for (name, contents) in &outcome.files {
                if let Err(e) = fs::write(dir.join(name), contents) {
                    manifest["diagnostics"] = json!(format!("writing {name}: {e}"));
                    let _ = write_manifest(&manifest);
                    eprintln!("error: writing {name}: {e}");
                    return EXIT_VALIDATION;
                }
                names.push(name.clone());
            }
            let mut summary = format!("thinlayer {} ({})\n", resolved.experiment.name(), env!("CARGO_PKG_VERSION"));
            for line in &outcome.summary {
                summary.push_str(line);
                summary.push('\n');
            }
            if fs::write(dir.join("summary.txt"), &summary).is_ok() {
                names.push("summary.txt".into());
            }
            print!("{summary}");
            manifest["artifacts"] = json!(names);
            manifest["parameters"] = outcome.parameters;
            manifest["results"] = outcome.results;
            if outcome.not_converged {
                manifest["status"] = json!("NOT_CONVERGED");
                manifest["diagnostics"] = json!("the iteration budget ran out before the stopping criterion; best-so-far results were written");
                eprintln!("warning: not converged");
                EXIT_NUMERICAL
            } else {
                manifest["status"] = json!("complete");
                EXIT_OK
            }
        }
        Err(e) => {
            manifest["diagnostics"] = json!(e.to_string());
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    manifest["exit_code"] = json!(code);
    if let Err(e) = write_manifest(&manifest) {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    code
}
