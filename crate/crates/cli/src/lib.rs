//! `hankel-lab`: command-line front end for the `hankel-core` workbench.
//!
//! Every run prints a JSON [`ResultEnvelope`] on stdout. The exit code is 0
//! on success, 2 when a built-in check fails and 1 when the run could not be
//! computed (usage errors, malformed inputs, resource caps).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;

pub mod commands;
pub mod config;
pub mod envelope;

pub use commands::Failure;
pub use config::{Command, RunConfig};
pub use envelope::{Check, ResultEnvelope};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "hankel-lab", version, about = "Spectral experiments for Hankel operators")]
struct Cli {
    /// Seed of every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "HANKEL_LAB_WORKERS")]
    workers: Option<usize>,
    /// Write the CSV here instead of inlining it in the envelope.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Write the run configuration here before running.
    #[arg(long, global = true)]
    save_config: Option<PathBuf>,
    /// Rerun a saved configuration or envelope.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

/// Loads a [`RunConfig`], or the config of a [`ResultEnvelope`].
pub fn load_config(path: &Path) -> Result<RunConfig, Failure> {
    let text = read_text(path)?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("config") {
        value = inner.take();
    }
    serde_json::from_value(value).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn inline_measures(mut command: Command) -> Result<Command, Failure> {
    match &mut command {
        Command::Ids(a) => {
            if let Some(p) = a.measure.take() {
                a.measure_literal = Some(read_text(&p)?);
            }
        }
        Command::Carleson(a) => {
            if let Some(p) = a.measure.take() {
                a.measure_literal = Some(read_text(&p)?);
            }
        }
        _ => {}
    }
    Ok(command)
}

fn build_config(cli: Cli) -> Result<(RunConfig, Option<usize>, Option<PathBuf>), Failure> {
    let config = match (cli.replay, cli.command) {
        (Some(path), None) => {
            let mut c = load_config(&path)?;
            if cli.out.is_some() {
                c.out = cli.out;
            }
            c
        }
        (None, Some(command)) => RunConfig {
            seed: cli.seed,
            out: cli.out,
            command: inline_measures(command)?,
        },
        (Some(_), Some(_)) => return Err(Failure::Usage("--replay takes no subcommand".into())),
        (None, None) => return Err(Failure::Usage("missing subcommand (see --help)".into())),
    };
    Ok((config, cli.workers, cli.save_config))
}

/// Runs a configuration on `workers` threads (the global pool when `None`).
pub fn execute(config: &RunConfig, workers: Option<usize>) -> Result<ResultEnvelope, Failure> {
    let started = Instant::now();
    let report = match workers {
        None => commands::execute(config)?,
        Some(0) => return Err(Failure::Usage("--workers must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?
            .install(|| commands::execute(config))?,
    };
    let mut outputs = report.outputs;
    if let Some(csv) = report.csv {
        let value = match &config.out {
            Some(path) => {
                fs::write(path, csv).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
                serde_json::json!({ "file": path.display().to_string() })
            }
            None => serde_json::Value::String(csv),
        };
        outputs.insert("csv".into(), value);
    }
    Ok(ResultEnvelope {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outputs,
        checks: report.checks,
    })
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_ERROR,
            };
        }
    };
    let result = build_config(cli).and_then(|(config, workers, save)| {
        if let Some(path) = save {
            let text = serde_json::to_string_pretty(&config).expect("config serializes");
            fs::write(&path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))?;
        }
        execute(&config, workers)
    });
    match result {
        Ok(envelope) => {
            let text = serde_json::to_string_pretty(&envelope).expect("envelope serializes");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            for c in envelope.checks.iter().filter(|c| !c.passed) {
                eprintln!("check failed: {} ({})", c.name, c.detail);
            }
            if envelope.passed() {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
