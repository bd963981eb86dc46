//! Command-line front end: `run` one experiment, `list` the catalog, or
//! run the whole `suite` into a single report.
//!
//! Exit codes: 0 when every row passes its predicate, 1 when at least one
//! row fails, 2 on any runtime error (bad input, io, budget). The canonical
//! report bytes depend only on the configuration, never on the worker
//! count or on wallclock; measured timings appear only in `--pretty`
//! output, which is never the canonical artifact.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, Overrides, RawConfig};
use crate::error::{Error, Result};
use crate::harness::{catalog, run_experiment, suite_plan};
use crate::report::{self, RatioReport, ReportFormat};

#[derive(Debug, Parser)]
#[command(
    name = "gammaflow",
    version,
    about = "Deterministic ratio experiments for vector-valued stochastic integrals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment from the catalog.
    Run {
        /// Experiment name; `list` prints the catalog.
        name: String,
        /// TOML configuration file; flags below override its values.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the experiment catalog, one "name  anchor" line each.
    List,
    /// Run a fixed representative configuration of every experiment and
    /// emit one combined report.
    Suite {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// Master seed; one seed determines every stream downstream.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo sample paths per experiment.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Write the canonical report to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Print a human-readable summary with measured timings to stdout.
    #[arg(long)]
    pub pretty: bool,
    /// Worker threads for the parallel reductions. Any value produces
    /// byte-identical reports; this only trades wallclock.
    #[arg(long)]
    pub workers: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            out: self
                .out
                .as_ref()
                .map(|p| p.to_string_lossy().into_owned()),
            format: self.format.clone(),
        }
    }
}

/// Install the global worker pool. Later calls with a different size are
/// ignored by rayon; reports do not depend on the pool size, so that is
/// harmless.
fn configure_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn load_raw(config: Option<&PathBuf>) -> Result<RawConfig> {
    match config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            RawConfig::from_toml(&text)
        }
        None => Ok(RawConfig::default()),
    }
}

struct Outcome {
    rows: Vec<RatioReport>,
    out: Option<String>,
    format: ReportFormat,
    elapsed_ms: u128,
}

fn run_one(name: &str, config: Option<&PathBuf>, common: &Common) -> Result<Outcome> {
    let mut raw = load_raw(config)?;
    common.overrides().apply(&mut raw);
    let cfg = config::validate(&raw, Some(name))?;
    let started = Instant::now();
    let rows = run_experiment(&cfg)?;
    Ok(Outcome {
        rows,
        out: cfg.out.clone(),
        format: cfg.format,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

fn run_suite(common: &Common) -> Result<Outcome> {
    let overrides = common.overrides();
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut out = None;
    let mut format = ReportFormat::Csv;
    for mut raw in suite_plan() {
        overrides.apply(&mut raw);
        let cfg = config::validate(&raw, None)?;
        rows.extend(run_experiment(&cfg)?);
        out = cfg.out.clone();
        format = cfg.format;
    }
    Ok(Outcome {
        rows,
        out,
        format,
        elapsed_ms: started.elapsed().as_millis(),
    })
}

/// Execute a parsed command line; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match cli.command {
        Command::List => {
            for (name, anchor) in catalog() {
                println!("{name:<22} {anchor}");
            }
            0
        }
        Command::Run {
            name,
            config,
            common,
        } => {
            configure_workers(common.workers);
            finish(run_one(&name, config.as_ref(), &common), &common)
        }
        Command::Suite { common } => {
            configure_workers(common.workers);
            finish(run_suite(&common), &common)
        }
    }
}

fn finish(result: Result<Outcome>, common: &Common) -> i32 {
    match result {
        Ok(outcome) => {
            let all_pass = match emit_for(&outcome, common) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            if all_pass {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn emit_for(outcome: &Outcome, common: &Common) -> Result<bool> {
    // Canonical artifact: the file when requested, stdout otherwise.
    // With --pretty and no --out the table replaces the canonical dump.
    if let Some(path) = &outcome.out {
        report::write_report(&outcome.rows, outcome.format, path.as_ref())?;
    } else if !common.pretty {
        print!("{}", report::render(&outcome.rows, outcome.format)?);
    }
    if common.pretty {
        print!("{}", report::pretty(&outcome.rows));
        println!("measured wallclock: {} ms", outcome.elapsed_ms);
    }
    Ok(outcome.rows.iter().all(|r| r.pass))
}
