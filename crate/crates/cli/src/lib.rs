//! Command-line front end: configuration, input loading, CSV output and the
//! verification suites behind the `futaki` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;
pub mod table;
pub mod verify;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::{
    calibration_or_default, cmd_calibrate, cmd_energy, cmd_futaki, cmd_norms, cmd_orbit, require_calibration,
    resolve_calibration, CalibrationSource,
};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::verify::{run_verify, Suite};

pub const DEFAULT_CALIBRATION: &str = "futaki_calibration.txt";

#[derive(Debug, Parser)]
#[command(name = "futaki", version, about = "Futaki invariants, energy functionals and norms of complete intersections")]
pub struct Cli {
    /// Flat key=value run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Calibration record read by norm commands and written by `calibrate`.
    #[arg(long, global = true, default_value = DEFAULT_CALIBRATION)]
    pub calibration: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact Futaki invariant of a diagonal vector field.
    Futaki {
        /// Catalog name or variety file.
        variety: String,
        /// Trace-zero weights, e.g. `1,1,1,-3`.
        weights: String,
    },
    /// Aubin-Yau, Futaki and K-energy functionals at the potential of sigma.
    Energy {
        variety: String,
        /// `diag:…`, `expdiag:…`, `identity`, or a matrix file.
        sigma: String,
        /// Constant added to the potential.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        shift: f64,
    },
    /// Log norms of the defining system, and of its transform when sigma is given.
    Norms {
        variety: String,
        #[arg(long)]
        sigma: Option<String>,
    },
    /// Functionals and the K-energy norm side along exp(tX).
    Orbit {
        variety: String,
        weights: String,
        /// `a:b:k` or a comma list.
        #[arg(long, default_value = "-0.5:0.5:11", allow_hyphen_values = true)]
        t: String,
    },
    /// Run a built-in verification suite.
    Verify {
        /// exact, volume, ricci, adjunction, theorem5, theorem6, futaki-numeric or all.
        suite: String,
    },
    /// Select the transform convention and weight variant and write the record.
    Calibrate {
        /// Cases `<variety> <sigma>` one per line, replacing the default suite.
        #[arg(long)]
        suite: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(n) = cli.samples {
        cfg.samples = n;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, body: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match out {
        Some(p) => std::fs::write(p, body)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", p.display()))),
        None => stdout.write_all(body.as_bytes()).map_err(CliError::from),
    }
}

fn note_default(source: CalibrationSource, stderr: &mut dyn Write) {
    if source == CalibrationSource::Default {
        let _ = writeln!(stderr, "note: no calibration found; using ComposeInverse with Derivation weights");
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> CliResult<()> {
    let cfg = load_config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Futaki { variety, weights } => emit(out, &cmd_futaki(variety, weights)?, stdout),
        Command::Energy { variety, sigma, shift } => emit(out, &cmd_energy(&cfg, variety, sigma, *shift)?, stdout),
        Command::Norms { variety, sigma } => {
            let cal = calibration_or_default(&cfg, &cli.calibration)?;
            note_default(cal.source, stderr);
            emit(out, &cmd_norms(&cfg, &cal, variety, sigma.as_deref())?, stdout)
        }
        Command::Orbit { variety, weights, t } => {
            let cal = calibration_or_default(&cfg, &cli.calibration)?;
            note_default(cal.source, stderr);
            let grid = input::parse_grid(t)?;
            emit(out, &cmd_orbit(&cfg, &cal, variety, weights, &grid)?, stdout)
        }
        Command::Verify { suite } => {
            let suite = Suite::parse(suite)?;
            let cal = if suite.needs_calibration() {
                Some(require_calibration(&cfg, &cli.calibration)?)
            } else {
                resolve_calibration(&cfg, &cli.calibration)?
            };
            let report = run_verify(&cfg, suite, cal.as_ref())?;
            emit(out, &report.to_csv(), stdout)?;
            let _ = writeln!(stderr, "{} cases, {} failed", report.cases.len(), report.failures());
            if report.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(format!("{} verification cases failed", report.failures())))
            }
        }
        Command::Calibrate { suite } => {
            let text = cmd_calibrate(&cfg, suite.as_deref())?;
            let target = out.unwrap_or(&cli.calibration);
            std::fs::write(target, &text)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", target.display())))?;
            let _ = writeln!(stderr, "calibration written to {}", target.display());
            Ok(())
        }
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> u8 {
    match execute(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
