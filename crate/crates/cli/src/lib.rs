//! Command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input (failed
//! validation, unsupported case, empty study, bad flag), 3 malformed data
//! file.

pub mod input;
pub mod report;

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use unitbound::benefit::{self, BenefitBounds};
use unitbound::oracle::run_containment;
use unitbound::pns::BoundsError;
use unitbound::simulation::{
    run_study, run_study_filtered, select_series, write_series, SimulationError, SortKey,
    StudyConfig,
};
use unitbound::{BenefitVector, PopulationData, Structure, INGEST_TOLERANCE};

use input::{DataFile, InputError};
use report::BoundsReport;

#[derive(Debug, Parser)]
#[command(
    name = "unitbound",
    version,
    about = "Bounds on PNS and unit-selection benefit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bound PNS and the benefit for the population in a data file.
    Bounds(BoundsArgs),
    /// Compare structure-aware bounds with Li-Pearl on random populations.
    Simulate(SimulateArgs),
    /// Check bounds against exact values on random structural models.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// TOML data file.
    pub file: PathBuf,
    /// baseline, nondescendant, partial-mediator or pure-mediator
    /// (default: the file's `structure`).
    #[arg(long)]
    pub structure: Option<Structure>,
    /// Payoffs β,γ,θ,δ (default: the file's `benefit`, else 1,-1,-1,-1).
    #[arg(long, allow_hyphen_values = true, value_parser = parse_benefit)]
    pub benefit: Option<BenefitVector>,
    /// Assert that the population satisfies the back-door criterion, so
    /// experimental quantities may come from observational data.
    #[arg(long)]
    pub backdoor: bool,
    /// Tolerance for consistency checks on ingested tables.
    #[arg(long, default_value_t = INGEST_TOLERANCE)]
    pub tolerance: f64,
    /// Also write the report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// nondescendant, partial-mediator or pure-mediator.
    #[arg(long)]
    pub case: Structure,
    #[arg(long, default_value_t = 100_000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_benefit)]
    pub benefit: Option<BenefitVector>,
    /// Keep drawing until `n` samples are narrowed.
    #[arg(long)]
    pub filtered: bool,
    /// Export this many randomly picked samples, sorted for plotting.
    #[arg(long, value_name = "M", requires = "series")]
    pub export_series: Option<usize>,
    /// Destination of the exported series (CSV).
    #[arg(long)]
    pub series: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub structure: Structure,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, allow_hyphen_values = true, value_parser = parse_benefit)]
    pub benefit: Option<BenefitVector>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn parse_benefit(s: &str) -> Result<BenefitVector, String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [b, g, t, d] = parts[..] else {
        return Err(format!(
            "expected four comma-separated payoffs, got {}",
            parts.len()
        ));
    };
    BenefitVector::new(b, g, t, d).map_err(|e| e.to_string())
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error("invalid population: {0}")]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write {path}: {source}")]
    Write {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(InputError::Io { .. }) | CliError::Write { .. } => 1,
            CliError::Input(InputError::Syntax(_) | InputError::Layout(_)) => 3,
            CliError::Input(InputError::Ingest(_)) | CliError::Bounds(_) | CliError::Usage(_) => 2,
            CliError::Simulation(SimulationError::Io(_) | SimulationError::Csv(_)) => 1,
            CliError::Simulation(_) => 2,
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Runs one command and returns what it prints.
pub fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(args) => cmd_oracle(args),
    }
}

pub fn cmd_bounds(args: BoundsArgs) -> Result<String, CliError> {
    let file = DataFile::load(&args.file)?;
    let structure = args.structure.or(file.structure).ok_or_else(|| {
        CliError::Usage("no structure: pass --structure or set `structure` in the file".into())
    })?;
    let bv = match args.benefit {
        Some(bv) => bv,
        None => file
            .benefit_vector()
            .transpose()?
            .unwrap_or_else(BenefitVector::cure_minus_harm),
    };
    let backdoor = args.backdoor || file.backdoor.unwrap_or(false);
    if args.tolerance.is_nan() || args.tolerance < 0.0 {
        return Err(CliError::Usage("--tolerance must be nonnegative".into()));
    }
    let data = file.population(structure, backdoor, args.tolerance)?;
    let bounds = benefit::bounds(&data, &bv)?;
    let baseline: Option<BenefitBounds> = match data {
        PopulationData::Baseline(_) => None,
        _ => Some(benefit::lipearl_bounds(&data.margin(), &bv)?),
    };
    let labels = file.z_labels()?;
    let text = BoundsReport {
        structure,
        bv,
        backdoor,
        z_labels: &labels,
        bounds: &bounds,
        baseline: baseline.as_ref(),
    }
    .render();
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    Ok(text)
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<String, CliError> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be positive".into()));
    }
    if args.case == Structure::Baseline {
        return Err(SimulationError::UnsupportedCase(args.case).into());
    }
    if args.workers == Some(0) {
        return Err(CliError::Usage("--workers must be positive".into()));
    }
    let bv = args.benefit.unwrap_or_else(BenefitVector::cure_minus_harm);
    let config = StudyConfig {
        case: args.case,
        n: args.n,
        bv,
        seed: args.seed,
        workers: args.workers,
    };
    let study = if args.filtered {
        run_study_filtered(&config)?
    } else {
        run_study(&config)?
    };
    let text = report::render_study(args.case, &bv, args.seed, args.filtered, &study);
    if let (Some(m), Some(path)) = (args.export_series, &args.series) {
        let records = study.records.as_deref().ok_or_else(|| {
            CliError::Usage("too many samples to keep records for a series export".into())
        })?;
        let rows = select_series(records, m, SortKey::for_case(args.case), args.seed);
        let out = File::create(path).map_err(|source| CliError::Write {
            path: path.display().to_string(),
            source,
        })?;
        write_series(&rows, BufWriter::new(out))?;
    }
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    Ok(text)
}

pub fn cmd_oracle(args: OracleArgs) -> Result<String, CliError> {
    let bv = args.benefit.unwrap_or_else(BenefitVector::cure_minus_harm);
    let report = run_containment(args.structure, args.trials, args.seed, &bv);
    let text = report::render_containment(args.seed, &report);
    if let Some(path) = &args.out {
        write_file(path, &text)?;
    }
    Ok(text)
}
