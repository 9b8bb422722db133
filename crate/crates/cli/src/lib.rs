//! `mopo` command line: run an optimization, then inspect its front and diagnostics.
//!
//! stdout carries data; logs go to stderr (level from `MOPO_LOG`).

pub mod export;
pub mod stats;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use mopo::backends::Backends;
use mopo::config::RunConfig;
use mopo::engine::{self, store, Ablate, EngineError, GenerationRecord, RunOptions};

pub use export::{ExportRow, ExportTable, Format, Order};
pub use stats::{write_table, Table};

#[derive(Debug, Parser)]
#[command(name = "mopo", version, about = "Multi-objective evolutionary prompt optimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an optimization, or resume an interrupted one.
    Run(RunArgs),
    /// Print the final front of a finished run.
    Front(FrontArgs),
    /// Export per-generation diagnostics of a finished run as CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Run configuration (JSON). Optional with --resume, where it must match the stored one.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Replace every HTTP backend with its deterministic mock.
    #[arg(long)]
    pub mock: bool,
    #[arg(long)]
    pub no_combine: bool,
    #[arg(long)]
    pub no_paraphrase: bool,
    /// Continue the run stored in this directory.
    #[arg(long, conflicts_with_all = ["out", "force"])]
    pub resume: Option<PathBuf>,
    /// Directory to persist the run in.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replace a run already stored in --out.
    #[arg(long, requires = "out")]
    pub force: bool,
    /// Stop after persisting this generation (exit code 3; continue with --resume).
    #[arg(long)]
    pub halt_after: Option<u32>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Tsv,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct FrontArgs {
    pub dir: PathBuf,
    #[arg(long, value_enum, default_value = "tsv")]
    pub format: FormatArg,
    /// Order by this objective, best first.
    #[arg(long, conflicts_with = "balanced")]
    pub objective: Option<String>,
    /// Order by the lowest objective score, best first.
    #[arg(long)]
    pub balanced: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub dir: PathBuf,
    /// operators, fitness, hypervolume or ledger.
    #[arg(long, default_value = "fitness")]
    pub table: String,
    /// Write every table to <OUT>/<table>.csv instead of printing one.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Usage(String),
    #[error("cannot read config {}: {reason}", path.display())]
    Config { path: PathBuf, reason: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Engine(e) => e.exit_code(),
            CliError::Usage(_) | CliError::Config { .. } => 2,
            CliError::Io(_) | CliError::Csv(_) => 4,
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli, &mut io::stdout()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => cmd_run(&args, out),
        Command::Front(args) => cmd_front(&args, out),
        Command::Stats(args) => cmd_stats(&args, out),
    }
}

fn read_config(path: &Path) -> Result<RunConfig, CliError> {
    let err = |reason: String| CliError::Config { path: path.to_path_buf(), reason };
    let json = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    RunConfig::from_json(&json).map_err(|e| err(e.to_string()))
}

/// Applies the command-line overrides to a configuration.
pub fn effective_config(mut config: RunConfig, args: &RunArgs) -> Result<RunConfig, CliError> {
    if args.mock {
        config = config.into_mock();
    }
    if let Some(seed) = args.seed {
        config.rng_seed = seed;
    }
    let which = match (args.no_combine, args.no_paraphrase) {
        (false, false) => return Ok(config),
        (true, false) => Ablate::NoCombine,
        (false, true) => Ablate::NoParaphrase,
        (true, true) => Ablate::Both,
    };
    Ok(engine::ablate(&config, which)?)
}

/// Deletes the files of a stored run, leaving anything else in the directory alone.
fn clear_run(dir: &Path) -> io::Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        let owned = [store::CONFIG_FILE, store::FINAL_FILE, store::TELEMETRY_FILE].contains(&name)
            || (name.starts_with("gen-") && (name.ends_with(".jsonl") || name.ends_with(".tmp")))
            || name.ends_with(".json.tmp");
        if owned {
            fs::remove_file(path)?;
        }
    }
    Ok(())
}

/// One line per generation: index, |P_pop|, best score per objective, hypervolume.
pub fn summary_line(record: &GenerationRecord) -> String {
    let best: Vec<String> = record.best_scores().iter().map(|s| format!("{s:.4}")).collect();
    let hv = record.hypervolume().map_or("n/a".to_string(), |h| format!("{h:.6}"));
    format!("gen {:>3}  pop {:>4}  best [{}]  hv {hv}", record.generation, record.stats.population, best.join(", "))
}

fn cmd_run(args: &RunArgs, out: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let mut write_failure: Option<io::Error> = None;
    let mut report = |record: &GenerationRecord| {
        if write_failure.is_none() {
            write_failure = writeln!(out, "{}", summary_line(record)).err();
        }
    };
    let options = RunOptions { halt_after: args.halt_after, on_generation: Some(&mut report) };

    let result = if let Some(dir) = &args.resume {
        let (_, stored) = store::RunDir::open(dir)?;
        let expected = args
            .config
            .as_deref()
            .map(|p| read_config(p).and_then(|c| effective_config(c, args)))
            .transpose()?;
        let config = match &expected {
            Some(e) => e.clone(),
            None if args.mock || args.seed.is_some() || args.no_combine || args.no_paraphrase => {
                return Err(CliError::Usage("overrides with --resume need --config to check against".into()))
            }
            None => stored,
        };
        engine::resume(dir, &Backends::from_config(&config), expected.as_ref(), options)?
    } else {
        let path = args.config.as_deref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
        let config = effective_config(read_config(path)?, args)?;
        if let (Some(dir), true) = (&args.out, args.force) {
            if dir.is_dir() {
                clear_run(dir)?;
            }
        }
        engine::run(&config, &Backends::from_config(&config), args.out.as_deref(), options)?
    };
    if let Some(e) = write_failure {
        return Err(e.into());
    }
    if let Some(best) = engine::balanced_best(&result.front) {
        let scores: Vec<String> = best.fitness.scores.iter().map(|s| format!("{s:.4}")).collect();
        writeln!(out, "front {} prompts; balanced best [{}]: {}", result.front.len(), scores.join(", "), best.prompt.text)?;
    }
    Ok(())
}

fn cmd_front(args: &FrontArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = store::read_final(&args.dir)?;
    let mut table = ExportTable::from_front(&report.front);
    let order = match (&args.objective, args.balanced) {
        (Some(name), _) => Order::Objective(name.clone()),
        (None, true) => Order::Balanced,
        (None, false) => Order::Rank,
    };
    table.sort(&order).map_err(CliError::Usage)?;
    let format = match args.format {
        FormatArg::Tsv => Format::Tsv,
        FormatArg::Csv => Format::Csv,
        FormatArg::Json => Format::Json,
    };
    table.write(format, out)?;
    Ok(())
}

fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let result = engine::load_result(&args.dir)?;
    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            for table in Table::ALL {
                let mut f = io::BufWriter::new(fs::File::create(dir.join(format!("{}.csv", table.name())))?);
                write_table(&result, table, &mut f)?;
                f.flush()?;
            }
        }
        None => {
            let table = Table::parse(&args.table).ok_or_else(|| {
                let names: Vec<&str> = Table::ALL.iter().map(|t| t.name()).collect();
                CliError::Usage(format!("unknown table {:?}; choose one of {}", args.table, names.join(", ")))
            })?;
            write_table(&result, table, out)?;
        }
    }
    Ok(())
}
