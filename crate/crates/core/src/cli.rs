//! The `tle` command line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::clustering::DEFAULT_SEED;
use crate::dataset::{Axis, DatasetError, LatentDataset};
use crate::io::{load_dataset, save_dataset, Layout, LoadOptions};
use crate::metrics::{evaluate_all, EvalConfig, TrajectoryMode};
use crate::report::{self, ComparisonTable, RenderOptions};
use crate::schema::{LabelSchema, SchemaError};
use crate::selftest::{self, Implementations};
use crate::synth::{self, SynthConfig, SynthError};

pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_SELFTEST: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "tle", version, about = "Evaluate the structure of labeled timbre latent spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute all eight metrics for one embedding set.
    Evaluate {
        input: PathBuf,
        #[command(flatten)]
        opts: EvalArgs,
    },
    /// Evaluate several embedding sets and mark the best value per metric.
    Compare {
        #[arg(required = true, num_args = 2..)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        opts: EvalArgs,
    },
    /// Generate a synthetic embedding set with controllable structure.
    Synth {
        /// JSON file with generator settings; omitted fields take defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        /// A `.csv` path writes one combined file, anything else a split directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the built-in correctness checks.
    Selftest,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Label schema JSON; the default taxonomy otherwise.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Embedding dimensionality, when the split layout has no meta.json.
    #[arg(long)]
    pub dims: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Purity clustering seed, decimal or 0x-prefixed hex.
    #[arg(long, env = "TLE_SEED", value_parser = parse_seed, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::PerPitch)]
    pub trajectory_mode: ModeArg,
    /// Appended to the best value of each table column.
    #[arg(long, default_value = "*")]
    pub marker: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    PerPitch,
    Pooled,
}

impl From<ModeArg> for TrajectoryMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::PerPitch => TrajectoryMode::PerPitch,
            ModeArg::Pooled => TrajectoryMode::Pooled,
        }
    }
}

pub fn parse_seed(s: &str) -> Result<u64, String> {
    let s = s.trim();
    let parsed = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    };
    parsed.map_err(|e| format!("invalid seed {s:?}: {e}"))
}

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: message.into() }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self { code: EXIT_VALIDATION, message: message.into() }
    }
}

impl From<DatasetError> for Failure {
    fn from(e: DatasetError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        Self { code, message: e.to_string() }
    }
}

impl From<SchemaError> for Failure {
    fn from(e: SchemaError) -> Self {
        let code = if matches!(e, SchemaError::Io { .. }) { EXIT_IO } else { EXIT_VALIDATION };
        Self { code, message: e.to_string() }
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        let code = if matches!(e, SynthError::Io { .. }) { EXIT_IO } else { EXIT_VALIDATION };
        Self { code, message: e.to_string() }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    match run(cli, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Evaluate { input, opts } => {
            let schema = load_schema(&opts)?;
            let ds = load(&input, &opts, schema)?;
            let report = evaluate_all(&ds, &eval_config(&opts));
            let bytes = match opts.format {
                Format::Json => report::report_to_json(&report),
                Format::Table => table(ComparisonTable::new(vec![report]), &opts)?,
            };
            emit(&bytes, opts.output.as_deref(), out)
        }
        Command::Compare { inputs, opts } => {
            let schema = load_schema(&opts)?;
            let datasets = inputs
                .iter()
                .map(|p| load(p, &opts, schema.clone()))
                .collect::<Result<Vec<_>, _>>()?;
            check_same_schema(&inputs, &datasets)?;
            let config = eval_config(&opts);
            let reports = datasets.iter().map(|ds| evaluate_all(ds, &config)).collect();
            let cmp = ComparisonTable::new(reports);
            let bytes = match opts.format {
                Format::Json => report::to_json(&cmp.map_err(|e| Failure::validation(e.to_string()))?),
                Format::Table => table(cmp, &opts)?,
            };
            emit(&bytes, opts.output.as_deref(), out)
        }
        Command::Synth { config, seed, out: path } => {
            let mut cfg = match &config {
                Some(p) => SynthConfig::from_json_file(p)?,
                None => SynthConfig::default(),
            };
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let ds = synth::generate(&cfg)?;
            let layout = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                Layout::CombinedCsv
            } else {
                Layout::Split
            };
            save_dataset(&ds, &path, layout)?;
            writeln!(out, "wrote {} samples × {} dims to {}", ds.len(), ds.dims(), path.display())
                .map_err(|e| Failure::io(format!("stdout: {e}")))
        }
        Command::Selftest => run_selftest(&Implementations::default(), out),
    }
}

/// Runs the checks against `imp`, printing one line per check. Fails with
/// exit code 3 when any check fails.
pub fn run_selftest(imp: &Implementations, out: &mut dyn Write) -> Result<(), Failure> {
    let results = selftest::run(imp);
    let mut text = String::new();
    for r in &results {
        if r.passed {
            text.push_str(&format!("ok    {}\n", r.name));
        } else {
            text.push_str(&format!("FAIL  {}: {}\n", r.name, r.detail));
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    text.push_str(&format!("{} checks, {} failed\n", results.len(), failed));
    out.write_all(text.as_bytes()).map_err(|e| Failure::io(format!("stdout: {e}")))?;
    if failed > 0 {
        return Err(Failure { code: EXIT_SELFTEST, message: format!("{failed} selftest check(s) failed") });
    }
    Ok(())
}

fn eval_config(opts: &EvalArgs) -> EvalConfig {
    EvalConfig { seed: opts.seed, trajectory_mode: opts.trajectory_mode.into() }
}

fn load_schema(opts: &EvalArgs) -> Result<Option<LabelSchema>, Failure> {
    Ok(match &opts.schema {
        Some(p) => Some(LabelSchema::from_json_file(p)?),
        None => None,
    })
}

fn load(path: &Path, opts: &EvalArgs, schema: Option<LabelSchema>) -> Result<LatentDataset, Failure> {
    if !path.exists() {
        return Err(Failure::io(format!("{}: no such file or directory", path.display())));
    }
    let load_opts = LoadOptions { schema, dims: opts.dims, model_name: None };
    Ok(load_dataset(path, Layout::detect(path), &load_opts)?)
}

/// Inputs are comparable when they share the schema, the dimensionality and
/// the set of labels actually present on every axis.
fn check_same_schema(paths: &[PathBuf], datasets: &[LatentDataset]) -> Result<(), Failure> {
    let signature = |ds: &LatentDataset| {
        let present = |axis| ds.counts(axis).iter().map(|&c| c > 0).collect::<Vec<_>>();
        (
            ds.dims(),
            present(Axis::Descriptor),
            present(Axis::Magnitude),
            present(Axis::Pitch),
        )
    };
    let first = signature(&datasets[0]);
    for (p, ds) in paths.iter().zip(datasets).skip(1) {
        if ds.schema() != datasets[0].schema() || signature(ds) != first {
            return Err(Failure::validation(format!(
                "schema mismatch: {} does not match {} (labels present or dimensionality differ)",
                p.display(),
                paths[0].display()
            )));
        }
    }
    Ok(())
}

fn table(cmp: Result<ComparisonTable, report::ReportError>, opts: &EvalArgs) -> Result<Vec<u8>, Failure> {
    let cmp = cmp.map_err(|e| Failure::validation(e.to_string()))?;
    let text = report::render_table(&cmp, &RenderOptions { marker: opts.marker.clone() })
        .map_err(|e| Failure::validation(e.to_string()))?;
    Ok(text.into_bytes())
}

fn emit(bytes: &[u8], path: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| Failure::io(format!("{}: {e}", p.display()))),
        None => out.write_all(bytes).map_err(|e| Failure::io(format!("stdout: {e}"))),
    }
}
