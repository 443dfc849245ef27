//! The `segalign` command line: corpus generation, training, analysis, the
//! extraction pipeline and the one-shot `report`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration or usage
//! error. Every seed of a run comes from `--seed` (or `SEGALIGN_SEED`,
//! then 0); seeds inside a config file are overwritten.

mod artifacts;
mod commands;
mod config;
pub mod workflow;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use artifacts::{sha256_file, FileDigest, Manifest, RunDir, MANIFEST, RESOLVED_CONFIG};
pub use commands::{read_snapshots, CORPUS_FILE, TEST_IDS, TRAIN_IDS};
pub use config::{AnalysisSection, ModelSection, PathsSection, RunConfig, TrainSection};

use crate::error::Error;
use crate::pipeline::BodyPart;

#[derive(Debug, Parser)]
#[command(name = "segalign", version, about = "Multi-task vs single-task alignment workbench for spine report extraction")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, env = "SEGALIGN_SEED")]
    pub seed: Option<u64>,
    /// Run configuration (JSON); missing fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overwrite an existing output directory.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic annotated corpus and its train/test split.
    Generate(GenerateArgs),
    /// Train single-task, multi-task or segmenter models over several trials.
    Train(TrainArgs),
    /// Compare two trained models.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Run the extraction pipeline over reports.
    Pipeline(PipelineArgs),
    /// Regenerate every table and plot series from one seed.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub body_part: Option<BodyPart>,
    /// Number of reports.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus directory written by `generate`, or a JSONL corpus to split.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// `single:<task>`, `multi` or `tagger`.
    #[arg(long)]
    pub mode: String,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trials run in parallel, one worker process each.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Run only this trial into an existing output directory.
    #[arg(long, hide = true)]
    pub trial: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Layerwise CKA between two checkpoints on a probe set.
    Cka(CkaArgs),
    /// Gradient alignment between two training runs, epoch by epoch.
    Grads(GradsArgs),
}

#[derive(Debug, Args)]
pub struct CkaArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    /// Corpus directory (its test split is used) or JSONL corpus.
    #[arg(long)]
    pub probe: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradsArgs {
    /// Trial directory (or its `grads/` directory) of the first run.
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Segmenter checkpoint.
    #[arg(long)]
    pub tagger: PathBuf,
    /// Severity checkpoint (usually multi-task).
    #[arg(long)]
    pub classifier: PathBuf,
    /// Corpus directory, JSONL corpus, or a plain-text report.
    #[arg(long)]
    pub input: PathBuf,
    /// Single-task checkpoints to time against the classifier.
    #[arg(long)]
    pub stl: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Jsonl)]
    pub format: OutputFormat,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// 2 for configuration and usage errors, 1 for everything else.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (program name first) and runs the command; returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
