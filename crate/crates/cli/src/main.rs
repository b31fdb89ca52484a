//! `clinirc`: the dataset pipeline as subcommands.
//!
//! Every subcommand reads files, writes files, and leaves a run manifest
//! next to its main output. Usage errors exit with 2, data errors with 1.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use clinirc_core::knowledge::{Activation, Norm};

#[derive(Debug, Parser)]
#[command(name = "clinirc", version, about = "Clinical reading-comprehension dataset pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Instantiate question templates over annotated notes.
    Generate(GenerateArgs),
    /// Document-level train/dev/test split.
    Split(SplitArgs),
    /// Per-note seeded subsample of QA pairs.
    Sample(SampleArgs),
    /// Shorten every context to the section holding its answer.
    Segment(SegmentArgs),
    /// Rewrite questions with KB synonyms.
    Augment(AugmentArgs),
    /// Train TransE embeddings over a KB.
    KgeTrain(KgeTrainArgs),
    /// Initialize word/entity fusion parameters.
    Fuse(FuseArgs),
    /// Predict answer lines with the baseline reader.
    Read(ReadArgs),
    /// Score predictions with EM and F1.
    Evaluate(EvaluateArgs),
    /// Label templates Easy or Hard from per-question scores.
    Difficulty(DifficultyArgs),
    /// Corpus statistics.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// JSON array of `{note_id, text}`.
    #[arg(long)]
    pub notes: PathBuf,
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub annotations: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub max_answer_tokens: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Three comma-separated ratios summing to 1.
    #[arg(long, default_value = "0.7,0.1,0.2")]
    pub ratios: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub rate: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// One header phrase per line; the built-in list when omitted.
    #[arg(long)]
    pub header_lexicon: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub entities: PathBuf,
    #[arg(long)]
    pub triples: PathBuf,
    #[arg(long)]
    pub lexicon: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct KgeTrainArgs {
    #[arg(long)]
    pub entities: PathBuf,
    #[arg(long)]
    pub triples: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub margin: f64,
    #[arg(long, default_value_t = 0.01)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = Norm::L2)]
    pub norm: Norm,
    #[arg(long)]
    pub seed: u64,
    /// Embedding table TSV; the loss trace goes to `<stem>.loss.csv` beside it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FuseArgs {
    /// Entity table; fixes the entity dimension.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub word_dim: usize,
    #[arg(long, default_value_t = 128)]
    pub out_dim: usize,
    #[arg(long, default_value_t = Activation::Tanh)]
    pub activation: Activation,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReadArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Knowledge weight λ; 0 runs the purely lexical reader.
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    #[arg(long, requires_all = ["params", "lexicon"])]
    pub embeddings: Option<PathBuf>,
    #[arg(long, requires = "embeddings")]
    pub params: Option<PathBuf>,
    #[arg(long, requires = "embeddings")]
    pub lexicon: Option<PathBuf>,
    /// TSV `token<TAB>v1...`; tokens missing from it get seeded random vectors.
    #[arg(long, requires = "embeddings")]
    pub word_vectors: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DifficultyArgs {
    /// CSV `question_id,score`.
    #[arg(long)]
    pub scores: PathBuf,
    /// CSV `question_id,template_id`.
    #[arg(long, conflicts_with = "gold", required_unless_present = "gold")]
    pub templates: Option<PathBuf>,
    /// Dataset whose QA pairs carry template ids.
    #[arg(long)]
    pub gold: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Report path; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let shown = e.to_string();
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                if !shown.contains(&s.to_string()) {
                    eprintln!("  caused by: {s}");
                }
                source = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
