mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use senseloom::annotate::AnnotateError;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_IO: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(
    name = "senseloom",
    version,
    about = "Sense annotation and Word-in-Context dataset toolkit"
)]
pub struct Cli {
    /// Seed for every random choice; recorded in artifact metadata.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// key = value file overriding built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root directory holding annotation projects.
    #[arg(long, global = true, env = "SENSELOOM_DATA")]
    pub data: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Normalize a raw corpus into sentence JSONL with stable ids.
    Ingest(IngestArgs),
    /// Locate target-word occurrences and emit canonical sentence records.
    Occurrences(OccurrencesArgs),
    /// Draw a seeded random sample of sentence records per lemma.
    Sample(SampleArgs),
    /// Create an annotation project from lemma specs and sentence records.
    Init(InitArgs),
    /// Check an embedding file and its alignment with sentence records.
    ValidateEmbeddings(ValidateArgs),
    /// Cluster one lemma's embeddings.
    Cluster(ClusterArgs),
    /// Compute a 2D projection with cluster labels for one lemma.
    Project(ProjectArgs),
    /// Pick well-spread sentences from a projection for annotation.
    Suggest(SuggestArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
    /// Report sense priors, selection precision, lift and effort reduction.
    Lift(LiftArgs),
    /// Export human-confirmed annotations as gold sentence records.
    ExportGold(ExportArgs),
    /// Build or summarize Word-in-Context datasets.
    #[command(subcommand)]
    Wic(WicCommand),
    /// Corpus statistics per language from gold records.
    Stats(StatsArgs),
    /// Target markup, threshold tuning and test evaluation.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// `jsonl` ({"id"?, "text", "source"?} per line) or `lines`.
    #[arg(long, default_value = "lines")]
    pub format: String,
    /// Source name used in generated ids; defaults to the file stem.
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct OccurrencesArgs {
    /// Corpus in the ingest output format.
    #[arg(long)]
    pub corpus: PathBuf,
    /// JSONL of lemma specs: {"lemma", "forms", "lang", "gloss_hints"?}.
    #[arg(long)]
    pub lemmas: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub min_tokens: Option<usize>,
    #[arg(long)]
    pub max_tokens: Option<usize>,
    #[arg(long)]
    pub case_fold: bool,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Sentences per lemma.
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct InitArgs {
    #[arg(long)]
    pub project: String,
    #[arg(long)]
    pub lang: String,
    #[arg(long)]
    pub lemmas: PathBuf,
    #[arg(long)]
    pub sentences: PathBuf,
    /// JSON object mapping each lemma to its initial sense list.
    #[arg(long)]
    pub senses: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Sentence records to check alignment against.
    #[arg(long, conflicts_with = "project")]
    pub sentences: Option<PathBuf>,
    /// Check against a project's sentences instead.
    #[arg(long)]
    pub project: Option<String>,
    /// Copy the validated file into the project.
    #[arg(long, requires = "project")]
    pub install: bool,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub k: Option<usize>,
    /// `kmeans` or `agglomerative`.
    #[arg(long)]
    pub method: Option<String>,
    /// k-means restarts; the lowest-inertia run is kept.
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ProjectArgs {
    #[arg(long, required_unless_present = "project")]
    pub embeddings: Option<PathBuf>,
    /// `mds` or `pca`.
    #[arg(long)]
    pub method: Option<String>,
    /// Number of clusters; defaults to the lemma's sense count or 2.
    #[arg(long)]
    pub k: Option<usize>,
    /// `kmeans` or `agglomerative`.
    #[arg(long)]
    pub clustering: Option<String>,
    #[arg(long, required_unless_present = "project")]
    pub out: Option<PathBuf>,
    /// Recompute inside a project instead of reading and writing files.
    #[arg(long, requires = "lemma")]
    pub project: Option<String>,
    #[arg(long)]
    pub lemma: Option<String>,
}

#[derive(Args, Debug)]
pub struct SuggestArgs {
    #[arg(long)]
    pub projection: PathBuf,
    /// Number of sentences to pick.
    #[arg(short = 'm', long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub addr: Option<String>,
}

#[derive(Args, Debug)]
pub struct LiftArgs {
    /// JSONL of {"lemma"?, "sentence_id", "sense_id"} from a random sample.
    #[arg(long, requires = "selected")]
    pub prior_sample: Option<PathBuf>,
    /// JSONL of {"lemma"?, "sentence_id", "target_sense", "gold_sense"}.
    #[arg(long)]
    pub selected: Option<PathBuf>,
    /// Use only the first N selected sentences per sense.
    #[arg(long)]
    pub selection_size: Option<usize>,
    /// Sense inventory JSON (lemma to sense list) for the definition column.
    #[arg(long)]
    pub senses: Option<PathBuf>,
    /// Annotator seconds per reviewed sentence, for time estimates.
    #[arg(long)]
    pub seconds_per_sentence: Option<f64>,
    /// Direct mode: a prior given as a decimal, e.g. 0.04.
    #[arg(long, conflicts_with = "prior_sample", requires = "precision")]
    pub prior: Option<String>,
    /// Direct mode: a precision given as a decimal, e.g. 0.36.
    #[arg(long, requires = "prior")]
    pub precision: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub project: String,
    #[arg(long)]
    pub min_per_sense: Option<usize>,
    /// Only this annotator's labels count; otherwise the latest confirmed label wins.
    #[arg(long)]
    pub adjudicator: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum WicCommand {
    /// Split words and sentences, generate pairs, write train/dev/test files.
    Build(WicBuildArgs),
    /// Summarize a built dataset directory.
    Stats(WicStatsArgs),
}

#[derive(Args, Debug)]
pub struct WicBuildArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub max_per_sentence: Option<usize>,
}

#[derive(Args, Debug)]
pub struct WicStatsArgs {
    #[arg(long)]
    pub dir: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    pub gold: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Wrap target words of WiC pairs in <t> and </t>.
    Mark(MarkArgs),
    /// Tune the decision threshold on dev distances.
    Tune(TuneArgs),
    /// Tune on dev and report test accuracy.
    Test(TestArgs),
}

#[derive(Args, Debug)]
pub struct MarkArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[arg(long)]
    pub dev: PathBuf,
    /// Scored-pairs JSONL; may be repeated.
    #[arg(long, required = true)]
    pub scores: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    #[arg(long)]
    pub dev: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long, required = true)]
    pub scores: Vec<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// I/O failures exit 2; everything else that goes wrong is a validation failure.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_IO;
        }
        if let Some(AnnotateError::Io { .. }) = cause.downcast_ref::<AnnotateError>() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
