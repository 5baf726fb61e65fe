mod commands;
mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

pub const EXIT_VALIDATION: u8 = 1;
pub const EXIT_RUNTIME: u8 = 2;
pub const EXIT_USAGE: u8 = 64;

/// Command failure, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input data or settings.
    Validation(anyhow::Error),
    /// I/O and other environment failures.
    Runtime(anyhow::Error),
}

pub fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure::Validation(anyhow::anyhow!("{e}"))
}

pub fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(anyhow::anyhow!("{e}"))
}

#[derive(Parser, Debug)]
#[command(name = "conceptforge", version, about = "Ontology enrichment, keyword suggestion and evaluation")]
struct Cli {
    /// Settings file: a JSON object or `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a corpus and write it back canonically.
    Ingest(IngestArgs),
    /// Map concepts to encyclopedia entries and build neighborhoods.
    Enrich(EnrichArgs),
    /// Suggest keywords by concept recognition and expansion.
    Annotate(AnnotateArgs),
    /// Train a classifier on a split and report held-out scores.
    Train(TrainArgs),
    /// Suggest keywords with a trained classifier.
    Classify(ClassifyArgs),
    /// Merge classifier and ontology suggestions.
    Combine(CombineArgs),
    /// Score suggestions against gold labels, judgments or experts.
    Evaluate(EvaluateArgs),
    /// Label histogram of a corpus.
    Stats(StatsArgs),
    /// Run the review service.
    Serve(ServeArgs),
}

/// Flags that override config-file settings.
#[derive(Args, Debug, Default, Clone)]
#[command(next_help_heading = "Settings")]
pub struct Tunables {
    #[arg(long, value_parser = ["tfidf", "llda"])]
    features: Option<String>,
    #[arg(long, value_parser = ["classes", "concepts"])]
    kind: Option<String>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    depth: Option<u32>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    top_n: Option<usize>,
    #[arg(long)]
    min_score: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    split: Option<f64>,
    /// Neighborhood radius.
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    min_jaccard: Option<f64>,
    #[arg(long)]
    min_year: Option<i32>,
    #[arg(long)]
    port: Option<u16>,
}

impl Tunables {
    fn overrides(&self) -> BTreeMap<&'static str, Value> {
        let mut m = BTreeMap::new();
        let mut put = |k: &'static str, v: Option<Value>| {
            if let Some(v) = v {
                m.insert(k, v);
            }
        };
        put("features", self.features.clone().map(Value::from));
        put("kind", self.kind.clone().map(Value::from));
        put("level", self.level.map(Value::from));
        put("depth", self.depth.map(Value::from));
        put("decay", self.decay.map(Value::from));
        put("tau", self.tau.map(Value::from));
        put("top_n", self.top_n.map(Value::from));
        put("min_score", self.min_score.map(Value::from));
        put("seed", self.seed.map(Value::from));
        put("split", self.split.map(Value::from));
        put("k", self.k.map(Value::from));
        put("min_jaccard", self.min_jaccard.map(Value::from));
        put("min_year", self.min_year.map(Value::from));
        put("port", self.port.map(Value::from));
        m
    }
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Cross-checks gold labels when given.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct EnrichArgs {
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long)]
    pub encyclopedia: PathBuf,
    /// Manual mapping table, `concept_id<TAB>entry_id` per row.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

/// Where the concept graph comes from.
#[derive(Args, Debug)]
pub struct GraphArgs {
    /// Enriched ontology written by `enrich`.
    #[arg(long, conflicts_with_all = ["ontology", "encyclopedia"])]
    pub enriched: Option<PathBuf>,
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Enriches `--ontology` on the fly.
    #[arg(long, requires = "ontology")]
    pub encyclopedia: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnnotateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    /// Needed for class labels projected to a level.
    #[arg(long)]
    pub ontology: Option<PathBuf>,
    /// Trained model bundle.
    #[arg(long)]
    pub out: PathBuf,
    /// Train on every document instead of the split.
    #[arg(long)]
    pub full: bool,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct CombineArgs {
    /// Classifier keyword sets.
    #[arg(long)]
    pub ml: PathBuf,
    /// Ontology-based keyword sets.
    #[arg(long)]
    pub onto: PathBuf,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Keyword sets to score.
    #[arg(long)]
    pub predicted: PathBuf,
    /// Gold labels (with `--kind` and `--level`).
    #[arg(long, required_unless_present_any = ["judgments", "experts"])]
    pub corpus: Option<PathBuf>,
    /// Judgment log from the review service.
    #[arg(long, conflicts_with_all = ["corpus", "experts"])]
    pub judgments: Option<PathBuf>,
    /// Expert keyword sets, one file per expert (two or more).
    #[arg(long, num_args = 1.., conflicts_with = "corpus")]
    pub experts: Vec<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tune: Tunables,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long)]
    pub ontology: PathBuf,
    #[arg(long)]
    pub corpus: PathBuf,
    /// Keyword sets to review.
    #[arg(long)]
    pub suggestions: PathBuf,
    /// Append-only judgment log, created when absent.
    #[arg(long, default_value = "judgments.jsonl")]
    pub log: PathBuf,
    /// Built UI bundle served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[command(flatten)]
    pub tune: Tunables,
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
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli.command, cli.config.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
