use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use tkgforge::DayStamp;

/// Parses a snake_case enum value through its serde representation.
fn enum_arg<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn day_arg(s: &str) -> Result<DayStamp, String> {
    s.parse().map_err(|e: tkgforge::tkg::TkgError| e.to_string())
}

/// Builds temporal knowledge extraction benchmarks from a temporal
/// knowledge graph and scores extraction systems on them.
#[derive(Debug, Parser)]
#[command(name = "tkgforge", version)]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed for every randomized stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    /// Directory receiving outputs and the run manifest (default `run`).
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Linearize interval facts, filter relations and prune rare entities.
    Ingest(IngestArgs),
    /// Mine temporal rules from a facts TSV.
    Mine(MineArgs),
    /// Mine on a chronological train split and report Hits@k and MRR.
    EvalForecast(EvalForecastArgs),
    /// Generate future facts day by day.
    Forecast(ForecastArgs),
    /// Group facts into small clusters of related facts.
    Cluster(ClusterArgs),
    /// Turn facts or clusters into text/fact examples.
    Describe(DescribeArgs),
    /// Score candidate extractions against reference examples.
    Evaluate(EvaluateArgs),
    /// Move fact timestamps of a dataset or facts file to another year.
    Retime(RetimeArgs),
    /// Resample two datasets to matching per-relation counts.
    Resample(ResampleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Mine(_) => "mine",
            Command::EvalForecast(_) => "eval-forecast",
            Command::Forecast(_) => "forecast",
            Command::Cluster(_) => "cluster",
            Command::Describe(_) => "describe",
            Command::Evaluate(_) => "evaluate",
            Command::Retime(_) => "retime",
            Command::Resample(_) => "resample",
        }
    }
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Interval facts TSV: subject, relation, object, start[, end].
    #[arg(long)]
    pub intervals: Option<PathBuf>,
    /// Comma-separated base relations to drop.
    #[arg(long, value_delimiter = ',')]
    pub exclude: Option<Vec<String>>,
    /// Comma-separated relations kept as single point facts.
    #[arg(long, value_delimiter = ',')]
    pub point_relations: Option<Vec<String>>,
    /// Skip pruning of entities with fewer than two facts.
    #[arg(long)]
    pub no_prune: bool,
    #[arg(long, default_value = "facts.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    #[arg(long)]
    pub facts: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub lengths: Option<Vec<usize>>,
    #[arg(long)]
    pub walks: Option<usize>,
    /// `uniform` or `exp`.
    #[arg(long, value_parser = enum_arg::<tkgforge::rules::Transition>)]
    pub transition: Option<tkgforge::rules::Transition>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// `non_strict` or `strict` timestamp ordering between atoms.
    #[arg(long, value_parser = enum_arg::<tkgforge::rules::Ordering>)]
    pub ordering: Option<tkgforge::rules::Ordering>,
    #[arg(long, default_value = "rules.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalForecastArgs {
    #[arg(long)]
    pub facts: Option<PathBuf>,
    /// Evaluate these rules instead of mining on the train split.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub test_frac: Option<f64>,
    /// Lookback window in days.
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value = "forecast_eval.json")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    #[arg(long)]
    pub facts: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, value_parser = day_arg)]
    pub from: Option<DayStamp>,
    #[arg(long, value_parser = day_arg)]
    pub to: Option<DayStamp>,
    /// Year whose relation mix and daily counts are reproduced (default:
    /// the latest year in the graph).
    #[arg(long)]
    pub weights_year: Option<i32>,
    /// Subjects sampled per attempt.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub max_per_day: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
    /// `subject` or `object`.
    #[arg(long, value_parser = enum_arg::<tkgforge::generator::Coherency>)]
    pub coherency: Option<tkgforge::generator::Coherency>,
    /// Lookback window in days.
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long, default_value = "forecast.tsv")]
    pub out: PathBuf,
    /// Diagnostics sidecar (default: `<out>` with a `.diagnostics.json` suffix).
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub facts: Option<PathBuf>,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub min: Option<usize>,
    #[arg(long)]
    pub max: Option<usize>,
    /// `average` or `complete`.
    #[arg(long, value_parser = enum_arg::<tkgforge::cluster::Linkage>)]
    pub linkage: Option<tkgforge::cluster::Linkage>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "clusters.json")]
    pub out: PathBuf,
    /// Also write the full distance matrix as CSV.
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    /// `clusters.json` from `cluster`, or a facts TSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// JSON map from relation to a definition sentence.
    #[arg(long)]
    pub definitions: Option<PathBuf>,
    /// `single` or `multi`.
    #[arg(long, value_parser = enum_arg::<tkgforge::describe::Setup>)]
    pub setup: Option<tkgforge::describe::Setup>,
    /// `template` or `http`.
    #[arg(long, value_parser = enum_arg::<crate::config::BackendKind>)]
    pub backend: Option<crate::config::BackendKind>,
    #[arg(long)]
    pub headline_prob: Option<f64>,
    /// Comma-separated subset of iso, long, day_long, short.
    #[arg(long, value_parser = enum_arg::<tkgforge::describe::TimestampStyle>, value_delimiter = ',')]
    pub styles: Option<Vec<tkgforge::describe::TimestampStyle>>,
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[arg(long)]
    pub retries: Option<u32>,
    #[arg(long, default_value = "dataset.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// System output JSONL.
    #[arg(long)]
    pub candidates: PathBuf,
    /// Reference dataset JSONL.
    #[arg(long)]
    pub references: PathBuf,
    /// Second system output; enables the paired permutation test.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Comma-separated subset of strict, exact, type, partial.
    #[arg(long, value_parser = enum_arg::<tkgforge::metrics::MatchMode>, value_delimiter = ',')]
    pub modes: Option<Vec<tkgforge::metrics::MatchMode>>,
    /// Resamples of the permutation test against `--baseline`.
    #[arg(long)]
    pub permutation_test: Option<usize>,
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct RetimeArgs {
    /// Dataset JSONL (`.jsonl`) or facts TSV (anything else).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub year: i32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ResampleArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "resampled_a.jsonl")]
    pub out_a: PathBuf,
    #[arg(long, default_value = "resampled_b.jsonl")]
    pub out_b: PathBuf,
}
