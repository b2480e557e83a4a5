//! TOML pipeline configuration. Every section is optional; command-line
//! flags override whatever a section sets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tkgforge::cluster::ClusterConfig;
use tkgforge::describe::{Setup, TimestampStyle};
use tkgforge::generator::Coherency;
use tkgforge::metrics::MatchMode;
use tkgforge::rules::{ApplyConfig, Ordering, Transition};
use tkgforge::DayStamp;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub run_dir: Option<PathBuf>,
    pub paths: Paths,
    pub ingest: IngestSettings,
    pub mine: MineSettings,
    pub apply: ApplyConfig,
    pub eval_forecast: EvalForecastSettings,
    pub forecast: ForecastSettings,
    pub cluster: ClusterConfig,
    pub describe: DescribeSettings,
    pub evaluate: EvaluateSettings,
}

/// Shared input files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub intervals: Option<PathBuf>,
    pub facts: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub definitions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSettings {
    pub exclude: Vec<String>,
    /// Relations kept as single point facts instead of start/end pairs.
    pub point_relations: Vec<String>,
    pub prune: bool,
}

impl Default for IngestSettings {
    fn default() -> Self {
        Self {
            exclude: vec!["affiliation".into(), "alumniOf".into()],
            point_relations: Vec::new(),
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MineSettings {
    pub lengths: Vec<usize>,
    pub walks: usize,
    pub transition: Transition,
    pub lambda: f64,
    pub ordering: Ordering,
}

impl Default for MineSettings {
    fn default() -> Self {
        Self {
            lengths: vec![1, 2, 3],
            walks: 200,
            transition: Transition::Exponential,
            lambda: 0.01,
            ordering: Ordering::NonStrict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalForecastSettings {
    pub test_frac: f64,
    pub k: usize,
}

impl Default for EvalForecastSettings {
    fn default() -> Self {
        Self { test_frac: 0.02, k: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForecastSettings {
    pub from: Option<DayStamp>,
    pub to: Option<DayStamp>,
    pub weights_year: Option<i32>,
    pub k: usize,
    pub max_per_day: usize,
    pub retries: u32,
    pub coherency: Coherency,
}

impl Default for ForecastSettings {
    fn default() -> Self {
        Self {
            from: None,
            to: None,
            weights_year: None,
            k: 4,
            max_per_day: 128,
            retries: 16,
            coherency: Coherency::Subject,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    #[default]
    Template,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescribeSettings {
    pub setup: Setup,
    pub backend: BackendKind,
    pub headline_prob: f64,
    pub headline_window: i64,
    pub styles: Vec<TimestampStyle>,
    pub parallelism: usize,
    pub retries: u32,
    pub timeout_secs: u64,
    pub temperature: Option<f64>,
}

impl Default for DescribeSettings {
    fn default() -> Self {
        Self {
            setup: Setup::Single,
            backend: BackendKind::Template,
            headline_prob: 0.25,
            headline_window: 30,
            styles: TimestampStyle::ALL.to_vec(),
            parallelism: 4,
            retries: 2,
            timeout_secs: 60,
            temperature: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateSettings {
    pub modes: Vec<MatchMode>,
    pub permutation_test: Option<usize>,
}

impl Default for EvaluateSettings {
    fn default() -> Self {
        Self {
            modes: MatchMode::ALL.to_vec(),
            permutation_test: None,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}
