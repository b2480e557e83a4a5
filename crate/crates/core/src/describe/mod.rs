//! Verbalizing facts into benchmark texts.
//!
//! Each input group (one fact, or a cluster of 2-4) gets a timestamp style
//! and, with some probability, a headline with a fictional publication
//! date. A prompt is built from the fixed templates and sent to a
//! [`TextBackend`]; the result becomes a [`DatasetExample`].

mod backend;
mod coverage;
mod prompt;
mod style;

use std::collections::HashMap;
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::rng_for;
use crate::tkg::{DatasetExample, DayStamp, EntityId, ExampleMetadata, ExampleQuadruple, Quadruple};

pub use backend::{relation_phrase, BackendError, HttpBackend, HttpConfig, Request, TemplateBackend, TextBackend};
pub use coverage::{coverage_check, tokens, CoverageFlag, CoverageReport, Field};
pub use prompt::{build_prompt, PromptSpec, RelationDefinitions, Setup};
pub use style::{ordinal_suffix, parse_date, TimestampStyle};

#[derive(Debug, thiserror::Error)]
pub enum DescribeError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("relation definitions: {0}")]
    Definitions(String),
    #[error("no definition for relation {0}")]
    MissingDefinition(String),
    #[error("{setup:?} setup cannot describe {count} facts")]
    Shape { setup: Setup, count: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
}

pub type Result<T, E = DescribeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescribeConfig {
    pub setup: Setup,
    pub styles: Vec<TimestampStyle>,
    pub headline_prob: f64,
    /// Headline dates fall within this many days of the earliest fact.
    pub headline_window: i64,
    pub seed: u64,
    /// Concurrent backend requests.
    pub parallelism: usize,
    /// Extra attempts per example after a backend failure.
    pub retries: u32,
}

impl Default for DescribeConfig {
    fn default() -> Self {
        Self {
            setup: Setup::Single,
            styles: TimestampStyle::ALL.to_vec(),
            headline_prob: 0.25,
            headline_window: 30,
            seed: 0,
            parallelism: 4,
            retries: 2,
        }
    }
}

impl DescribeConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DescribeError::Config(m));
        if self.styles.is_empty() {
            return bad("at least one timestamp style is required".into());
        }
        if !(0.0..=1.0).contains(&self.headline_prob) {
            return bad(format!("headline probability {} outside [0, 1]", self.headline_prob));
        }
        if self.headline_window < 0 {
            return bad("headline window must be non-negative".into());
        }
        if self.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        Ok(())
    }
}

/// Draws a timestamp style (uniform) and whether to add a headline.
pub fn sample_style(rng: &mut ChaCha8Rng, styles: &[TimestampStyle], headline_prob: f64) -> (TimestampStyle, bool) {
    let style = styles[rng.random_range(0..styles.len())];
    (style, rng.random_bool(headline_prob))
}

/// Attaches labels, falling back to the ids.
pub fn label_quadruples(quads: &[Quadruple], labels: &HashMap<EntityId, String>) -> Vec<ExampleQuadruple> {
    quads
        .iter()
        .map(|q| {
            let s = labels.get(&q.subject).cloned().unwrap_or_else(|| q.subject.to_string());
            let o = labels.get(&q.object).cloned().unwrap_or_else(|| q.object.to_string());
            ExampleQuadruple::new(q.clone(), s, o)
        })
        .collect()
}

/// An input group that produced no example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Skipped {
    pub index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DescribeOutput {
    pub examples: Vec<DatasetExample>,
    pub skipped: Vec<Skipped>,
}

/// Prompt spec for input `index`, drawn from its own seeded stream.
pub fn plan(index: usize, quadruples: Vec<ExampleQuadruple>, config: &DescribeConfig) -> PromptSpec {
    let mut rng = rng_for(config.seed, &["describe", &index.to_string()]);
    let (style, headline) = sample_style(&mut rng, &config.styles, config.headline_prob);
    let headline = headline.then(|| {
        let earliest: DayStamp = quadruples.iter().map(|q| q.timestamp).min().expect("non-empty group");
        let w = config.headline_window;
        earliest.add_days(rng.random_range(-w..=w)).unwrap_or(earliest)
    });
    PromptSpec {
        setup: config.setup,
        quadruples,
        style,
        headline,
    }
}

/// Describes each group, keeping input order. Groups of the wrong size for
/// the setup, and groups the backend fails on after all retries, are
/// reported as skipped.
pub fn describe(
    groups: &[Vec<ExampleQuadruple>],
    definitions: &RelationDefinitions,
    backend: &dyn TextBackend,
    config: &DescribeConfig,
) -> Result<DescribeOutput> {
    config.validate()?;
    definitions.check(groups.iter().flatten().map(|q| &q.relation))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| DescribeError::Config(e.to_string()))?;

    let results: Vec<std::result::Result<DatasetExample, Skipped>> = pool.install(|| {
        groups
            .par_iter()
            .enumerate()
            .map(|(index, group)| describe_one(index, group, definitions, backend, config))
            .collect()
    });

    let mut out = DescribeOutput::default();
    for r in results {
        match r {
            Ok(ex) => out.examples.push(ex),
            Err(s) => out.skipped.push(s),
        }
    }
    Ok(out)
}

fn describe_one(
    index: usize,
    group: &[ExampleQuadruple],
    definitions: &RelationDefinitions,
    backend: &dyn TextBackend,
    config: &DescribeConfig,
) -> std::result::Result<DatasetExample, Skipped> {
    let skip = |reason: String| Skipped { index, reason };
    if !config.setup.admits(group.len()) {
        return Err(skip(
            DescribeError::Shape {
                setup: config.setup,
                count: group.len(),
            }
            .to_string(),
        ));
    }
    let spec = plan(index, group.to_vec(), config);
    let prompt = build_prompt(&spec, definitions).map_err(|e| skip(e.to_string()))?;
    let request = Request {
        prompt: &prompt,
        spec: &spec,
    };
    let mut last = None;
    for attempt in 0..=config.retries {
        match backend.generate(&request) {
            Ok(text) => {
                return Ok(DatasetExample {
                    id: format!("{}-{index:06}", setup_name(config.setup)),
                    quadruples: spec.quadruples.clone(),
                    text,
                    metadata: ExampleMetadata {
                        timestamp_style: spec.style.name().to_owned(),
                        headline: spec.headline.is_some(),
                        headline_date: spec.headline,
                        backend: Some(backend.name().to_owned()),
                        model: backend.model().map(str::to_owned),
                    },
                })
            }
            Err(e) => {
                log::warn!("example {index}, attempt {}: {e}", attempt + 1);
                last = Some(e);
            }
        }
    }
    Err(skip(format!(
        "backend failed after {} attempts: {}",
        config.retries + 1,
        last.expect("at least one attempt")
    )))
}

fn setup_name(setup: Setup) -> &'static str {
    match setup {
        Setup::Single => "single",
        Setup::Multi => "multi",
    }
}
