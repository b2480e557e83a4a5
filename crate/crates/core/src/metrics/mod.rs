//! Scoring extracted quadruples against references.
//!
//! Elements are compared under four modes ([`MatchMode`]). Tuples align
//! element-wise (positionally, or by the best permutation), candidate and
//! reference lists pair up by an optimal assignment, and
//! precision/recall are micro-averaged over a dataset. A paired sign-flip
//! permutation test compares two systems.

mod assign;
mod matching;
mod permutation;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::tkg::DatasetExample;

pub use assign::best_assignment;
pub use matching::{element_match, overlaps, tuple_score, Element, MatchMode, Position};
pub use permutation::permutation_test;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("duplicate example id {0}")]
    DuplicateId(String),
    #[error("example ids differ: missing candidates for [{}], unknown candidate ids [{}]", .missing.join(", "), .unexpected.join(", "))]
    IdMismatch { missing: Vec<String>, unexpected: Vec<String> },
    #[error("score vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("permutation test needs at least 2 paired scores, got {0}")]
    TooFewScores(usize),
    #[error("permutation test needs at least 1 resample")]
    NoResamples,
}

pub type Result<T, E = MetricsError> = std::result::Result<T, E>;

pub const QUADRUPLE_POSITIONS: [Position; 4] = [Position::Subject, Position::Relation, Position::Object, Position::Timestamp];

/// One example as lists of normalized tuples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoredExample {
    pub id: String,
    pub tuples: Vec<Vec<Element>>,
}

impl ScoredExample {
    pub fn quadruples<'a>(id: impl Into<String>, quads: impl IntoIterator<Item = [&'a str; 4]>) -> Self {
        Self {
            id: id.into(),
            tuples: quads
                .into_iter()
                .map(|q| q.iter().zip(QUADRUPLE_POSITIONS).map(|(t, p)| Element::new(t, p)).collect())
                .collect(),
        }
    }

    /// Reference form of a dataset example: labels, relation name and ISO date.
    pub fn from_dataset(example: &DatasetExample) -> Self {
        let quads: Vec<[String; 4]> = example
            .quadruples
            .iter()
            .map(|q| {
                [
                    q.subject_label.clone(),
                    q.relation.name(),
                    q.object_label.clone(),
                    q.timestamp.to_string(),
                ]
            })
            .collect();
        Self::quadruples(example.id.clone(), quads.iter().map(|q| [q[0].as_str(), &q[1], &q[2], &q[3]]))
    }
}

#[derive(Deserialize)]
struct CandidateQuadruple {
    subject: String,
    #[serde(default)]
    subject_label: Option<String>,
    relation: String,
    object: String,
    #[serde(default)]
    object_label: Option<String>,
    timestamp: String,
}

#[derive(Deserialize)]
struct CandidateLine {
    id: String,
    #[serde(default)]
    quadruples: Vec<CandidateQuadruple>,
}

/// Reads system output as JSON lines. Each line carries an `id` and a
/// list of quadruples; labels are preferred over ids when present, the
/// timestamp may be any string and the remaining fields are ignored.
pub fn read_candidates(path: &Path) -> Result<Vec<ScoredExample>> {
    let file = std::fs::File::open(path).map_err(|source| MetricsError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| MetricsError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: CandidateLine = serde_json::from_str(&line).map_err(|e| MetricsError::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        let quads: Vec<[String; 4]> = parsed
            .quadruples
            .into_iter()
            .map(|q| {
                [
                    q.subject_label.unwrap_or(q.subject),
                    q.relation,
                    q.object_label.unwrap_or(q.object),
                    q.timestamp,
                ]
            })
            .collect();
        out.push(ScoredExample::quadruples(
            parsed.id,
            quads.iter().map(|q| [q[0].as_str(), &q[1], &q[2], &q[3]]),
        ));
    }
    Ok(out)
}

/// Matched score mass and list sizes of one example in one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExampleScore {
    pub matched: f64,
    pub candidates: usize,
    pub references: usize,
}

fn ratio(matched: f64, n: usize, other: usize) -> f64 {
    match (n, other) {
        (0, 0) => 1.0,
        (0, _) => 0.0,
        _ => matched / n as f64,
    }
}

pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

impl ExampleScore {
    pub fn precision(&self) -> f64 {
        ratio(self.matched, self.candidates, self.references)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.matched, self.references, self.candidates)
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

/// Pairs candidates with references one-to-one so the summed tuple score
/// is maximal.
pub fn example_score(candidates: &[Vec<Element>], references: &[Vec<Element>], mode: MatchMode) -> ExampleScore {
    let table: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| {
            references
                .iter()
                .map(|r| if c.len() == r.len() { tuple_score(c, r, mode) } else { 0.0 })
                .collect()
        })
        .collect();
    ExampleScore {
        matched: best_assignment(&table),
        candidates: candidates.len(),
        references: references.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleReport {
    pub id: String,
    pub f1: BTreeMap<MatchMode, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub examples_scored: usize,
    pub modes: BTreeMap<MatchMode, Prf>,
    pub examples: Vec<ExampleReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_values: Option<BTreeMap<MatchMode, f64>>,
}

impl EvalReport {
    /// Per-example F1 in reference order.
    pub fn f1_vector(&self, mode: MatchMode) -> Vec<f64> {
        self.examples.iter().map(|e| e.f1.get(&mode).copied().unwrap_or(0.0)).collect()
    }

    /// Adds p-values of a paired permutation test of this report against
    /// `baseline` on per-example F1.
    pub fn attach_significance(&mut self, baseline: &EvalReport, resamples: usize, seed: u64) -> Result<()> {
        let mut p = BTreeMap::new();
        for &mode in self.modes.keys() {
            p.insert(mode, permutation_test(&self.f1_vector(mode), &baseline.f1_vector(mode), resamples, seed)?);
        }
        self.p_values = Some(p);
        Ok(())
    }
}

/// Micro-averaged P/R/F1 of `candidates` against `references` (matched by
/// id, reported in reference order).
pub fn evaluate(candidates: &[ScoredExample], references: &[ScoredExample], modes: &[MatchMode]) -> Result<EvalReport> {
    let mut by_id: HashMap<&str, &ScoredExample> = HashMap::new();
    for c in candidates {
        if by_id.insert(&c.id, c).is_some() {
            return Err(MetricsError::DuplicateId(c.id.clone()));
        }
    }
    let mut ref_ids = BTreeSet::new();
    for r in references {
        if !ref_ids.insert(r.id.as_str()) {
            return Err(MetricsError::DuplicateId(r.id.clone()));
        }
    }
    let missing: Vec<String> = references
        .iter()
        .filter(|r| !by_id.contains_key(r.id.as_str()))
        .map(|r| r.id.clone())
        .collect();
    let unexpected: Vec<String> = candidates
        .iter()
        .filter(|c| !ref_ids.contains(c.id.as_str()))
        .map(|c| c.id.clone())
        .collect();
    if !missing.is_empty() || !unexpected.is_empty() {
        return Err(MetricsError::IdMismatch { missing, unexpected });
    }
    let modes: Vec<MatchMode> = modes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();

    let per_example: Vec<Vec<ExampleScore>> = references
        .par_iter()
        .map(|r| {
            let c = by_id[r.id.as_str()];
            modes.iter().map(|&m| example_score(&c.tuples, &r.tuples, m)).collect()
        })
        .collect();

    let mut totals = BTreeMap::new();
    for (k, &mode) in modes.iter().enumerate() {
        let (mut matched, mut nc, mut nr) = (0.0, 0, 0);
        for scores in &per_example {
            matched += scores[k].matched;
            nc += scores[k].candidates;
            nr += scores[k].references;
        }
        let precision = ratio(matched, nc, nr);
        let recall = ratio(matched, nr, nc);
        totals.insert(
            mode,
            Prf {
                precision,
                recall,
                f1: f1(precision, recall),
            },
        );
    }
    let examples = references
        .iter()
        .zip(&per_example)
        .map(|(r, scores)| ExampleReport {
            id: r.id.clone(),
            f1: modes.iter().zip(scores).map(|(&m, s)| (m, s.f1())).collect(),
        })
        .collect();
    Ok(EvalReport {
        examples_scored: references.len(),
        modes: totals,
        examples,
        p_values: None,
    })
}
