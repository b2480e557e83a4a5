//! Temporal rule learning and rule-based forecasting.
//!
//! A rule of length `l` has the cyclic form
//!
//! ```text
//! (E1, head, E{l+1}, T{l+1}) <- (E1, b1, E2, T1) ∧ (E2, b2, E3, T2) ∧ … ∧ (El, bl, E{l+1}, Tl)
//! ```
//!
//! with `T1 <= T2 <= … <= Tl <= T{l+1}` (all strict with
//! [`Ordering::Strict`]). A body atom may be inverted, meaning the graph fact
//! runs `E{i+1} -> Ei`. Rules are mined from temporal random walks that
//! run backwards in time from a head edge's object to its subject, then
//! scored by exhaustively enumerating their body groundings.

mod apply;
mod eval;
mod grounding;
mod mine;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::tkg::Relation;

pub use apply::{apply_rules, Aggregation, ApplyConfig, Candidate, QueryAnswer};
pub use eval::{evaluate_forecasting, split_chronological, ForecastMetrics};
pub use mine::{mine_rules, Transition, WalkConfig};

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("rule {index}: {message}")]
    InvalidRule { index: usize, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("test split is empty")]
    EmptyTestSplit,
}

pub type Result<T, E = RuleError> = std::result::Result<T, E>;

/// Temporal ordering between consecutive rule atoms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    /// `T1 <= T2 <= … <= T{l+1}`
    #[default]
    NonStrict,
    /// `T1 < T2 < … < T{l+1}`
    Strict,
}

impl Ordering {
    /// Smallest admissible timestamp for an atom following one at `t`.
    pub(crate) fn next_min(self, t: i32) -> i32 {
        match self {
            Ordering::NonStrict => t,
            Ordering::Strict => t.saturating_add(1),
        }
    }

    /// Largest admissible timestamp for an atom preceding one at `t`.
    pub(crate) fn prev_max(self, t: i32) -> i32 {
        match self {
            Ordering::NonStrict => t,
            Ordering::Strict => t.saturating_sub(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BodyAtom {
    pub relation: Relation,
    pub inverted: bool,
}

impl BodyAtom {
    pub fn new(relation: Relation, inverted: bool) -> Self {
        Self { relation, inverted }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalRule {
    pub head: Relation,
    pub body: Vec<BodyAtom>,
    pub confidence: f64,
    pub rule_support: u64,
    pub body_support: u64,
}

impl TemporalRule {
    pub fn len(&self) -> usize {
        self.body.len()
    }

    pub fn is_empty(&self) -> bool {
        self.body.is_empty()
    }

    fn validate(&self, index: usize) -> Result<()> {
        let fail = |message: String| Err(RuleError::InvalidRule { index, message });
        if !(1..=3).contains(&self.body.len()) {
            return fail(format!("body length {} outside 1..=3", self.body.len()));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return fail(format!("confidence {} outside [0, 1]", self.confidence));
        }
        if self.rule_support > self.body_support {
            return fail(format!(
                "rule support {} exceeds body support {}",
                self.rule_support, self.body_support
            ));
        }
        Ok(())
    }
}

impl fmt::Display for TemporalRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = self.body.len();
        write!(f, "{:.4}  ({}, X0, X{l}) <-", self.confidence, self.head)?;
        for (i, atom) in self.body.iter().enumerate() {
            let (a, b) = if atom.inverted { (i + 1, i) } else { (i, i + 1) };
            let sep = if i == 0 { " " } else { " & " };
            write!(f, "{sep}({}, X{a}, X{b})", atom.relation)?;
        }
        Ok(())
    }
}

fn rule_order(a: &TemporalRule, b: &TemporalRule) -> std::cmp::Ordering {
    a.head
        .cmp(&b.head)
        .then(b.confidence.total_cmp(&a.confidence))
        .then_with(|| a.body.cmp(&b.body))
}

/// Rules indexed by head relation, each list sorted by confidence.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<TemporalRule>,
    by_head: HashMap<Relation, Vec<usize>>,
}

impl RuleSet {
    pub fn new(mut rules: Vec<TemporalRule>) -> Self {
        rules.sort_by(rule_order);
        let mut by_head: HashMap<Relation, Vec<usize>> = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            by_head.entry(r.head.clone()).or_default().push(i);
        }
        Self { rules, by_head }
    }

    pub fn rules(&self) -> &[TemporalRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: usize) -> Option<&TemporalRule> {
        self.rules.get(id)
    }

    /// Rule ids for a head relation, highest confidence first.
    pub fn for_head(&self, head: &Relation) -> &[usize] {
        self.by_head.get(head).map_or(&[], Vec::as_slice)
    }

    pub fn heads(&self) -> BTreeSet<&Relation> {
        self.by_head.keys().collect()
    }
}

/// Writes rules as a JSON array sorted by (head, confidence descending).
pub fn save_rules(path: &Path, rules: &[TemporalRule]) -> Result<()> {
    let mut sorted = rules.to_vec();
    sorted.sort_by(rule_order);
    let text = serde_json::to_string_pretty(&sorted).map_err(|source| RuleError::Json {
        path: path.to_owned(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| RuleError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn load_rules(path: &Path) -> Result<Vec<TemporalRule>> {
    let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
        path: path.to_owned(),
        source,
    })?;
    parse_rules(&text).map_err(|e| match e {
        RuleError::Json { source, .. } => RuleError::Json {
            path: path.to_owned(),
            source,
        },
        other => other,
    })
}

pub fn parse_rules(text: &str) -> Result<Vec<TemporalRule>> {
    let rules: Vec<TemporalRule> = serde_json::from_str(text).map_err(|source| RuleError::Json {
        path: PathBuf::new(),
        source,
    })?;
    for (i, r) in rules.iter().enumerate() {
        r.validate(i)?;
    }
    Ok(rules)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(head: &str, conf: f64) -> TemporalRule {
        TemporalRule {
            head: Relation::parse(head),
            body: vec![BodyAtom::new(Relation::parse("r"), true)],
            confidence: conf,
            rule_support: 1,
            body_support: 2,
        }
    }

    #[test]
    fn empty_rules_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        save_rules(&path, &[]).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap().trim(), "[]");
        assert!(load_rules(&path).unwrap().is_empty());
    }

    #[test]
    fn file_is_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        save_rules(&path, &[rule("b", 0.2), rule("a", 0.1), rule("b", 0.5)]).unwrap();
        let back = load_rules(&path).unwrap();
        let keys: Vec<(String, f64)> = back.iter().map(|r| (r.head.name(), r.confidence)).collect();
        assert_eq!(keys, [("a".into(), 0.1), ("b".into(), 0.5), ("b".into(), 0.2)]);
    }

    #[test]
    fn wire_format() {
        let v = serde_json::to_value(rule("startMemberOf", 0.5)).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"head": "startMemberOf", "body": [{"relation": "r", "inverted": true}],
                               "confidence": 0.5, "rule_support": 1, "body_support": 2})
        );
    }

    #[test]
    fn validation() {
        let bad = r#"[{"head": "r", "body": [{"relation": "r", "inverted": false}], "confidence": 1.5, "rule_support": 1, "body_support": 1}]"#;
        assert!(matches!(parse_rules(bad), Err(RuleError::InvalidRule { index: 0, .. })));
        let empty_body = r#"[{"head": "r", "body": [], "confidence": 0.5, "rule_support": 1, "body_support": 2}]"#;
        assert!(matches!(parse_rules(empty_body), Err(RuleError::InvalidRule { .. })));
        assert!(matches!(parse_rules("[{"), Err(RuleError::Json { .. })));
    }

    #[test]
    fn display() {
        let r = TemporalRule {
            head: Relation::parse("endLeader"),
            body: vec![
                BodyAtom::new(Relation::parse("endLeader"), false),
                BodyAtom::new(Relation::parse("endWorksFor"), true),
            ],
            confidence: 0.25,
            rule_support: 1,
            body_support: 4,
        };
        assert_eq!(r.to_string(), "0.2500  (endLeader, X0, X2) <- (endLeader, X0, X1) & (endWorksFor, X2, X1)");
    }
}
