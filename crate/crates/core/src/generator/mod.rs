//! Day-by-day generation of future facts.
//!
//! Each fact is produced by drawing a relation from the reference-year
//! distribution, sampling `k` subjects that may hold it (schema domain and
//! start/end coherency), forecasting objects for them with the mined rules
//! and keeping the best schema-valid, coherent and new candidate. Generated
//! facts join the working graph before the next one is drawn.

mod ledger;

use std::collections::{BTreeMap, HashMap};

use chrono::Datelike;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rules::{apply_rules, ApplyConfig, RuleSet};
use crate::schema::{Schema, SchemaError};
use crate::seed::rng_for;
use crate::tkg::{DayStamp, EntityId, Quadruple, Relation, TemporalKnowledgeGraph};

pub use ledger::{coherency_violations, Coherency, OpenRelationLedger};

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("start {start} is after end {end}")]
    InvalidRange { start: DayStamp, end: DayStamp },
    #[error("generation must start after the graph's last day {last}, got {start}")]
    NotFuture { start: DayStamp, last: DayStamp },
    #[error("year {0} has no facts")]
    EmptyYear(i32),
    #[error("no relation has a positive weight")]
    NoWeights,
    #[error("generation exhausted on {day}: {}", summarize(.failures))]
    Exhausted {
        day: DayStamp,
        failures: BTreeMap<Relation, RelationFailures>,
    },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

pub type Result<T, E = GeneratorError> = std::result::Result<T, E>;

fn summarize(failures: &BTreeMap<Relation, RelationFailures>) -> String {
    if failures.is_empty() {
        return "no relation could be sampled".into();
    }
    failures
        .iter()
        .map(|(r, f)| format!("{r} ({f})"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Why attempts for one relation failed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFailures {
    /// No subject passed the domain and coherency pre-filters.
    pub no_subject: u32,
    /// The rules proposed no object for any sampled subject.
    pub no_candidate: u32,
    /// Every proposed object was schema-invalid, incoherent or a duplicate.
    pub all_filtered: u32,
}

impl RelationFailures {
    pub fn total(&self) -> u32 {
        self.no_subject + self.no_candidate + self.all_filtered
    }
}

impl std::fmt::Display for RelationFailures {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no subject {}, no candidate {}, all filtered {}",
            self.no_subject, self.no_candidate, self.all_filtered
        )
    }
}

/// Relation sampling weights from one reference year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationWeights {
    pub year: i32,
    pub weights: BTreeMap<Relation, f64>,
}

impl RelationWeights {
    pub fn new(year: i32, weights: BTreeMap<Relation, f64>) -> Result<Self> {
        if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(GeneratorError::Config("weights must be finite and non-negative".into()));
        }
        if !weights.values().any(|w| *w > 0.0) {
            return Err(GeneratorError::NoWeights);
        }
        Ok(Self { year, weights })
    }

    pub fn get(&self, r: &Relation) -> f64 {
        self.weights.get(r).copied().unwrap_or(0.0)
    }
}

/// Per-relation fact counts of `year` in `graph`; relations of the graph
/// absent that year get weight 0.
pub fn derive_weights(graph: &TemporalKnowledgeGraph, year: i32) -> Result<RelationWeights> {
    let mut weights: BTreeMap<Relation, f64> = graph.relations().iter().map(|r| (r.clone(), 0.0)).collect();
    let mut any = false;
    for q in graph.quadruples().filter(|q| q.timestamp.year() == year) {
        *weights.get_mut(&q.relation).expect("relation of the graph") += 1.0;
        any = true;
    }
    if !any {
        return Err(GeneratorError::EmptyYear(year));
    }
    RelationWeights::new(year, weights)
}

/// Per-day targets for `[from, to]`: the fact count of the same calendar
/// day in `reference_year`, capped at `max_per_day`. Days without a
/// counterpart (Feb 29 against a common year) get 0.
pub fn daily_targets(
    graph: &TemporalKnowledgeGraph,
    reference_year: i32,
    from: DayStamp,
    to: DayStamp,
    max_per_day: usize,
) -> Result<BTreeMap<DayStamp, usize>> {
    if from > to {
        return Err(GeneratorError::InvalidRange { start: from, end: to });
    }
    let mut per_day: HashMap<DayStamp, usize> = HashMap::new();
    for q in graph.quadruples().filter(|q| q.timestamp.year() == reference_year) {
        *per_day.entry(q.timestamp).or_default() += 1;
    }
    let mut targets = BTreeMap::new();
    let mut day = from;
    loop {
        let d = day.date();
        let n = DayStamp::from_ymd(reference_year, d.month(), d.day())
            .and_then(|r| per_day.get(&r).copied())
            .unwrap_or(0);
        targets.insert(day, n.min(max_per_day));
        if day == to {
            break;
        }
        day = day.succ().expect("day within calendar range");
    }
    Ok(targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    /// Subjects sampled per attempt.
    pub k: usize,
    pub max_per_day: usize,
    /// Failed attempts before a relation is set aside for the rest of a day.
    pub retries: u32,
    pub coherency: Coherency,
    pub seed: u64,
    pub apply: ApplyConfig,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            k: 4,
            max_per_day: 128,
            retries: 16,
            coherency: Coherency::Subject,
            seed: 0,
            apply: ApplyConfig::default(),
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GeneratorError::Config(m.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if self.max_per_day == 0 {
            return bad("max_per_day must be at least 1");
        }
        if self.retries == 0 {
            return bad("retries must be at least 1");
        }
        if self.apply.window <= 0 {
            return bad("window must be positive");
        }
        Ok(())
    }
}

/// Working state of a generation run: the growing graph, its ledger and
/// cached per-relation subject domains.
pub struct Generator<'a> {
    graph: TemporalKnowledgeGraph,
    ledger: OpenRelationLedger,
    rules: &'a RuleSet,
    schema: &'a Schema,
    weights: &'a RelationWeights,
    config: &'a GeneratorConfig,
    domains: HashMap<Relation, Vec<EntityId>>,
    stats: BTreeMap<Relation, RelationStats>,
}

/// Attempt counters for one relation over a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub attempts: u32,
    pub accepted: u32,
    pub acceptance_rate: f64,
}

impl<'a> Generator<'a> {
    pub fn new(
        graph: &TemporalKnowledgeGraph,
        rules: &'a RuleSet,
        schema: &'a Schema,
        weights: &'a RelationWeights,
        config: &'a GeneratorConfig,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            ledger: OpenRelationLedger::from_graph(graph),
            graph: graph.clone(),
            rules,
            schema,
            weights,
            config,
            domains: HashMap::new(),
            stats: BTreeMap::new(),
        })
    }

    pub fn graph(&self) -> &TemporalKnowledgeGraph {
        &self.graph
    }

    pub fn ledger(&self) -> &OpenRelationLedger {
        &self.ledger
    }

    /// Generates one fact dated `t` and adds it to the working graph.
    /// `slot` distinguishes successive facts of the same day.
    pub fn generate_fact(&mut self, t: DayStamp, slot: usize) -> Result<Quadruple> {
        let mut rng = rng_for(self.config.seed, &["generate", &t.to_string(), &slot.to_string()]);
        let mut relations: Vec<(Relation, f64)> = self
            .weights
            .weights
            .iter()
            .filter(|(_, w)| **w > 0.0)
            .map(|(r, w)| (r.clone(), *w))
            .collect();
        let mut failures: BTreeMap<Relation, RelationFailures> = BTreeMap::new();
        while !relations.is_empty() {
            let i = draw(&relations, &mut rng)?;
            let r = relations[i].0.clone();
            self.stats.entry(r.clone()).or_default().attempts += 1;
            match self.attempt(&r, t, &mut rng)? {
                Ok(q) => {
                    self.stats.entry(r).or_default().accepted += 1;
                    self.ledger.record(&q);
                    self.graph.insert(&q);
                    return Ok(q);
                }
                Err(cause) => {
                    let f = failures.entry(r).or_default();
                    match cause {
                        Failure::NoSubject => f.no_subject += 1,
                        Failure::NoCandidate => f.no_candidate += 1,
                        Failure::AllFiltered => f.all_filtered += 1,
                    }
                    if f.total() >= self.config.retries {
                        relations.swap_remove(i);
                        relations.sort_by(|a, b| a.0.cmp(&b.0));
                    }
                }
            }
        }
        Err(GeneratorError::Exhausted { day: t, failures })
    }

    fn domain(&mut self, r: &Relation) -> Result<&[EntityId]> {
        if !self.domains.contains_key(r) {
            let mut allowed = Vec::new();
            for e in self.graph.entities() {
                if self.schema.has_entity(e) && self.schema.allowed_subject(e, r)? {
                    allowed.push(e.clone());
                }
            }
            allowed.sort();
            self.domains.insert(r.clone(), allowed);
        }
        Ok(&self.domains[r])
    }

    fn attempt(&mut self, r: &Relation, t: DayStamp, rng: &mut ChaCha8Rng) -> Result<std::result::Result<Quadruple, Failure>> {
        let base = r.base().to_owned();
        let kind = r.kind();
        let domain = self.domain(r)?.to_vec();
        let mut subjects: Vec<EntityId> = domain
            .into_iter()
            .filter(|s| self.ledger.admits_subject(s, &base, kind))
            .collect();
        if subjects.is_empty() {
            return Ok(Err(Failure::NoSubject));
        }
        let k = self.config.k.min(subjects.len());
        let (sampled, _) = subjects.partial_shuffle(rng, k);

        let graph = &self.graph;
        let answers: Vec<_> = sampled
            .par_iter()
            .map(|s| (s, apply_rules(graph, self.rules, s, r, t, &self.config.apply)))
            .collect();
        if answers.iter().all(|(_, a)| a.is_empty()) {
            return Ok(Err(Failure::NoCandidate));
        }

        let mut best: Option<(f64, Quadruple)> = None;
        for (s, answer) in answers {
            for c in &answer.candidates {
                if &c.object == s || !self.schema.has_entity(&c.object) {
                    continue;
                }
                let q = Quadruple::new(s.clone(), r.clone(), c.object.clone(), t);
                if !self.schema.valid_object(&q)? || self.graph.contains(&q) || !self.ledger.admits(&q, self.config.coherency) {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((score, b)) => c
                        .score
                        .total_cmp(score)
                        .then_with(|| b.object.cmp(&q.object))
                        .then_with(|| b.subject.cmp(&q.subject))
                        .is_gt(),
                };
                if better {
                    best = Some((c.score, q));
                }
                // candidates are sorted; the first admissible one is this subject's best
                break;
            }
        }
        Ok(best.map(|(_, q)| q).ok_or(Failure::AllFiltered))
    }

    pub fn stats(&self) -> BTreeMap<Relation, RelationStats> {
        self.stats
            .iter()
            .map(|(r, s)| {
                let rate = if s.attempts == 0 { 0.0 } else { f64::from(s.accepted) / f64::from(s.attempts) };
                (r.clone(), RelationStats { acceptance_rate: rate, ..*s })
            })
            .collect()
    }
}

fn draw(relations: &[(Relation, f64)], rng: &mut ChaCha8Rng) -> Result<usize> {
    let dist = WeightedIndex::new(relations.iter().map(|(_, w)| *w)).map_err(|_| GeneratorError::NoWeights)?;
    Ok(dist.sample(rng))
}

#[derive(Debug, Clone, Copy)]
enum Failure {
    NoSubject,
    NoCandidate,
    AllFiltered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayReport {
    pub day: DayStamp,
    pub target: usize,
    pub generated: usize,
    /// Present when the day stopped short of its target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exhausted: Option<String>,
}

/// Sidecar summary of a generation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub days: Vec<DayReport>,
    pub relations: BTreeMap<Relation, RelationStats>,
    pub total: usize,
}

#[derive(Debug, Clone)]
pub struct Generation {
    pub facts: Vec<Quadruple>,
    pub diagnostics: Diagnostics,
}

/// Generates facts for every day of `[start, end]`, `min(target, m)` per
/// day. A day that runs out of admissible facts is cut short and recorded
/// in the diagnostics.
pub fn generate_range(
    graph: &TemporalKnowledgeGraph,
    rules: &RuleSet,
    schema: &Schema,
    weights: &RelationWeights,
    targets: &BTreeMap<DayStamp, usize>,
    start: DayStamp,
    end: DayStamp,
    config: &GeneratorConfig,
) -> Result<Generation> {
    if start > end {
        return Err(GeneratorError::InvalidRange { start, end });
    }
    if let Some((_, last)) = graph.time_range() {
        if start <= last {
            return Err(GeneratorError::NotFuture { start, last });
        }
    }
    let mut generator = Generator::new(graph, rules, schema, weights, config)?;
    let mut facts = Vec::new();
    let mut days = Vec::new();
    for (&day, &target) in targets.range(start..=end) {
        let target = target.min(config.max_per_day);
        let mut report = DayReport {
            day,
            target,
            generated: 0,
            exhausted: None,
        };
        for slot in 0..target {
            match generator.generate_fact(day, slot) {
                Ok(q) => {
                    facts.push(q);
                    report.generated += 1;
                }
                Err(e @ GeneratorError::Exhausted { .. }) => {
                    log::warn!("{e}");
                    report.exhausted = Some(e.to_string());
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        days.push(report);
    }
    let diagnostics = Diagnostics {
        total: facts.len(),
        days,
        relations: generator.stats(),
    };
    Ok(Generation { facts, diagnostics })
}
