use std::collections::{BTreeMap, BTreeSet};
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::grounding::{compile, for_each_grounding, Window};
use super::{Ordering, RuleSet};
use crate::tkg::{DayStamp, EntityId, Relation, TemporalKnowledgeGraph};

/// How confidences of several rules proposing the same object combine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// `1 - Π(1 - confidence)`
    #[default]
    NoisyOr,
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApplyConfig {
    /// Only facts in `[t - window, t)` take part in groundings, in days.
    pub window: i64,
    pub aggregation: Aggregation,
    pub ordering: Ordering,
}

impl Default for ApplyConfig {
    fn default() -> Self {
        Self {
            window: 2048,
            aggregation: Aggregation::NoisyOr,
            ordering: Ordering::NonStrict,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub object: EntityId,
    pub score: f64,
    /// Id of the highest-confidence rule that produced this object.
    pub best_rule: usize,
}

/// Ranked answer to `(subject, relation, ?, t)`: score descending, ties by
/// ascending object id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryAnswer {
    pub candidates: Vec<Candidate>,
    pub notes: Vec<String>,
}

impl QueryAnswer {
    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// 1-based rank of `object`, ignoring objects in `skip`.
    pub fn rank_of(&self, object: &EntityId, skip: &BTreeSet<&EntityId>) -> Option<usize> {
        self.candidates
            .iter()
            .filter(|c| !skip.contains(&c.object))
            .position(|c| &c.object == object)
            .map(|p| p + 1)
    }
}

/// Answers `(subject, relation, ?, t)` with every rule whose head is
/// `relation`, grounding bodies at `subject` over facts in the window
/// before `t`.
pub fn apply_rules(
    graph: &TemporalKnowledgeGraph,
    rules: &RuleSet,
    subject: &EntityId,
    relation: &Relation,
    t: DayStamp,
    config: &ApplyConfig,
) -> QueryAnswer {
    let mut answer = QueryAnswer::default();
    let rule_ids = rules.for_head(relation);
    if rule_ids.is_empty() {
        answer.notes.push(format!("no rules for relation {relation}"));
        return answer;
    }
    let Some(start) = graph.entity_idx(subject) else {
        answer.notes.push(format!("subject {subject} not in graph"));
        return answer;
    };
    let q = t.day_number();
    let window = Window {
        lo: (i64::from(q) - config.window.max(1)).max(i64::from(i32::MIN)) as i32,
        hi: q - 1,
    };

    // object -> (aggregate, best rule); rules are visited by confidence
    // descending so the first rule to reach an object is its best
    let mut scores: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    for &id in rule_ids {
        let rule = &rules.rules()[id];
        let Some(atoms) = compile(graph, &rule.body) else { continue };
        let mut objects = BTreeSet::new();
        let _ = for_each_grounding(graph, &atoms, Some(start), window, config.ordering, &mut |g| {
            objects.insert(g.last);
            ControlFlow::Continue(())
        });
        for o in objects {
            let entry = scores.entry(o).or_insert((0.0, id));
            entry.0 = match config.aggregation {
                Aggregation::NoisyOr => 1.0 - (1.0 - entry.0) * (1.0 - rule.confidence),
                Aggregation::Max => entry.0.max(rule.confidence),
            };
        }
    }

    answer.candidates = scores
        .into_iter()
        .map(|(o, (score, best_rule))| Candidate {
            object: graph.entity(o).clone(),
            score,
            best_rule,
        })
        .collect();
    answer
        .candidates
        .sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.object.cmp(&b.object)));
    answer
}
