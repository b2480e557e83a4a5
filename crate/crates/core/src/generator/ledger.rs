//! Open start/end relations per subject.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::tkg::{DayStamp, EntityId, Quadruple, RelationKind, TemporalKnowledgeGraph};

/// How strictly generated start/end facts must agree with the ledger.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coherency {
    /// A subject may not open a relation it already has open, nor close one
    /// it has none of open.
    #[default]
    Subject,
    /// Additionally, an end fact's object must match an open entry.
    Object,
}

/// `(subject, base relation) -> {object -> start day}` of relations opened
/// by a start fact and not closed by an end fact on or after that day.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpenRelationLedger {
    open: BTreeMap<(EntityId, String), BTreeMap<EntityId, DayStamp>>,
}

impl OpenRelationLedger {
    pub fn from_graph(graph: &TemporalKnowledgeGraph) -> Self {
        let mut latest: BTreeMap<(EntityId, String, EntityId), (Option<DayStamp>, Option<DayStamp>)> =
            BTreeMap::new();
        for q in graph.quadruples() {
            let kind = q.relation.kind();
            if kind == RelationKind::Plain {
                continue;
            }
            let t = q.timestamp;
            let entry = latest.entry((q.subject, q.relation.base().to_owned(), q.object)).or_default();
            let slot = if kind == RelationKind::Start { &mut entry.0 } else { &mut entry.1 };
            *slot = (*slot).max(Some(t));
        }
        let mut ledger = Self::default();
        for ((s, base, o), (start, end)) in latest {
            if let Some(start) = start {
                if end.is_none_or(|e| e < start) {
                    ledger.open.entry((s, base)).or_default().insert(o, start);
                }
            }
        }
        ledger
    }

    /// Whether `subject` has any open entry for `base`.
    pub fn subject_open(&self, subject: &EntityId, base: &str) -> bool {
        self.open
            .get(&(subject.clone(), base.to_owned()))
            .is_some_and(|m| !m.is_empty())
    }

    pub fn is_open(&self, subject: &EntityId, base: &str, object: &EntityId) -> bool {
        self.open
            .get(&(subject.clone(), base.to_owned()))
            .is_some_and(|m| m.contains_key(object))
    }

    pub fn open_objects(&self, subject: &EntityId, base: &str) -> BTreeSet<&EntityId> {
        self.open
            .get(&(subject.clone(), base.to_owned()))
            .map(|m| m.keys().collect())
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.open.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Whether `subject` passes the pre-filter for relations of `kind`.
    pub fn admits_subject(&self, subject: &EntityId, base: &str, kind: RelationKind) -> bool {
        match kind {
            RelationKind::Plain => true,
            RelationKind::Start => !self.subject_open(subject, base),
            RelationKind::End => self.subject_open(subject, base),
        }
    }

    /// Whether emitting `q` keeps the ledger coherent under `mode`.
    pub fn admits(&self, q: &Quadruple, mode: Coherency) -> bool {
        let base = q.relation.base();
        let kind = q.relation.kind();
        if !self.admits_subject(&q.subject, base, kind) {
            return false;
        }
        match (kind, mode) {
            (RelationKind::End, Coherency::Object) => self.is_open(&q.subject, base, &q.object),
            _ => true,
        }
    }

    pub fn record(&mut self, q: &Quadruple) {
        let key = (q.subject.clone(), q.relation.base().to_owned());
        match q.relation.kind() {
            RelationKind::Plain => {}
            RelationKind::Start => {
                self.open.entry(key).or_default().insert(q.object.clone(), q.timestamp);
            }
            RelationKind::End => {
                if let Some(m) = self.open.get_mut(&key) {
                    m.remove(&q.object);
                    if m.is_empty() {
                        self.open.remove(&key);
                    }
                }
            }
        }
    }
}

/// Replays `generated` (in order) on top of the ledger of `base` and
/// reports every fact that breaks coherency under `mode`.
pub fn coherency_violations(
    base: &TemporalKnowledgeGraph,
    generated: &[Quadruple],
    mode: Coherency,
) -> Vec<Quadruple> {
    let mut ledger = OpenRelationLedger::from_graph(base);
    let mut bad = Vec::new();
    for q in generated {
        if !ledger.admits(q, mode) {
            bad.push(q.clone());
        }
        ledger.record(q);
    }
    bad
}
