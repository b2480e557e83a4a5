//! Shared fixtures and oracles for the integration tests.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use tkgforge::describe::RelationDefinitions;
use tkgforge::rules::{BodyAtom, Ordering};
use tkgforge::schema::Schema;
use tkgforge::tkg::{linearize, load_interval_facts, load_labels, prune_rare_entities, IngestFilter};
use tkgforge::{Quadruple, Relation, TemporalKnowledgeGraph};

pub fn toy_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy").join(name)
}

/// The toy graph as `ingest` builds it, with labels attached.
pub fn toy_graph() -> TemporalKnowledgeGraph {
    let facts = load_interval_facts(&toy_path("intervals.tsv")).unwrap();
    let filter = IngestFilter::default();
    let kept: Vec<_> = facts.into_iter().filter(|f| filter.keeps(&f.relation)).collect();
    let points: HashSet<String> = ["collaboratesWith", "award"].into_iter().map(String::from).collect();
    let (g, _) = TemporalKnowledgeGraph::from_quadruples(linearize(&kept, &points).unwrap());
    prune_rare_entities(&g).with_labels(load_labels(&toy_path("labels.tsv")).unwrap())
}

pub fn toy_schema() -> Schema {
    Schema::load(&toy_path("schema.json")).unwrap()
}

pub fn toy_definitions() -> RelationDefinitions {
    RelationDefinitions::load(&toy_path("definitions.json")).unwrap()
}

fn ends<'a>(f: &'a Quadruple, atom: &BodyAtom) -> (&'a str, &'a str) {
    if atom.inverted {
        (f.object.as_str(), f.subject.as_str())
    } else {
        (f.subject.as_str(), f.object.as_str())
    }
}

/// `(rule_support, body_support)` by trying every tuple of distinct facts
/// whose relations match the body, then checking the chain, the time order
/// and the head directly against the fact list.
pub fn oracle(facts: &[Quadruple], head: &Relation, body: &[BodyAtom], ordering: Ordering) -> (u64, u64) {
    let slots: Vec<Vec<usize>> = body
        .iter()
        .map(|a| (0..facts.len()).filter(|&i| facts[i].relation == a.relation).collect())
        .collect();
    let mut counts = (0, 0);
    let mut chosen = Vec::with_capacity(body.len());
    enumerate(facts, head, body, ordering, &slots, &mut chosen, &mut counts);
    counts
}

fn enumerate(
    facts: &[Quadruple],
    head: &Relation,
    body: &[BodyAtom],
    ordering: Ordering,
    slots: &[Vec<usize>],
    chosen: &mut Vec<usize>,
    counts: &mut (u64, u64),
) {
    let l = body.len();
    if chosen.len() < l {
        for &i in &slots[chosen.len()] {
            chosen.push(i);
            enumerate(facts, head, body, ordering, slots, chosen, counts);
            chosen.pop();
        }
        return;
    }
    let distinct = (0..l).all(|i| (0..i).all(|j| chosen[i] != chosen[j]));
    let tuple: Vec<&Quadruple> = chosen.iter().map(|&i| &facts[i]).collect();
    let chained = (1..l).all(|i| ends(tuple[i - 1], &body[i - 1]).1 == ends(tuple[i], &body[i]).0);
    let ordered = (1..l).all(|i| match ordering {
        Ordering::NonStrict => tuple[i - 1].timestamp <= tuple[i].timestamp,
        Ordering::Strict => tuple[i - 1].timestamp < tuple[i].timestamp,
    });
    if !(distinct && chained && ordered) {
        return;
    }
    counts.1 += 1;
    let first = ends(tuple[0], &body[0]).0;
    let last = ends(tuple[l - 1], &body[l - 1]).1;
    let last_t = tuple[l - 1].timestamp;
    let holds = facts.iter().enumerate().any(|(i, f)| {
        !chosen.contains(&i)
            && &f.relation == head
            && f.subject.as_str() == first
            && f.object.as_str() == last
            && match ordering {
                Ordering::NonStrict => f.timestamp >= last_t,
                Ordering::Strict => f.timestamp > last_t,
            }
    });
    if holds {
        counts.0 += 1;
    }
}
