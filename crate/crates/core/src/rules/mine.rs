use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grounding::count_supports;
use super::{BodyAtom, Ordering, Result, RuleError, TemporalRule};
use crate::seed::rng_for;
use crate::tkg::{Relation, TemporalKnowledgeGraph};

/// Transition distribution of the backward walk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    Uniform,
    /// Weight `exp(-lambda * (t_prev - t_candidate))`, favouring recent edges.
    #[default]
    #[serde(alias = "exp")]
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkConfig {
    /// Head edges sampled per (relation, length).
    pub walks: usize,
    pub lengths: BTreeSet<usize>,
    pub transition: Transition,
    /// Per-day decay rate of the exponential transition.
    pub lambda: f64,
    pub seed: u64,
    pub ordering: Ordering,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            walks: 200,
            lengths: [1, 2, 3].into(),
            transition: Transition::Exponential,
            lambda: 0.01,
            seed: 0,
            ordering: Ordering::NonStrict,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walks == 0 {
            return Err(RuleError::Config("walks must be positive".into()));
        }
        if self.lengths.is_empty() || self.lengths.iter().any(|l| !(1..=3).contains(l)) {
            return Err(RuleError::Config(format!("rule lengths {:?} must be a non-empty subset of {{1, 2, 3}}", self.lengths)));
        }
        if self.transition == Transition::Exponential && !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(RuleError::Config(format!("lambda must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Mines cyclic temporal rules from backward temporal random walks and
/// scores them by exhaustive grounding enumeration.
///
/// Work is split into independent (relation, length) units, each with its
/// own generator derived from the seed, so the output does not depend on
/// thread scheduling.
pub fn mine_rules(graph: &TemporalKnowledgeGraph, config: &WalkConfig) -> Result<Vec<TemporalRule>> {
    config.validate()?;
    let units: Vec<(u32, usize)> = (0..graph.relations().len() as u32)
        .filter(|&r| !graph.facts_of_relation(r).is_empty())
        .flat_map(|r| config.lengths.iter().map(move |&l| (r, l)))
        .collect();

    let patterns: BTreeSet<(Relation, Vec<BodyAtom>)> = units
        .par_iter()
        .map(|&(rel, len)| {
            let head = graph.relation(rel).clone();
            let mut rng = rng_for(config.seed, &["walk", &head.name(), &len.to_string()]);
            let mut heads = graph.facts_of_relation(rel).to_vec();
            let take = config.walks.min(heads.len());
            let (sampled, _) = heads.partial_shuffle(&mut rng, take);
            let mut bodies = BTreeSet::new();
            for &fact in sampled.iter() {
                if let Some(body) = sample_walk(graph, fact, len, config, &mut rng) {
                    bodies.insert(body);
                }
            }
            (head, bodies)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flat_map(|(head, bodies)| bodies.into_iter().map(move |b| (head.clone(), b)))
        .collect();

    let patterns: Vec<_> = patterns.into_iter().collect();
    let mut rules: Vec<TemporalRule> = patterns
        .par_iter()
        .filter_map(|(head, body)| {
            let (rule_support, body_support) = count_supports(graph, head, body, config.ordering);
            (body_support > 0).then(|| TemporalRule {
                head: head.clone(),
                body: body.clone(),
                confidence: rule_support as f64 / body_support as f64,
                rule_support,
                body_support,
            })
        })
        .collect();
    rules.retain(|r| r.rule_support > 0);
    log::info!("mined {} rules from {} walk units", rules.len(), units.len());
    Ok(rules)
}

/// Samples one backward walk of `len` steps starting at the head fact's
/// object and closing the cycle at its subject. Returns the rule body in
/// chronological order.
fn sample_walk(
    graph: &TemporalKnowledgeGraph,
    head_fact: u32,
    len: usize,
    config: &WalkConfig,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<BodyAtom>> {
    let head = graph.fact(head_fact);
    let mut used = vec![head_fact];
    let mut cur = head.o;
    let mut cur_t = head.t;
    let mut atoms = Vec::with_capacity(len);
    for step in (1..=len).rev() {
        let max_t = config.ordering.prev_max(cur_t);
        let candidates: Vec<_> = graph
            .edges(cur)
            .iter()
            .filter(|e| e.t <= max_t && !used.contains(&e.fact) && (step > 1 || e.other == head.s))
            .collect();
        if candidates.is_empty() {
            return None;
        }
        let pick = match config.transition {
            Transition::Uniform => rng.random_range(0..candidates.len()),
            Transition::Exponential => {
                let newest = candidates.iter().map(|e| e.t).max().expect("non-empty");
                let weights: Vec<f64> = candidates
                    .iter()
                    .map(|e| (-config.lambda * f64::from(newest - e.t)).exp())
                    .collect();
                WeightedIndex::new(&weights).ok()?.sample(rng)
            }
        };
        let edge = candidates[pick];
        used.push(edge.fact);
        // walking backwards: an edge leaving `cur` as subject is an atom
        // pointing from the next entity back to `cur`, i.e. inverted
        atoms.push(BodyAtom::new(graph.relation(edge.rel).clone(), !edge.inverted));
        cur = edge.other;
        cur_t = edge.t;
    }
    atoms.reverse();
    Some(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tkg::Quadruple;

    fn q(s: &str, r: &str, o: &str, day: u32) -> Quadruple {
        Quadruple::new(s, Relation::parse(r), o, crate::tkg::DayStamp::from_ymd(2020, 1, day).unwrap())
    }

    #[test]
    fn single_fact_has_no_long_rules() {
        let (g, _) = TemporalKnowledgeGraph::from_quadruples([q("A", "r", "B", 1)]);
        let config = WalkConfig {
            lengths: [2, 3].into(),
            ..WalkConfig::default()
        };
        assert!(mine_rules(&g, &config).unwrap().is_empty());
    }

    #[test]
    fn config_validation() {
        let bad = |c: WalkConfig| c.validate().is_err();
        assert!(bad(WalkConfig { walks: 0, ..WalkConfig::default() }));
        assert!(bad(WalkConfig { lengths: [4].into(), ..WalkConfig::default() }));
        assert!(bad(WalkConfig { lengths: BTreeSet::new(), ..WalkConfig::default() }));
        assert!(bad(WalkConfig { lambda: 0.0, ..WalkConfig::default() }));
        assert!(!bad(WalkConfig {
            lambda: 0.0,
            transition: Transition::Uniform,
            ..WalkConfig::default()
        }));
    }

    #[test]
    fn walk_recovers_cycle() {
        // B -r2-> A on day 1, then A -r1-> B on day 2: the only length-1
        // walk from (A, r1, B) steps back from B to A over the r2 edge.
        let (g, _) = TemporalKnowledgeGraph::from_quadruples([q("B", "r2", "A", 1), q("A", "r1", "B", 2)]);
        let config = WalkConfig {
            lengths: [1].into(),
            ..WalkConfig::default()
        };
        let rules = mine_rules(&g, &config).unwrap();
        let r1: Vec<_> = rules.iter().filter(|r| r.head.name() == "r1").collect();
        assert_eq!(r1.len(), 1);
        assert_eq!(r1[0].body, vec![BodyAtom::new(Relation::parse("r2"), true)]);
        assert_eq!((r1[0].rule_support, r1[0].body_support), (1, 1));
    }

    #[test]
    fn deterministic_under_seed() {
        let facts: Vec<_> = (1..=20)
            .map(|i| q(&format!("e{}", i % 5), ["r", "s", "t"][i % 3], &format!("e{}", (i * 3) % 5), (i % 28 + 1) as u32))
            .collect();
        let (g, _) = TemporalKnowledgeGraph::from_quadruples(facts);
        let config = WalkConfig {
            seed: 11,
            walks: 5,
            ..WalkConfig::default()
        };
        let a = mine_rules(&g, &config).unwrap();
        let b = mine_rules(&g, &config).unwrap();
        assert_eq!(a, b);
        for r in &a {
            assert!(r.confidence > 0.0 && r.confidence <= 1.0);
            assert!(r.rule_support <= r.body_support);
        }
    }
}
