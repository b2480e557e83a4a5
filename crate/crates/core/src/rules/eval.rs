use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::apply::{apply_rules, ApplyConfig};
use super::{Result, RuleError, RuleSet};
use crate::tkg::{DayStamp, EntityId, Quadruple, Relation, TemporalKnowledgeGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForecastMetrics {
    pub k: usize,
    pub hits_at_k: f64,
    pub mrr: f64,
    pub queries: usize,
}

/// Splits facts chronologically: the latest `ceil(fraction * n)` facts form
/// the test set, the rest the training graph (labels are kept).
pub fn split_chronological(
    graph: &TemporalKnowledgeGraph,
    test_fraction: f64,
) -> Result<(TemporalKnowledgeGraph, Vec<Quadruple>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(RuleError::Config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut all = graph.sorted_quadruples();
    let n_test = (test_fraction * all.len() as f64).ceil() as usize;
    if n_test == 0 {
        return Err(RuleError::EmptyTestSplit);
    }
    let test = all.split_off(all.len() - n_test.min(all.len()));
    let (train, _) = TemporalKnowledgeGraph::from_quadruples(all);
    Ok((train.with_labels(graph.labels().clone()), test))
}

/// Time-aware filtered Hits@k and MRR of `rules` on `test`.
///
/// Each test fact `(s, r, o, t)` becomes the query `(s, r, ?, t)` answered
/// from facts of `graph` dated before `t` inside the window. Other objects
/// `o'` with `(s, r, o', t)` in `test` are removed before ranking; an object
/// that is never proposed contributes zero to both metrics.
pub fn evaluate_forecasting(
    graph: &TemporalKnowledgeGraph,
    rules: &RuleSet,
    test: &[Quadruple],
    config: &ApplyConfig,
    k: usize,
) -> Result<ForecastMetrics> {
    if test.is_empty() {
        return Err(RuleError::EmptyTestSplit);
    }
    if config.window <= 0 {
        return Err(RuleError::Config(format!("window must be positive, got {}", config.window)));
    }
    let mut truth: BTreeMap<(&EntityId, &Relation, DayStamp), BTreeSet<&EntityId>> = BTreeMap::new();
    for q in test {
        truth
            .entry((&q.subject, &q.relation, q.timestamp))
            .or_default()
            .insert(&q.object);
    }

    let ranks: Vec<Option<usize>> = test
        .par_iter()
        .map(|q| {
            let answer = apply_rules(graph, rules, &q.subject, &q.relation, q.timestamp, config);
            let mut skip = truth[&(&q.subject, &q.relation, q.timestamp)].clone();
            skip.remove(&q.object);
            answer.rank_of(&q.object, &skip)
        })
        .collect();

    let n = ranks.len() as f64;
    let hits = ranks.iter().filter(|r| r.is_some_and(|r| r <= k)).count() as f64;
    let rr: f64 = ranks.iter().flatten().map(|&r| 1.0 / r as f64).sum();
    Ok(ForecastMetrics {
        k,
        hits_at_k: hits / n,
        mrr: rr / n,
        queries: ranks.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{BodyAtom, TemporalRule};

    fn q(s: &str, r: &str, o: &str, t: DayStamp) -> Quadruple {
        Quadruple::new(s, Relation::parse(r), o, t)
    }

    fn day(n: i64) -> DayStamp {
        DayStamp::from_ymd(2020, 1, 1).unwrap().add_days(n).unwrap()
    }

    #[test]
    fn split_sizes() {
        let facts: Vec<_> = (0..10).map(|i| q("a", "r", &format!("o{i}"), day(i))).collect();
        let (g, _) = TemporalKnowledgeGraph::from_quadruples(facts);
        let (train, test) = split_chronological(&g, 0.25).unwrap();
        assert_eq!((train.len(), test.len()), (7, 3));
        assert!(test.iter().all(|t| t.timestamp >= day(7)));
        assert!(split_chronological(&g, 0.0).is_err());
        assert!(split_chronological(&g, 1.0).is_err());
    }

    #[test]
    fn time_aware_filter() {
        // two rules propose both o1 and o2; each is the other's filtered truth
        let facts = vec![
            q("s", "p", "o1", day(0)),
            q("s", "p", "o2", day(0)),
            q("s", "h", "o1", day(5)),
            q("s", "h", "o2", day(5)),
        ];
        let (g, _) = TemporalKnowledgeGraph::from_quadruples(facts.clone());
        let rules = RuleSet::new(vec![TemporalRule {
            head: Relation::parse("h"),
            body: vec![BodyAtom::new(Relation::parse("p"), false)],
            confidence: 1.0,
            rule_support: 2,
            body_support: 2,
        }]);
        let m = evaluate_forecasting(&g, &rules, &facts[2..], &ApplyConfig::default(), 1).unwrap();
        assert_eq!((m.hits_at_k, m.mrr, m.queries), (1.0, 1.0, 2));
    }

    #[test]
    fn empty_test_is_error() {
        let (g, _) = TemporalKnowledgeGraph::from_quadruples([q("a", "r", "b", day(0))]);
        assert!(matches!(
            evaluate_forecasting(&g, &RuleSet::default(), &[], &ApplyConfig::default(), 10),
            Err(RuleError::EmptyTestSplit)
        ));
    }
}
