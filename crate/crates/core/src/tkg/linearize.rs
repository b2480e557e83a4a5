use std::collections::HashSet;

use super::{IntervalFact, Quadruple, Relation, Result, TkgError};

/// Splits interval facts into point facts.
///
/// A fact `(s, r, o, [start, end])` becomes `(s, start_of(r), o, start)`
/// and, when the end is known, `(s, end_of(r), o, end)`. Relations in
/// `non_linearizable` (matched by base name, e.g. `children`) keep their
/// plain relation and yield a single fact at `start`.
pub fn linearize(facts: &[IntervalFact], non_linearizable: &HashSet<String>) -> Result<Vec<Quadruple>> {
    let mut out = Vec::with_capacity(facts.len() * 2);
    for fact in facts {
        if let Some(end) = fact.end {
            if fact.start > end {
                return Err(TkgError::InvertedInterval {
                    subject: fact.subject.to_string(),
                    relation: fact.relation.to_string(),
                    object: fact.object.to_string(),
                    start: fact.start,
                    end,
                });
            }
        }
        let base = fact.relation.base();
        if non_linearizable.contains(base) {
            out.push(Quadruple::new(
                fact.subject.clone(),
                Relation::plain(base),
                fact.object.clone(),
                fact.start,
            ));
            continue;
        }
        out.push(Quadruple::new(
            fact.subject.clone(),
            Relation::start_of(base),
            fact.object.clone(),
            fact.start,
        ));
        if let Some(end) = fact.end {
            out.push(Quadruple::new(
                fact.subject.clone(),
                Relation::end_of(base),
                fact.object.clone(),
                end,
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tkg::DayStamp;
    use proptest::prelude::*;

    fn d(s: &str) -> DayStamp {
        s.parse().unwrap()
    }

    fn interval(s: &str, r: &str, o: &str, start: &str, end: Option<&str>) -> IntervalFact {
        IntervalFact {
            subject: s.into(),
            relation: Relation::plain(r),
            object: o.into(),
            start: d(start),
            end: end.map(d),
        }
    }

    #[test]
    fn bill_gates_example() {
        let facts = [interval(
            "Bill Gates",
            "memberOf",
            "Boston University Terriers men's Basketball",
            "1958-01-01",
            Some("1959-01-01"),
        )];
        let out = linearize(&facts, &HashSet::new()).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].relation.name(), "startMemberOf");
        assert_eq!(out[0].timestamp, d("1958-01-01"));
        assert_eq!(out[1].relation.name(), "endMemberOf");
        assert_eq!(out[1].timestamp, d("1959-01-01"));
        assert_eq!(out[1].object.as_str(), "Boston University Terriers men's Basketball");
    }

    #[test]
    fn open_interval() {
        let out = linearize(&[interval("A", "memberOf", "B", "2020-01-01", None)], &HashSet::new()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].relation, Relation::start_of("memberOf"));
    }

    #[test]
    fn excluded_relation() {
        let excluded: HashSet<String> = ["children".to_owned()].into();
        let out = linearize(&[interval("A", "children", "B", "2020-05-05", None)], &excluded).unwrap();
        assert_eq!(out, vec![Quadruple::new("A", Relation::plain("children"), "B", d("2020-05-05"))]);
    }

    #[test]
    fn inverted_interval_rejected() {
        let err = linearize(&[interval("A", "memberOf", "B", "2020-01-02", Some("2020-01-01"))], &HashSet::new())
            .unwrap_err();
        assert!(matches!(err, TkgError::InvertedInterval { .. }));
        assert!(err.to_string().contains("(A, memberOf, B)"));
    }

    proptest! {
        #[test]
        fn output_count(spec in prop::collection::vec((0u8..3, any::<bool>(), 0i64..400), 0..40)) {
            let excluded: HashSet<String> = ["r0".to_owned()].into();
            let base = d("2020-01-01");
            let facts: Vec<IntervalFact> = spec.iter().enumerate().map(|(i, (rel, closed, len))| IntervalFact {
                subject: format!("s{i}").into(),
                relation: Relation::plain(format!("r{rel}")),
                object: "o".into(),
                start: base,
                end: closed.then(|| base.add_days(*len).unwrap()),
            }).collect();
            let doubled = spec.iter().filter(|(rel, closed, _)| *rel != 0 && *closed).count();
            let out = linearize(&facts, &excluded).unwrap();
            prop_assert_eq!(out.len(), doubled * 2 + (facts.len() - doubled));
        }
    }
}
