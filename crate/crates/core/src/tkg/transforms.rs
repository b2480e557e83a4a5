//! Dataset transforms: year rewriting and distribution-matched resampling.

use std::collections::BTreeMap;

use chrono::Datelike;
use rand::seq::SliceRandom;

use super::{DatasetExample, DayStamp, ExampleQuadruple, Quadruple, Relation, Result, TemporalKnowledgeGraph, TkgError};
use crate::seed::rng_for;

/// Replaces the year of `date`, keeping month and day. Feb 29 maps to
/// Feb 28 when `year` is not a leap year.
pub fn retime_date(date: DayStamp, year: i32) -> DayStamp {
    let d = date.date();
    DayStamp::from_ymd(year, d.month(), d.day())
        .or_else(|| DayStamp::from_ymd(year, 2, 28))
        .expect("Feb 28 exists in every year")
}

/// Values whose quadruple timestamps can be moved to another year.
///
/// Only quadruple timestamps change; example texts and headline dates are
/// left untouched.
pub trait Retime: Sized {
    fn retime(&self, year: i32) -> Self;
}

impl Retime for Quadruple {
    fn retime(&self, year: i32) -> Self {
        Quadruple {
            timestamp: retime_date(self.timestamp, year),
            ..self.clone()
        }
    }
}

impl Retime for ExampleQuadruple {
    fn retime(&self, year: i32) -> Self {
        ExampleQuadruple {
            timestamp: retime_date(self.timestamp, year),
            ..self.clone()
        }
    }
}

impl Retime for DatasetExample {
    fn retime(&self, year: i32) -> Self {
        DatasetExample {
            quadruples: self.quadruples.iter().map(|q| q.retime(year)).collect(),
            ..self.clone()
        }
    }
}

impl<T: Retime> Retime for Vec<T> {
    fn retime(&self, year: i32) -> Self {
        self.iter().map(|x| x.retime(year)).collect()
    }
}

/// Retiming a graph can merge facts that only differed by year; the merged
/// copies are dropped as duplicates.
impl Retime for TemporalKnowledgeGraph {
    fn retime(&self, year: i32) -> Self {
        let (g, _) = TemporalKnowledgeGraph::from_quadruples(self.quadruples().map(|q| q.retime(year)));
        g.with_labels(self.labels().clone())
    }
}

pub fn retime<T: Retime>(value: &T, year: i32) -> T {
    value.retime(year)
}

/// Resamples two datasets so that they have the same number of examples per
/// relation and similar per-relation timestamp distributions.
///
/// Examples are keyed by the relation of their first quadruple. For each
/// relation present in both inputs, the smaller group is kept whole and
/// each of its examples is greedily paired with the unused example of the
/// larger group closest in day of year. Relations present in only one input
/// are dropped. Outputs keep the input order.
pub fn resample_matched(
    a: &[DatasetExample],
    b: &[DatasetExample],
    seed: u64,
) -> Result<(Vec<DatasetExample>, Vec<DatasetExample>)> {
    if a.is_empty() || b.is_empty() {
        return Err(TkgError::Invalid("resampling needs two non-empty datasets".into()));
    }
    let group = |xs: &[DatasetExample]| {
        let mut groups: BTreeMap<Relation, Vec<usize>> = BTreeMap::new();
        for (i, x) in xs.iter().enumerate() {
            groups.entry(x.key_relation().clone()).or_default().push(i);
        }
        groups
    };
    let (ga, gb) = (group(a), group(b));
    let doy = |x: &DatasetExample| x.quadruples[0].timestamp.ordinal() as i64;

    let mut keep_a = Vec::new();
    let mut keep_b = Vec::new();
    let mut overlap = false;
    for (relation, ia) in &ga {
        let Some(ib) = gb.get(relation) else { continue };
        overlap = true;
        let a_is_small = ia.len() <= ib.len();
        let (small, large, small_xs, large_xs) = if a_is_small {
            (ia, ib, a, b)
        } else {
            (ib, ia, b, a)
        };
        let mut rng = rng_for(seed, &["resample", &relation.name()]);
        let mut order = small.clone();
        order.shuffle(&mut rng);
        order.sort_by_key(|&i| doy(&small_xs[i]));
        let mut pool = large.clone();
        pool.shuffle(&mut rng);
        let mut used = vec![false; pool.len()];
        let mut picked = Vec::with_capacity(order.len());
        for &i in &order {
            let target = doy(&small_xs[i]);
            let best = (0..pool.len())
                .filter(|&j| !used[j])
                .min_by_key(|&j| (doy(&large_xs[pool[j]]) - target).abs())
                .expect("larger group has at least as many examples");
            used[best] = true;
            picked.push(pool[best]);
        }
        if a_is_small {
            keep_a.extend(small.iter().copied());
            keep_b.extend(picked);
        } else {
            keep_a.extend(picked);
            keep_b.extend(small.iter().copied());
        }
    }
    if !overlap {
        return Err(TkgError::NoRelationOverlap);
    }
    keep_a.sort_unstable();
    keep_b.sort_unstable();
    Ok((
        keep_a.into_iter().map(|i| a[i].clone()).collect(),
        keep_b.into_iter().map(|i| b[i].clone()).collect(),
    ))
}
