use std::collections::{BTreeMap, HashMap, HashSet};

use super::{DayStamp, EntityId, Quadruple, Relation};

/// Interned fact: entity, relation and day indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct Fact {
    pub s: u32,
    pub r: u32,
    pub o: u32,
    pub t: i32,
}

/// One endpoint's view of a fact.
///
/// `inverted == false` means the owning entity is the fact's subject and
/// `other` its object; `inverted == true` means the owning entity is the
/// object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Edge {
    pub rel: u32,
    pub inverted: bool,
    pub t: i32,
    pub other: u32,
    pub fact: u32,
}

/// Indexed set of quadruples with entity and relation vocabularies.
///
/// Facts are interned; each entity keeps its incident edges sorted by
/// `(relation, direction, time)` so walks and windowed groundings are range
/// lookups.
#[derive(Debug, Clone, Default)]
pub struct TemporalKnowledgeGraph {
    entities: Vec<EntityId>,
    entity_index: HashMap<EntityId, u32>,
    relations: Vec<Relation>,
    relation_index: HashMap<Relation, u32>,
    facts: Vec<Fact>,
    fact_set: HashSet<Fact>,
    adjacency: Vec<Vec<Edge>>,
    by_relation: Vec<Vec<u32>>,
    by_day: BTreeMap<i32, Vec<u32>>,
    /// `(subject, relation, object) -> [(day, fact)]`, sorted.
    pairs: HashMap<(u32, u32, u32), Vec<(i32, u32)>>,
    labels: HashMap<EntityId, String>,
}

impl TemporalKnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph, dropping exact duplicates. Returns the graph and the
    /// number of duplicates dropped.
    pub fn from_quadruples<I>(quadruples: I) -> (Self, usize)
    where
        I: IntoIterator<Item = Quadruple>,
    {
        let mut graph = Self::new();
        let mut duplicates = 0;
        for q in quadruples {
            if !graph.push_unsorted(&q) {
                duplicates += 1;
            }
        }
        for edges in &mut graph.adjacency {
            edges.sort_unstable();
        }
        for times in graph.pairs.values_mut() {
            times.sort_unstable();
        }
        (graph, duplicates)
    }

    fn intern_entity(&mut self, e: &EntityId) -> u32 {
        if let Some(&i) = self.entity_index.get(e) {
            return i;
        }
        let i = self.entities.len() as u32;
        self.entities.push(e.clone());
        self.entity_index.insert(e.clone(), i);
        self.adjacency.push(Vec::new());
        i
    }

    fn intern_relation(&mut self, r: &Relation) -> u32 {
        if let Some(&i) = self.relation_index.get(r) {
            return i;
        }
        let i = self.relations.len() as u32;
        self.relations.push(r.clone());
        self.relation_index.insert(r.clone(), i);
        self.by_relation.push(Vec::new());
        i
    }

    fn intern(&mut self, q: &Quadruple) -> Fact {
        Fact {
            s: self.intern_entity(&q.subject),
            r: self.intern_relation(&q.relation),
            o: self.intern_entity(&q.object),
            t: q.timestamp.day_number(),
        }
    }

    /// Appends without keeping adjacency sorted; callers sort afterwards.
    fn push_unsorted(&mut self, q: &Quadruple) -> bool {
        let fact = self.intern(q);
        if !self.fact_set.insert(fact) {
            return false;
        }
        let id = self.facts.len() as u32;
        self.facts.push(fact);
        self.adjacency[fact.s as usize].push(Edge {
            rel: fact.r,
            inverted: false,
            t: fact.t,
            other: fact.o,
            fact: id,
        });
        self.adjacency[fact.o as usize].push(Edge {
            rel: fact.r,
            inverted: true,
            t: fact.t,
            other: fact.s,
            fact: id,
        });
        self.by_relation[fact.r as usize].push(id);
        self.by_day.entry(fact.t).or_default().push(id);
        self.pairs.entry((fact.s, fact.r, fact.o)).or_default().push((fact.t, id));
        true
    }

    /// Inserts one quadruple, keeping all indexes consistent. Returns
    /// `false` if the quadruple was already present.
    pub fn insert(&mut self, q: &Quadruple) -> bool {
        let fact = self.intern(q);
        if self.fact_set.contains(&fact) {
            return false;
        }
        self.push_unsorted(q);
        let id = (self.facts.len() - 1) as u32;
        for (owner, edge) in [
            (
                fact.s,
                Edge {
                    rel: fact.r,
                    inverted: false,
                    t: fact.t,
                    other: fact.o,
                    fact: id,
                },
            ),
            (
                fact.o,
                Edge {
                    rel: fact.r,
                    inverted: true,
                    t: fact.t,
                    other: fact.s,
                    fact: id,
                },
            ),
        ] {
            let edges = &mut self.adjacency[owner as usize];
            // the edge was pushed last; move it into sorted position
            let pos = edges.iter().rposition(|e| *e == edge).expect("edge just pushed");
            edges.remove(pos);
            let at = edges.partition_point(|e| *e < edge);
            edges.insert(at, edge);
        }
        let times = self.pairs.get_mut(&(fact.s, fact.r, fact.o)).expect("pair just pushed");
        times.pop();
        let at = times.partition_point(|&x| x < (fact.t, id));
        times.insert(at, (fact.t, id));
        true
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn entities(&self) -> &[EntityId] {
        &self.entities
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn contains(&self, q: &Quadruple) -> bool {
        self.lookup(q).is_some_and(|f| self.fact_set.contains(&f))
    }

    fn lookup(&self, q: &Quadruple) -> Option<Fact> {
        Some(Fact {
            s: *self.entity_index.get(&q.subject)?,
            r: *self.relation_index.get(&q.relation)?,
            o: *self.entity_index.get(&q.object)?,
            t: q.timestamp.day_number(),
        })
    }

    /// Earliest and latest timestamps, or `None` for an empty graph.
    pub fn time_range(&self) -> Option<(DayStamp, DayStamp)> {
        let first = *self.by_day.keys().next()?;
        let last = *self.by_day.keys().next_back()?;
        Some((day(first), day(last)))
    }

    /// Quadruples in insertion order.
    pub fn quadruples(&self) -> impl Iterator<Item = Quadruple> + '_ {
        self.facts.iter().map(|f| self.materialize(*f))
    }

    /// Quadruples sorted chronologically with a total tie-break.
    pub fn sorted_quadruples(&self) -> Vec<Quadruple> {
        let mut out: Vec<Quadruple> = self.quadruples().collect();
        out.sort_by(|a, b| a.chrono_key().cmp(&b.chrono_key()));
        out
    }

    /// Quadruples whose timestamp lies in `[from, to]`.
    pub fn quadruples_between(&self, from: DayStamp, to: DayStamp) -> Vec<Quadruple> {
        self.by_day
            .range(from.day_number()..=to.day_number())
            .flat_map(|(_, ids)| ids.iter())
            .map(|&id| self.materialize(self.facts[id as usize]))
            .collect()
    }

    /// Number of facts per relation, over all facts.
    pub fn relation_counts(&self) -> BTreeMap<Relation, usize> {
        self.relations
            .iter()
            .zip(&self.by_relation)
            .filter(|(_, ids)| !ids.is_empty())
            .map(|(r, ids)| (r.clone(), ids.len()))
            .collect()
    }

    pub fn label(&self, e: &EntityId) -> Option<&str> {
        self.labels.get(e).map(String::as_str)
    }

    /// Label if known, otherwise the raw id.
    pub fn display_label<'a>(&'a self, e: &'a EntityId) -> &'a str {
        self.label(e).unwrap_or(e.as_str())
    }

    pub fn set_label(&mut self, e: EntityId, label: String) {
        self.labels.insert(e, label);
    }

    pub fn labels(&self) -> &HashMap<EntityId, String> {
        &self.labels
    }

    pub fn with_labels(mut self, labels: HashMap<EntityId, String>) -> Self {
        self.labels = labels;
        self
    }

    pub(crate) fn materialize(&self, f: Fact) -> Quadruple {
        Quadruple {
            subject: self.entities[f.s as usize].clone(),
            relation: self.relations[f.r as usize].clone(),
            object: self.entities[f.o as usize].clone(),
            timestamp: day(f.t),
        }
    }

    pub(crate) fn fact(&self, id: u32) -> Fact {
        self.facts[id as usize]
    }

    pub(crate) fn facts_raw(&self) -> &[Fact] {
        &self.facts
    }

    pub(crate) fn entity_idx(&self, e: &EntityId) -> Option<u32> {
        self.entity_index.get(e).copied()
    }

    pub(crate) fn entity(&self, idx: u32) -> &EntityId {
        &self.entities[idx as usize]
    }

    pub(crate) fn relation_idx(&self, r: &Relation) -> Option<u32> {
        self.relation_index.get(r).copied()
    }

    pub(crate) fn relation(&self, idx: u32) -> &Relation {
        &self.relations[idx as usize]
    }

    pub(crate) fn facts_of_relation(&self, r: u32) -> &[u32] {
        self.by_relation.get(r as usize).map_or(&[], Vec::as_slice)
    }

    /// All edges incident to `entity`.
    pub(crate) fn edges(&self, entity: u32) -> &[Edge] {
        &self.adjacency[entity as usize]
    }

    /// `(day, fact)` of every fact `(s, r, o, *)`, sorted by day.
    pub(crate) fn pair_facts(&self, s: u32, r: u32, o: u32) -> &[(i32, u32)] {
        self.pairs.get(&(s, r, o)).map_or(&[], Vec::as_slice)
    }

    /// Edges of `entity` with the given relation/direction and time in
    /// `[from, to]`, sorted by time.
    pub(crate) fn edges_in(&self, entity: u32, rel: u32, inverted: bool, from: i32, to: i32) -> &[Edge] {
        let edges = &self.adjacency[entity as usize];
        let key = |e: &Edge| (e.rel, e.inverted, e.t);
        let lo = edges.partition_point(|e| key(e) < (rel, inverted, from));
        let hi = edges.partition_point(|e| key(e) <= (rel, inverted, to));
        if lo >= hi {
            &[]
        } else {
            &edges[lo..hi]
        }
    }
}

pub(crate) fn day(t: i32) -> DayStamp {
    DayStamp::from_day_number(t).expect("day numbers come from valid dates")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str, r: &str, o: &str, t: &str) -> Quadruple {
        Quadruple::new(s, Relation::parse(r), o, t.parse().unwrap())
    }

    #[test]
    fn dedup_and_indexes() {
        let (g, dups) = TemporalKnowledgeGraph::from_quadruples([
            q("A", "r", "B", "2020-01-01"),
            q("A", "r", "B", "2020-01-01"),
            q("B", "r", "C", "2020-01-02"),
        ]);
        assert_eq!(dups, 1);
        assert_eq!(g.len(), 2);
        assert_eq!(g.entity_count(), 3);
        let b = g.entity_idx(&"B".into()).unwrap();
        assert_eq!(g.edges(b).len(), 2);
        let r = g.relation_idx(&Relation::parse("r")).unwrap();
        let d1 = "2020-01-01".parse::<DayStamp>().unwrap().day_number();
        assert_eq!(g.edges_in(b, r, true, d1, d1).len(), 1);
        assert_eq!(g.edges_in(b, r, false, d1, d1 + 1).len(), 1);
        assert_eq!(g.edges_in(b, r, false, d1, d1).len(), 0);
    }

    #[test]
    fn insert_keeps_edges_sorted() {
        let (mut g, _) = TemporalKnowledgeGraph::from_quadruples([
            q("A", "r", "B", "2020-01-05"),
            q("A", "r", "C", "2020-01-01"),
        ]);
        assert!(g.insert(&q("A", "r", "D", "2020-01-03")));
        assert!(!g.insert(&q("A", "r", "D", "2020-01-03")));
        let a = g.entity_idx(&"A".into()).unwrap();
        let times: Vec<i32> = g.edges(a).iter().map(|e| e.t).collect();
        let mut sorted = times.clone();
        sorted.sort();
        assert_eq!(times, sorted);
        assert!(g.contains(&q("A", "r", "D", "2020-01-03")));
        assert_eq!(
            g.time_range().map(|(a, b)| (a.to_string(), b.to_string())),
            Some(("2020-01-01".into(), "2020-01-05".into()))
        );
    }
}
