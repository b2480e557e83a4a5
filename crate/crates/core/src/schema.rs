//! Entity-class ontology: class membership, the inheritance graph, relation
//! domain/range constraints and the shortest-path distance between classes.
//!
//! Constraint checks use ancestor closure: an entity of class
//! `GraduateStudent` satisfies a constraint on `Person` when `Person` is an
//! ancestor of `GraduateStudent`. Constraints on `startX`/`endX` resolve to
//! the base relation `x`. An empty subject or object list leaves that side
//! unconstrained.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::tkg::{EntityId, Quadruple, Relation};

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("entity {0} has no recorded classes")]
    UnknownEntity(EntityId),
    #[error("class {0} lists itself as a parent")]
    SelfLoop(String),
    #[error("{context} references unknown class {class}")]
    UnknownClass { context: String, class: String },
    #[error("entity {0} has an empty class list")]
    NoClasses(String),
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
}

pub type Result<T, E = SchemaError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationConstraintDoc {
    #[serde(default)]
    pub subjects: Vec<String>,
    #[serde(default)]
    pub objects: Vec<String>,
}

/// On-disk schema document.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaDocument {
    /// class -> parent classes
    #[serde(default)]
    pub classes: BTreeMap<String, Vec<String>>,
    /// entity id -> classes
    #[serde(default)]
    pub entities: BTreeMap<String, Vec<String>>,
    /// base relation -> allowed subject/object classes
    #[serde(default)]
    pub relations: BTreeMap<String, RelationConstraintDoc>,
}

#[derive(Debug, Clone)]
struct Constraint {
    subjects: Vec<u32>,
    objects: Vec<u32>,
}

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug)]
pub struct Schema {
    class_names: Vec<String>,
    class_index: HashMap<String, u32>,
    parents: Vec<Vec<u32>>,
    neighbors: Vec<Vec<u32>>,
    /// reflexive-transitive ancestors, sorted
    ancestors: Vec<Vec<u32>>,
    entity_classes: HashMap<EntityId, Vec<u32>>,
    constraints: HashMap<String, Constraint>,
    distance_rows: RwLock<HashMap<u32, Arc<[u32]>>>,
}

impl Schema {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SchemaError::Io {
            path: path.to_owned(),
            source,
        })?;
        let doc: SchemaDocument = serde_json::from_str(&text).map_err(|source| SchemaError::Json {
            path: path.to_owned(),
            source,
        })?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &SchemaDocument) -> Result<Self> {
        let mut class_names: Vec<String> = Vec::new();
        let mut class_index: HashMap<String, u32> = HashMap::new();
        let mut intern = |name: &str, names: &mut Vec<String>| -> u32 {
            *class_index.entry(name.to_owned()).or_insert_with(|| {
                names.push(name.to_owned());
                (names.len() - 1) as u32
            })
        };
        let mut edges = Vec::new();
        for (class, parents) in &doc.classes {
            let c = intern(class, &mut class_names);
            for parent in parents {
                if parent == class {
                    return Err(SchemaError::SelfLoop(class.clone()));
                }
                edges.push((c, intern(parent, &mut class_names)));
            }
        }
        let n = class_names.len();
        let class_index: HashMap<String, u32> =
            class_names.iter().enumerate().map(|(i, c)| (c.clone(), i as u32)).collect();
        let resolve = |class: &str, context: &str| -> Result<u32> {
            class_index.get(class).copied().ok_or_else(|| SchemaError::UnknownClass {
                context: context.to_owned(),
                class: class.to_owned(),
            })
        };

        let mut parents = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        for (c, p) in edges {
            parents[c as usize].push(p);
            neighbors[c as usize].push(p);
            neighbors[p as usize].push(c);
        }
        for list in parents.iter_mut().chain(neighbors.iter_mut()) {
            list.sort_unstable();
            list.dedup();
        }
        let ancestors = (0..n as u32).map(|c| closure(c, &parents)).collect();

        let mut entity_classes = HashMap::new();
        for (entity, classes) in &doc.entities {
            if classes.is_empty() {
                return Err(SchemaError::NoClasses(entity.clone()));
            }
            let mut ids = classes
                .iter()
                .map(|c| resolve(c, &format!("entity {entity}")))
                .collect::<Result<Vec<_>>>()?;
            ids.sort_unstable();
            ids.dedup();
            entity_classes.insert(EntityId::new(entity.as_str()), ids);
        }

        let mut constraints = HashMap::new();
        for (relation, c) in &doc.relations {
            let context = format!("relation {relation}");
            let side = |names: &[String]| -> Result<Vec<u32>> {
                let mut ids = names.iter().map(|c| resolve(c, &context)).collect::<Result<Vec<_>>>()?;
                ids.sort_unstable();
                ids.dedup();
                Ok(ids)
            };
            constraints.insert(
                relation.clone(),
                Constraint {
                    subjects: side(&c.subjects)?,
                    objects: side(&c.objects)?,
                },
            );
        }

        Ok(Self {
            class_names,
            class_index,
            parents,
            neighbors,
            ancestors,
            entity_classes,
            constraints,
            distance_rows: RwLock::new(HashMap::new()),
        })
    }

    pub fn to_document(&self) -> SchemaDocument {
        let name = |c: &u32| self.class_names[*c as usize].clone();
        let names = |cs: &[u32]| cs.iter().map(name).collect::<Vec<_>>();
        SchemaDocument {
            classes: self
                .class_names
                .iter()
                .zip(&self.parents)
                .map(|(c, ps)| (c.clone(), names(ps)))
                .collect(),
            entities: self
                .entity_classes
                .iter()
                .map(|(e, cs)| (e.to_string(), names(cs)))
                .collect(),
            relations: self
                .constraints
                .iter()
                .map(|(r, c)| {
                    (
                        r.clone(),
                        RelationConstraintDoc {
                            subjects: names(&c.subjects),
                            objects: names(&c.objects),
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn has_entity(&self, entity: &EntityId) -> bool {
        self.entity_classes.contains_key(entity)
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    /// Class names of an entity.
    pub fn classes_of(&self, entity: &EntityId) -> Result<BTreeSet<&str>> {
        Ok(self
            .classes(entity)?
            .iter()
            .map(|c| self.class_names[*c as usize].as_str())
            .collect())
    }

    pub fn is_constrained(&self, relation: &Relation) -> bool {
        self.constraints.contains_key(relation.base())
    }

    fn classes(&self, entity: &EntityId) -> Result<&[u32]> {
        self.entity_classes
            .get(entity)
            .map(Vec::as_slice)
            .ok_or_else(|| SchemaError::UnknownEntity(entity.clone()))
    }

    fn satisfies(&self, entity: &EntityId, allowed: &[u32]) -> Result<bool> {
        let classes = self.classes(entity)?;
        if allowed.is_empty() {
            return Ok(true);
        }
        Ok(classes.iter().any(|&c| {
            self.ancestors[c as usize]
                .iter()
                .any(|a| allowed.binary_search(a).is_ok())
        }))
    }

    /// Whether `entity` may be the subject of `relation`.
    pub fn allowed_subject(&self, entity: &EntityId, relation: &Relation) -> Result<bool> {
        match self.constraints.get(relation.base()) {
            Some(c) => self.satisfies(entity, &c.subjects),
            None => self.classes(entity).map(|_| true),
        }
    }

    /// Whether the quadruple's object fits the relation's range.
    pub fn valid_object(&self, q: &Quadruple) -> Result<bool> {
        match self.constraints.get(q.relation.base()) {
            Some(c) => self.satisfies(&q.object, &c.objects),
            None => self.classes(&q.object).map(|_| true),
        }
    }

    /// Subject and object constraints together.
    pub fn is_valid(&self, q: &Quadruple) -> Result<bool> {
        Ok(self.allowed_subject(&q.subject, &q.relation)? && self.valid_object(q)?)
    }

    /// Shortest undirected path length between any class of `a` and any
    /// class of `b` in the inheritance graph; `None` when unreachable.
    pub fn class_distance(&self, a: &EntityId, b: &EntityId) -> Result<Option<u32>> {
        let ca = self.classes(a)?;
        let cb = self.classes(b)?;
        let mut best = UNREACHABLE;
        for &c in ca {
            if cb.contains(&c) {
                return Ok(Some(0));
            }
            let row = self.distance_row(c);
            for &d in cb {
                best = best.min(row[d as usize]);
            }
        }
        Ok((best != UNREACHABLE).then_some(best))
    }

    /// Distance between two named classes.
    pub fn distance_between_classes(&self, a: &str, b: &str) -> Option<Option<u32>> {
        let (a, b) = (*self.class_index.get(a)?, *self.class_index.get(b)?);
        let d = self.distance_row(a)[b as usize];
        Some((d != UNREACHABLE).then_some(d))
    }

    fn distance_row(&self, class: u32) -> Arc<[u32]> {
        if let Some(row) = self.distance_rows.read().expect("cache lock").get(&class) {
            return row.clone();
        }
        let row: Arc<[u32]> = bfs(class, &self.neighbors).into();
        self.distance_rows
            .write()
            .expect("cache lock")
            .entry(class)
            .or_insert(row)
            .clone()
    }
}

fn closure(start: u32, parents: &[Vec<u32>]) -> Vec<u32> {
    let mut seen = vec![false; parents.len()];
    let mut stack = vec![start];
    seen[start as usize] = true;
    let mut out = Vec::new();
    while let Some(c) = stack.pop() {
        out.push(c);
        for &p in &parents[c as usize] {
            if !seen[p as usize] {
                seen[p as usize] = true;
                stack.push(p);
            }
        }
    }
    out.sort_unstable();
    out
}

fn bfs(start: u32, neighbors: &[Vec<u32>]) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; neighbors.len()];
    dist[start as usize] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        let next = dist[c as usize] + 1;
        for &n in &neighbors[c as usize] {
            if dist[n as usize] == UNREACHABLE {
                dist[n as usize] = next;
                queue.push_back(n);
            }
        }
    }
    dist
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn toy_schema() -> Schema {
        let doc: SchemaDocument = serde_json::from_value(serde_json::json!({
            "classes": {
                "Thing": [],
                "Person": ["Thing"],
                "GraduateStudent": ["Person"],
                "Place": ["Thing"],
                "City": ["Place"],
                "Organization": ["Thing"],
                "SportsTeam": ["Organization"],
                "Award": ["Thing"],
                "Island": []
            },
            "entities": {
                "Taipei": ["City"],
                "Linus Torvalds": ["Person"],
                "Ada": ["GraduateStudent"],
                "Westerlo": ["SportsTeam"],
                "Nobel": ["Award"],
                "Atlantis": ["Island"]
            },
            "relations": {
                "doctoralAdvisor": {"subjects": ["Person"], "objects": ["Person"]},
                "award": {"subjects": ["Person"], "objects": ["Award"]},
                "memberOf": {"subjects": ["Person"], "objects": ["Organization"]}
            }
        }))
        .unwrap();
        Schema::from_document(&doc).unwrap()
    }

    fn e(s: &str) -> EntityId {
        EntityId::new(s)
    }

    fn q(s: &str, r: &str, o: &str) -> Quadruple {
        Quadruple::new(s, Relation::parse(r), o, "2026-01-01".parse().unwrap())
    }

    #[test]
    fn city_cannot_advise() {
        let schema = toy_schema();
        assert!(!schema.allowed_subject(&e("Taipei"), &Relation::parse("startDoctoralAdvisor")).unwrap());
        assert!(!schema.is_valid(&q("Taipei", "startDoctoralAdvisor", "Linus Torvalds")).unwrap());
    }

    #[test]
    fn unconstrained_relation_allows_all() {
        let schema = toy_schema();
        assert!(schema.allowed_subject(&e("Taipei"), &Relation::parse("twinTown")).unwrap());
        assert!(schema.valid_object(&q("Ada", "twinTown", "Taipei")).unwrap());
    }

    #[test]
    fn ancestor_closure() {
        let schema = toy_schema();
        assert!(schema.allowed_subject(&e("Ada"), &Relation::parse("doctoralAdvisor")).unwrap());
    }

    #[test]
    fn object_side() {
        let schema = toy_schema();
        assert!(schema.valid_object(&q("Ada", "startDoctoralAdvisor", "Linus Torvalds")).unwrap());
        assert!(!schema.valid_object(&q("Ada", "startAward", "Taipei")).unwrap());
        assert!(schema.valid_object(&q("Ada", "endAward", "Nobel")).unwrap());
    }

    #[test]
    fn unknown_entity_is_an_error() {
        let schema = toy_schema();
        assert!(matches!(
            schema.allowed_subject(&e("Nobody"), &Relation::parse("memberOf")),
            Err(SchemaError::UnknownEntity(_))
        ));
        assert!(schema.valid_object(&q("Ada", "memberOf", "Nobody")).is_err());
        assert!(schema.class_distance(&e("Ada"), &e("Nobody")).is_err());
    }

    #[test]
    fn distances() {
        let schema = toy_schema();
        assert_eq!(schema.class_distance(&e("Ada"), &e("Ada")).unwrap(), Some(0));
        assert_eq!(schema.class_distance(&e("Ada"), &e("Linus Torvalds")).unwrap(), Some(1));
        // GraduateStudent - Person - Thing - Place - City
        assert_eq!(schema.class_distance(&e("Ada"), &e("Taipei")).unwrap(), Some(4));
        assert_eq!(schema.class_distance(&e("Ada"), &e("Atlantis")).unwrap(), None);
    }

    #[test]
    fn start_end_resolve_to_base() {
        let schema = toy_schema();
        for entity in ["Taipei", "Ada", "Westerlo"] {
            let base = schema.allowed_subject(&e(entity), &Relation::parse("memberOf")).unwrap();
            assert_eq!(schema.allowed_subject(&e(entity), &Relation::parse("startMemberOf")).unwrap(), base);
            assert_eq!(schema.allowed_subject(&e(entity), &Relation::parse("endMemberOf")).unwrap(), base);
        }
    }

    #[test]
    fn document_validation() {
        let self_loop: SchemaDocument =
            serde_json::from_value(serde_json::json!({"classes": {"A": ["A"]}})).unwrap();
        assert!(matches!(Schema::from_document(&self_loop), Err(SchemaError::SelfLoop(_))));
        let unknown: SchemaDocument = serde_json::from_value(serde_json::json!({
            "classes": {"A": []},
            "relations": {"r": {"subjects": ["B"]}}
        }))
        .unwrap();
        assert!(matches!(Schema::from_document(&unknown), Err(SchemaError::UnknownClass { .. })));
        assert!(serde_json::from_value::<SchemaDocument>(serde_json::json!({"clases": {}})).is_err());
    }

    #[test]
    fn document_round_trip() {
        let schema = toy_schema();
        let again = Schema::from_document(&schema.to_document()).unwrap();
        assert_eq!(again.to_document(), schema.to_document());
    }

    fn random_schema(edges: &[(u8, u8)], memberships: &[Vec<u8>]) -> Schema {
        let mut classes: BTreeMap<String, Vec<String>> = (0..10).map(|i| (format!("C{i}"), vec![])).collect();
        for &(c, p) in edges {
            if c != p {
                classes.get_mut(&format!("C{c}")).unwrap().push(format!("C{p}"));
            }
        }
        let entities = memberships
            .iter()
            .enumerate()
            .map(|(i, cs)| (format!("e{i}"), cs.iter().map(|c| format!("C{c}")).collect()))
            .collect();
        Schema::from_document(&SchemaDocument {
            classes,
            entities,
            relations: BTreeMap::new(),
        })
        .unwrap()
    }

    proptest! {
        #[test]
        fn metric_properties(
            edges in prop::collection::vec((0u8..10, 0u8..10), 0..14),
            memberships in prop::collection::vec(prop::collection::vec(0u8..10, 1..3), 3..6),
        ) {
            let schema = random_schema(&edges, &memberships);
            let ids: Vec<EntityId> = (0..memberships.len()).map(|i| EntityId::new(format!("e{i}"))).collect();
            for a in &ids {
                prop_assert_eq!(schema.class_distance(a, a).unwrap(), Some(0));
                for b in &ids {
                    let ab = schema.class_distance(a, b).unwrap();
                    prop_assert_eq!(ab, schema.class_distance(b, a).unwrap());
                }
            }
            // triangle inequality on classes
            for x in 0..10 {
                for y in 0..10 {
                    for z in 0..10 {
                        let d = |p: usize, q: usize| schema.distance_between_classes(&format!("C{p}"), &format!("C{q}")).unwrap();
                        if let (Some(xy), Some(yz)) = (d(x, y), d(y, z)) {
                            let xz = d(x, z);
                            prop_assert!(xz.is_some_and(|xz| xz <= xy + yz));
                        }
                    }
                }
            }
        }
    }
}
