//! Renewable temporal knowledge extraction benchmarks.
//!
//! `tkgforge` takes an existing temporal knowledge graph (TKG) and turns it
//! into fresh text/fact benchmark pairs whose facts lie in the future, so no
//! language model can have seen them during training. The pipeline is:
//!
//! 1. [`tkg`]: ingest, linearize and prune the source graph.
//! 2. [`rules`]: mine cyclic temporal rules with temporal random walks and
//!    apply them to `(subject, relation, ?, t)` queries.
//! 3. [`generator`]: forecast schema-valid, coherent future facts day by day.
//! 4. [`cluster`]: bundle related facts into 2-4 fact groups.
//! 5. [`describe`]: verbalize facts into newspaper-style descriptions.
//! 6. [`metrics`]: score extraction systems with quadruple-matching metrics
//!    and paired permutation tests.
//!
//! [`schema`] holds the class hierarchy and relation domain/range constraints
//! shared by the generator and the clusterer.

pub mod cluster;
pub mod describe;
pub mod generator;
pub mod metrics;
pub mod rules;
pub mod schema;
pub mod seed;
pub mod tkg;

pub use tkg::{
    DatasetExample, DayStamp, EntityId, ExampleQuadruple, IntervalFact, Quadruple, Relation,
    RelationKind, TemporalKnowledgeGraph,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
