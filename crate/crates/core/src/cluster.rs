//! Fact distance and size-capped agglomerative clustering.
//!
//! Two facts are close when their subjects and objects sit near each other
//! in the class hierarchy and their timestamps are close:
//!
//! ```text
//! d(q, q') = α · (d_ent(s, s') + d_ent(o, o')) / 2 + (1 - α) · d_ts(t, t')
//! d_ent    = 1 - 1 / (class_distance + 1)        (1 when unreachable)
//! d_ts     = 1 / (1 + exp(-κ · (|t - t'| - midpoint)))
//! ```

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::schema::{Schema, SchemaError};
use crate::tkg::{EntityId, Quadruple};

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no facts to cluster")]
    Empty,
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = ClusterError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub alpha: f64,
    /// Per-day steepness of the timestamp logistic.
    pub kappa: f64,
    /// Day gap at which the timestamp term reaches 0.5.
    pub midpoint: f64,
    pub min_size: usize,
    pub max_size: usize,
    pub linkage: Linkage,
    /// Merges at or above this linkage distance are not made.
    pub threshold: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            kappa: 0.03,
            midpoint: 365.0 / 2.0,
            min_size: 2,
            max_size: 4,
            linkage: Linkage::Average,
            threshold: 0.5,
        }
    }
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ClusterError::Config(m));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha {} outside [0, 1]", self.alpha));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !self.midpoint.is_finite() {
            return bad("midpoint must be finite".into());
        }
        if !(2 <= self.min_size && self.min_size <= self.max_size) {
            return bad(format!("need 2 <= min ({}) <= max ({})", self.min_size, self.max_size));
        }
        if !self.threshold.is_finite() {
            return bad("threshold must be finite".into());
        }
        Ok(())
    }

    /// Timestamp term for a gap of `days`.
    pub fn d_ts(&self, days: i64) -> f64 {
        1.0 / (1.0 + (-self.kappa * (days.unsigned_abs() as f64 - self.midpoint)).exp())
    }
}

/// Entity term for a class-hierarchy path length; `None` means unreachable.
pub fn d_ent(class_distance: Option<u32>) -> f64 {
    match class_distance {
        Some(n) => 1.0 - 1.0 / (f64::from(n) + 1.0),
        None => 1.0,
    }
}

fn entity_distance(schema: &Schema, a: &EntityId, b: &EntityId) -> Result<f64> {
    Ok(d_ent(schema.class_distance(a, b)?))
}

pub fn fact_distance(a: &Quadruple, b: &Quadruple, schema: &Schema, config: &ClusterConfig) -> Result<f64> {
    let ds = entity_distance(schema, &a.subject, &b.subject)?;
    let d_o = entity_distance(schema, &a.object, &b.object)?;
    let dt = config.d_ts(a.timestamp.days_since(b.timestamp));
    Ok(config.alpha * (ds + d_o) / 2.0 + (1.0 - config.alpha) * dt)
}

/// Symmetric pairwise distances, rows in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    /// Comma-separated rows without a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let io = |source| ClusterError::Io {
            path: path.to_owned(),
            source,
        };
        let file = std::fs::File::create(path).map_err(io)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w).map_err(io)?;
        w.flush().map_err(io)
    }
}

pub fn distance_matrix(facts: &[Quadruple], schema: &Schema, config: &ClusterConfig) -> Result<DistanceMatrix> {
    config.validate()?;
    if facts.is_empty() {
        return Err(ClusterError::Empty);
    }
    let n = facts.len();
    // upper triangle, one row per task
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| fact_distance(&facts[i], &facts[j], schema, config)).collect())
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix { n, values })
}

/// Clusters of `min..=max` facts plus the facts left in smaller groups.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub clusters: Vec<Vec<Quadruple>>,
    pub singletons: Vec<Quadruple>,
}

/// Index form of a clustering: groups of input positions.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClusterIndices {
    pub clusters: Vec<Vec<usize>>,
    pub singletons: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn linkage(m: &DistanceMatrix, a: &[usize], b: &[usize], kind: Linkage) -> f64 {
    let pairs = a.iter().flat_map(|&i| b.iter().map(move |&j| m.get(i, j)));
    match kind {
        Linkage::Average => pairs.sum::<f64>() / (a.len() * b.len()) as f64,
        Linkage::Complete => pairs.fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Agglomerative clustering over a precomputed matrix. The closest pair of
/// clusters whose union fits `max_size` is merged while its linkage stays
/// below the threshold; ties go to the larger union, then to the older
/// cluster ids.
pub fn cluster_matrix(m: &DistanceMatrix, config: &ClusterConfig) -> Result<ClusterIndices> {
    config.validate()?;
    let mut members: Vec<Option<Vec<usize>>> = (0..m.len()).map(|i| Some(vec![i])).collect();
    let mut heap = BinaryHeap::new();
    let push = |heap: &mut BinaryHeap<_>, members: &[Option<Vec<usize>>], a: usize, b: usize| {
        let (ma, mb) = (members[a].as_ref().unwrap(), members[b].as_ref().unwrap());
        if ma.len() + mb.len() > config.max_size {
            return;
        }
        let d = linkage(m, ma, mb, config.linkage);
        if d < config.threshold {
            heap.push(Reverse((Dist(d), Reverse(ma.len() + mb.len()), a.min(b), a.max(b))));
        }
    };
    for a in 0..m.len() {
        for b in a + 1..m.len() {
            push(&mut heap, &members, a, b);
        }
    }
    while let Some(Reverse((_, _, a, b))) = heap.pop() {
        if members[a].is_none() || members[b].is_none() {
            continue;
        }
        let mut merged = members[a].take().unwrap();
        merged.extend(members[b].take().unwrap());
        merged.sort_unstable();
        members.push(Some(merged));
        let new = members.len() - 1;
        for other in 0..new {
            if members[other].is_some() {
                push(&mut heap, &members, other, new);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = members.into_iter().flatten().collect();
    groups.sort_by_key(|g| g[0]);
    let mut out = ClusterIndices::default();
    for g in groups {
        if g.len() >= config.min_size {
            out.clusters.push(g);
        } else {
            out.singletons.extend(g);
        }
    }
    out.singletons.sort_unstable();
    Ok(out)
}

pub fn cluster(facts: &[Quadruple], schema: &Schema, config: &ClusterConfig) -> Result<Clustering> {
    let m = distance_matrix(facts, schema, config)?;
    let idx = cluster_matrix(&m, config)?;
    Ok(Clustering {
        clusters: idx
            .clusters
            .iter()
            .map(|g| g.iter().map(|&i| facts[i].clone()).collect())
            .collect(),
        singletons: idx.singletons.iter().map(|&i| facts[i].clone()).collect(),
    })
}
