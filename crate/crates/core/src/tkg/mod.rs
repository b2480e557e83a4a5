//! Temporal knowledge graph domain types, ingestion and dataset transforms.

mod dataset;
mod graph;
mod io;
mod linearize;
mod prune;
mod transforms;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use dataset::{read_dataset, write_dataset, DatasetExample, ExampleMetadata, ExampleQuadruple};
pub use graph::TemporalKnowledgeGraph;
pub use io::{
    load_facts, load_interval_facts, load_labels, read_facts, write_facts, IngestFilter,
    LoadReport,
};
pub use linearize::linearize;
pub use prune::prune_rare_entities;
pub use transforms::{resample_matched, retime, retime_date, Retime};

#[derive(Debug, thiserror::Error)]
pub enum TkgError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("invalid date {0:?}: expected YYYY-MM-DD")]
    InvalidDate(String),
    #[error("interval fact ({subject}, {relation}, {object}) starts at {start} after its end {end}")]
    InvertedInterval {
        subject: String,
        relation: String,
        object: String,
        start: DayStamp,
        end: DayStamp,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("datasets share no relation; nothing to match")]
    NoRelationOverlap,
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = TkgError> = std::result::Result<T, E>;

/// Opaque entity identifier, e.g. a Wikidata id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

impl From<String> for EntityId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationKind {
    Plain,
    /// Start of an interval relation, e.g. `startMemberOf`.
    Start,
    /// End of an interval relation, e.g. `endMemberOf`.
    End,
}

/// A relation name together with its linearization kind.
///
/// Start/end relations are named by prefixing the capitalized base name:
/// `memberOf` linearizes into `startMemberOf` and `endMemberOf`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Relation {
    base: String,
    kind: RelationKind,
}

impl Relation {
    pub fn plain(base: impl Into<String>) -> Self {
        Self {
            base: base.into(),
            kind: RelationKind::Plain,
        }
    }

    pub fn start_of(base: impl Into<String>) -> Self {
        Self {
            base: base.into(),
            kind: RelationKind::Start,
        }
    }

    pub fn end_of(base: impl Into<String>) -> Self {
        Self {
            base: base.into(),
            kind: RelationKind::End,
        }
    }

    /// Parses a relation name. `start`/`end` followed by an uppercase letter
    /// marks a linearized relation; anything else is plain.
    pub fn parse(name: &str) -> Self {
        for (prefix, kind) in [("start", RelationKind::Start), ("end", RelationKind::End)] {
            if let Some(rest) = name.strip_prefix(prefix) {
                let mut chars = rest.chars();
                if let Some(first) = chars.next() {
                    if first.is_uppercase() {
                        let base: String = first.to_lowercase().chain(chars).collect();
                        return Self { base, kind };
                    }
                }
            }
        }
        Self::plain(name)
    }

    /// Base relation; a plain relation is its own base.
    pub fn base(&self) -> &str {
        &self.base
    }

    pub fn kind(&self) -> RelationKind {
        self.kind
    }

    pub fn base_relation(&self) -> Relation {
        Relation::plain(self.base.clone())
    }

    pub fn name(&self) -> String {
        let prefix = match self.kind {
            RelationKind::Plain => return self.base.clone(),
            RelationKind::Start => "start",
            RelationKind::End => "end",
        };
        let mut chars = self.base.chars();
        match chars.next() {
            Some(first) => format!("{prefix}{}{}", first.to_uppercase(), chars.as_str()),
            None => prefix.to_owned(),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl PartialOrd for Relation {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Relation {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.name()
            .cmp(&other.name())
            .then(self.kind.cmp(&other.kind))
    }
}

impl Serialize for Relation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Relation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let name = String::deserialize(deserializer)?;
        Ok(Relation::parse(&name))
    }
}

/// A calendar day.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DayStamp(NaiveDate);

impl DayStamp {
    pub fn from_ymd(year: i32, month: u32, day: u32) -> Option<Self> {
        NaiveDate::from_ymd_opt(year, month, day).map(Self)
    }

    pub fn date(self) -> NaiveDate {
        self.0
    }

    pub fn year(self) -> i32 {
        self.0.year()
    }

    /// Day number used for arithmetic (days since 0001-01-01 CE, plus one).
    pub fn day_number(self) -> i32 {
        self.0.num_days_from_ce()
    }

    pub fn from_day_number(days: i32) -> Option<Self> {
        NaiveDate::from_num_days_from_ce_opt(days).map(Self)
    }

    /// Signed difference `self - other` in days.
    pub fn days_since(self, other: DayStamp) -> i64 {
        (self.0 - other.0).num_days()
    }

    pub fn add_days(self, days: i64) -> Option<Self> {
        self.0
            .checked_add_signed(chrono::TimeDelta::try_days(days)?)
            .map(Self)
    }

    pub fn succ(self) -> Option<Self> {
        self.0.succ_opt().map(Self)
    }

    pub fn ordinal(self) -> u32 {
        self.0.ordinal()
    }
}

impl From<NaiveDate> for DayStamp {
    fn from(d: NaiveDate) -> Self {
        Self(d)
    }
}

impl fmt::Display for DayStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%d"))
    }
}

impl FromStr for DayStamp {
    type Err = TkgError;

    fn from_str(s: &str) -> Result<Self> {
        // Strict YYYY-MM-DD; chrono alone would accept unpadded fields.
        let bytes = s.as_bytes();
        let shaped = bytes.len() == 10
            && bytes[4] == b'-'
            && bytes[7] == b'-'
            && bytes
                .iter()
                .enumerate()
                .all(|(i, b)| i == 4 || i == 7 || b.is_ascii_digit());
        if !shaped {
            return Err(TkgError::InvalidDate(s.to_owned()));
        }
        NaiveDate::parse_from_str(s, "%Y-%m-%d")
            .map(Self)
            .map_err(|_| TkgError::InvalidDate(s.to_owned()))
    }
}

impl Serialize for DayStamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DayStamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One temporal fact `(subject, relation, object, timestamp)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quadruple {
    pub subject: EntityId,
    pub relation: Relation,
    pub object: EntityId,
    pub timestamp: DayStamp,
}

impl Quadruple {
    pub fn new(
        subject: impl Into<EntityId>,
        relation: Relation,
        object: impl Into<EntityId>,
        timestamp: DayStamp,
    ) -> Self {
        Self {
            subject: subject.into(),
            relation,
            object: object.into(),
            timestamp,
        }
    }

    /// Chronological ordering key with a total tie-break.
    pub fn chrono_key(&self) -> (DayStamp, &EntityId, String, &EntityId) {
        (self.timestamp, &self.subject, self.relation.name(), &self.object)
    }
}

impl fmt::Display for Quadruple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}, {})",
            self.subject, self.relation, self.object, self.timestamp
        )
    }
}

/// A source fact holding over an interval, before linearization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalFact {
    pub subject: EntityId,
    pub relation: Relation,
    pub object: EntityId,
    pub start: DayStamp,
    pub end: Option<DayStamp>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_names_round_trip() {
        let r = Relation::parse("startMemberOf");
        assert_eq!(r.kind(), RelationKind::Start);
        assert_eq!(r.base(), "memberOf");
        assert_eq!(r.name(), "startMemberOf");
        assert_eq!(Relation::parse("endWorksFor"), Relation::end_of("worksFor"));
        assert_eq!(Relation::parse("children"), Relation::plain("children"));
        // lowercase after the prefix is not a linearized relation
        assert_eq!(Relation::parse("endorses").kind(), RelationKind::Plain);
        assert_eq!(Relation::parse("start").kind(), RelationKind::Plain);
    }

    #[test]
    fn strict_dates() {
        assert!("2022-01-01".parse::<DayStamp>().is_ok());
        assert!("2022-1-01".parse::<DayStamp>().is_err());
        assert!("2023-02-29".parse::<DayStamp>().is_err());
        assert!("2024-02-29".parse::<DayStamp>().is_ok());
        assert!("20220101".parse::<DayStamp>().is_err());
    }

    #[test]
    fn day_arithmetic() {
        let a: DayStamp = "2022-01-01".parse().unwrap();
        let b: DayStamp = "2023-01-01".parse().unwrap();
        assert_eq!(b.days_since(a), 365);
        assert_eq!(a.add_days(365), Some(b));
        assert_eq!(DayStamp::from_day_number(a.day_number()), Some(a));
    }
}
