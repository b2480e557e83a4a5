//! Facts, interval facts and labels as tab-separated files.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{DayStamp, EntityId, IntervalFact, Quadruple, Relation, Result, TemporalKnowledgeGraph, TkgError};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rows: usize,
    pub duplicates: usize,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| TkgError::Io {
            path: path.to_owned(),
            source,
        })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> TkgError {
    TkgError::Parse {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

/// Loads a 4-column facts TSV (`subject, relation, object, YYYY-MM-DD`).
pub fn load_facts(path: &Path) -> Result<(TemporalKnowledgeGraph, LoadReport)> {
    read_facts(open(path)?, path)
}

/// Reads facts TSV rows from any reader; `path` is used for error context.
pub fn read_facts<R: BufRead>(reader: R, path: &Path) -> Result<(TemporalKnowledgeGraph, LoadReport)> {
    let mut quadruples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| TkgError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(parse_error(path, lineno, format!("expected 4 tab-separated columns, found {}", cols.len())));
        }
        if cols[..3].iter().any(|c| c.is_empty()) {
            return Err(parse_error(path, lineno, "empty subject, relation or object"));
        }
        let timestamp: DayStamp = cols[3]
            .parse()
            .map_err(|e: TkgError| parse_error(path, lineno, e.to_string()))?;
        quadruples.push(Quadruple::new(cols[0], Relation::parse(cols[1]), cols[2], timestamp));
    }
    let rows = quadruples.len();
    let (graph, duplicates) = TemporalKnowledgeGraph::from_quadruples(quadruples);
    if duplicates > 0 {
        log::info!("{}: dropped {duplicates} duplicate facts", path.display());
    }
    Ok((graph, LoadReport { rows, duplicates }))
}

/// Writes quadruples as facts TSV in chronological order.
pub fn write_facts(path: &Path, quadruples: &[Quadruple]) -> Result<()> {
    let io_err = |source| TkgError::Io {
        path: path.to_owned(),
        source,
    };
    let mut sorted: Vec<&Quadruple> = quadruples.iter().collect();
    sorted.sort_by(|a, b| a.chrono_key().cmp(&b.chrono_key()));
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for q in sorted {
        writeln!(out, "{}\t{}\t{}\t{}", q.subject, q.relation, q.object, q.timestamp).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Loads an `entity_id \t label` file.
pub fn load_labels(path: &Path) -> Result<HashMap<EntityId, String>> {
    let mut labels = HashMap::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|source| TkgError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let Some((id, label)) = line.split_once('\t') else {
            return Err(parse_error(path, idx + 1, "expected `entity_id<TAB>label`"));
        };
        if id.is_empty() {
            return Err(parse_error(path, idx + 1, "empty entity id"));
        }
        if labels.insert(EntityId::new(id), label.to_owned()).is_some() {
            return Err(parse_error(path, idx + 1, format!("duplicate label for {id}")));
        }
    }
    Ok(labels)
}

/// Which source relations are dropped before linearization.
///
/// Defaults drop `affiliation` and `alumniOf`, which are easily confused
/// with `memberOf`. Relations whose objects are numbers or unique
/// identifiers should be listed here as well.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestFilter {
    pub excluded_relations: BTreeSet<String>,
}

impl Default for IngestFilter {
    fn default() -> Self {
        Self {
            excluded_relations: ["affiliation", "alumniOf"].into_iter().map(String::from).collect(),
        }
    }
}

impl IngestFilter {
    pub fn keeps(&self, relation: &Relation) -> bool {
        !self.excluded_relations.contains(relation.base())
    }
}

/// Loads interval facts: `subject \t relation \t object \t start [\t end]`.
/// An empty or missing end column means the interval is open.
pub fn load_interval_facts(path: &Path) -> Result<Vec<IntervalFact>> {
    let mut facts = Vec::new();
    for (idx, line) in open(path)?.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|source| TkgError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if !(4..=5).contains(&cols.len()) {
            return Err(parse_error(path, lineno, format!("expected 4 or 5 tab-separated columns, found {}", cols.len())));
        }
        if cols[..3].iter().any(|c| c.is_empty()) {
            return Err(parse_error(path, lineno, "empty subject, relation or object"));
        }
        let date = |s: &str| -> Result<DayStamp> {
            s.parse().map_err(|e: TkgError| parse_error(path, lineno, e.to_string()))
        };
        let start = date(cols[3])?;
        let end = match cols.get(4) {
            Some(s) if !s.is_empty() => Some(date(s)?),
            _ => None,
        };
        facts.push(IntervalFact {
            subject: cols[0].into(),
            relation: Relation::plain(cols[1]),
            object: cols[2].into(),
            start,
            end,
        });
    }
    Ok(facts)
}
