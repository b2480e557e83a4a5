//! Benchmark examples and their JSON-lines serialization.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DayStamp, EntityId, Quadruple, Relation, Result, TkgError};

/// A quadruple with resolved entity labels, as stored in datasets.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExampleQuadruple {
    pub subject: EntityId,
    pub subject_label: String,
    pub relation: Relation,
    pub object: EntityId,
    pub object_label: String,
    pub timestamp: DayStamp,
}

impl ExampleQuadruple {
    pub fn new(q: Quadruple, subject_label: impl Into<String>, object_label: impl Into<String>) -> Self {
        Self {
            subject: q.subject,
            subject_label: subject_label.into(),
            relation: q.relation,
            object: q.object,
            object_label: object_label.into(),
            timestamp: q.timestamp,
        }
    }

    /// Uses the ids themselves as labels.
    pub fn unlabeled(q: Quadruple) -> Self {
        let (s, o) = (q.subject.to_string(), q.object.to_string());
        Self::new(q, s, o)
    }

    pub fn quadruple(&self) -> Quadruple {
        Quadruple {
            subject: self.subject.clone(),
            relation: self.relation.clone(),
            object: self.object.clone(),
            timestamp: self.timestamp,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ExampleMetadata {
    pub timestamp_style: String,
    pub headline: bool,
    pub headline_date: Option<DayStamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
}

/// One benchmark example: facts plus the text they should be extracted from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetExample {
    pub id: String,
    pub quadruples: Vec<ExampleQuadruple>,
    pub text: String,
    pub metadata: ExampleMetadata,
}

impl DatasetExample {
    /// Relation that keys this example when datasets are matched: the
    /// relation of its first quadruple.
    pub fn key_relation(&self) -> &Relation {
        &self.quadruples[0].relation
    }
}

/// Writes one JSON object per line.
pub fn write_dataset(examples: &[DatasetExample], path: &Path) -> Result<()> {
    let io_err = |source| TkgError::Io {
        path: path.to_owned(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    for example in examples {
        serde_json::to_writer(&mut out, example).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a dataset written by [`write_dataset`].
pub fn read_dataset(path: &Path) -> Result<Vec<DatasetExample>> {
    let file = File::open(path).map_err(|source| TkgError::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut examples = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|source| TkgError::Io {
            path: path.to_owned(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| TkgError::Parse {
            path: path.to_owned(),
            line: idx + 1,
            message,
        };
        let example: DatasetExample = serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        if example.quadruples.is_empty() {
            return Err(parse(format!("example {} has no quadruples", example.id)));
        }
        examples.push(example);
    }
    Ok(examples)
}
