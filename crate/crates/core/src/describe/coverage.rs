//! Automated coverage check: every label and date of an example should be
//! findable in its text.

use serde::{Deserialize, Serialize};

use super::style::TimestampStyle;
use crate::tkg::DatasetExample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Subject,
    Object,
    Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageFlag {
    /// Position of the quadruple within the example.
    pub quadruple: usize,
    pub field: Field,
    pub expected: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub id: String,
    pub flags: Vec<CoverageFlag>,
}

impl CoverageReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

/// Lowercased alphanumeric runs.
pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Whether the tokens of `needle` occur contiguously among `haystack`'s.
/// Needles without any alphanumeric character fall back to a
/// case-insensitive substring test on `raw`.
fn contains(haystack: &[String], raw: &str, needle: &str) -> bool {
    let n = tokens(needle);
    if n.is_empty() {
        return raw.to_lowercase().contains(&needle.trim().to_lowercase());
    }
    haystack.windows(n.len()).any(|w| w == n.as_slice())
}

/// Flags every subject label, object label or timestamp (in any of
/// `styles`) missing from the example's text.
pub fn coverage_check(example: &DatasetExample, styles: &[TimestampStyle]) -> CoverageReport {
    let hay = tokens(&example.text);
    let mut flags = Vec::new();
    for (i, q) in example.quadruples.iter().enumerate() {
        for (field, label) in [(Field::Subject, &q.subject_label), (Field::Object, &q.object_label)] {
            if !contains(&hay, &example.text, label) {
                flags.push(CoverageFlag {
                    quadruple: i,
                    field,
                    expected: label.clone(),
                });
            }
        }
        if !styles.iter().any(|s| contains(&hay, &example.text, &s.render(q.timestamp))) {
            flags.push(CoverageFlag {
                quadruple: i,
                field: Field::Timestamp,
                expected: q.timestamp.to_string(),
            });
        }
    }
    CoverageReport {
        id: example.id.clone(),
        flags,
    }
}
