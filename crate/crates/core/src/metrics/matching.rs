//! Element and tuple matching under the four scoring modes.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::describe::parse_date;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Same string in the same position.
    Strict,
    /// Same string, any position.
    Exact,
    /// Overlapping strings in the same position.
    Type,
    /// Overlapping strings, any position; half credit for overlap.
    Partial,
}

impl MatchMode {
    pub const ALL: [MatchMode; 4] = [Self::Strict, Self::Exact, Self::Type, Self::Partial];

    pub fn name(self) -> &'static str {
        match self {
            Self::Strict => "strict",
            Self::Exact => "exact",
            Self::Type => "type",
            Self::Partial => "partial",
        }
    }

    /// Whether elements may be re-aligned across positions.
    fn permutes(self) -> bool {
        matches!(self, Self::Exact | Self::Partial)
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?} (expected strict, exact, type or partial)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Subject,
    Relation,
    Object,
    Timestamp,
}

/// One normalized element of a candidate or reference tuple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Element {
    pub text: String,
    pub position: Position,
}

impl Element {
    /// Trims and collapses whitespace; timestamps that parse as a date are
    /// rewritten to `YYYY-MM-DD`.
    pub fn new(text: &str, position: Position) -> Self {
        let mut text = text.split_whitespace().collect::<Vec<_>>().join(" ");
        if position == Position::Timestamp {
            if let Some(d) = parse_date(&text) {
                text = d.to_string();
            }
        }
        Self { text, position }
    }
}

/// Case-insensitive overlap: a shared whitespace token or containment.
pub fn overlaps(a: &str, b: &str) -> bool {
    let (a, b) = (a.to_lowercase(), b.to_lowercase());
    if a.is_empty() || b.is_empty() {
        return false;
    }
    if a.contains(&b) || b.contains(&a) {
        return true;
    }
    a.split_whitespace().any(|t| b.split_whitespace().any(|u| t == u))
}

/// Score of one candidate element against one reference element.
pub fn element_match(candidate: &Element, reference: &Element, mode: MatchMode) -> f64 {
    let same_text = !candidate.text.is_empty() && candidate.text == reference.text;
    let same_position = candidate.position == reference.position;
    match mode {
        MatchMode::Strict => f64::from(u8::from(same_text && same_position)),
        MatchMode::Exact => f64::from(u8::from(same_text)),
        MatchMode::Partial => {
            if same_text {
                1.0
            } else if overlaps(&candidate.text, &reference.text) {
                0.5
            } else {
                0.0
            }
        }
        MatchMode::Type => {
            let overlap = same_text || overlaps(&candidate.text, &reference.text);
            f64::from(u8::from(overlap && same_position))
        }
    }
}

/// Mean element score of two equally long tuples. Strict and type modes
/// compare positionally; exact and partial take the best alignment over
/// all permutations.
pub fn tuple_score(candidate: &[Element], reference: &[Element], mode: MatchMode) -> f64 {
    assert_eq!(candidate.len(), reference.len(), "tuples of different arity");
    let n = candidate.len();
    if n == 0 {
        return 0.0;
    }
    let positional = || -> f64 {
        candidate
            .iter()
            .zip(reference)
            .map(|(c, r)| element_match(c, r, mode))
            .sum()
    };
    let total = if mode.permutes() {
        let table: Vec<Vec<f64>> = candidate
            .iter()
            .map(|c| reference.iter().map(|r| element_match(c, r, mode)).collect())
            .collect();
        (0..n)
            .permutations(n)
            .map(|p| p.iter().enumerate().map(|(i, &j)| table[i][j]).sum::<f64>())
            .fold(0.0, f64::max)
    } else {
        positional()
    };
    total / n as f64
}
