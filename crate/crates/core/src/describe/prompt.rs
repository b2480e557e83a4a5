//! Description prompts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::style::TimestampStyle;
use super::{DescribeError, Result};
use crate::tkg::{DayStamp, ExampleQuadruple, Relation};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    #[default]
    Single,
    Multi,
}

impl Setup {
    pub fn admits(self, n: usize) -> bool {
        match self {
            Setup::Single => n == 1,
            Setup::Multi => (2..=4).contains(&n),
        }
    }
}

/// Natural-language definition per relation. A linearized relation falls
/// back to the definition of its base relation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationDefinitions(pub BTreeMap<String, String>);

impl RelationDefinitions {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| DescribeError::Io {
            path: path.to_owned(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| DescribeError::Definitions(format!("{}: {e}", path.display())))
    }

    pub fn get(&self, r: &Relation) -> Option<&str> {
        self.0
            .get(&r.name())
            .or_else(|| self.0.get(r.base()))
            .map(String::as_str)
    }

    /// Fails on the first relation without a definition.
    pub fn check<'a>(&self, relations: impl IntoIterator<Item = &'a Relation>) -> Result<()> {
        for r in relations {
            if self.get(r).is_none() {
                return Err(DescribeError::MissingDefinition(r.name()));
            }
        }
        Ok(())
    }
}

/// Everything that determines one prompt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub setup: Setup,
    pub quadruples: Vec<ExampleQuadruple>,
    pub style: TimestampStyle,
    /// Publication date shown in a headline, when one is requested.
    pub headline: Option<DayStamp>,
}

impl PromptSpec {
    pub fn render_quadruple(&self, q: &ExampleQuadruple) -> String {
        format!(
            "({}, {}, {}, {})",
            q.subject_label,
            q.relation,
            q.object_label,
            self.style.render(q.timestamp)
        )
    }
}

const HEADLINE: &str = "The current date is $CURRENT_DATE. In addition to the date of the event, indicate the current date at the top of your text as part of a news headline.";

pub fn build_prompt(spec: &PromptSpec, definitions: &RelationDefinitions) -> Result<String> {
    definitions.check(spec.quadruples.iter().map(|q| &q.relation))?;
    let mut out = match spec.setup {
        Setup::Single => {
            let q = spec.quadruples.first().ok_or(DescribeError::Shape {
                setup: spec.setup,
                count: 0,
            })?;
            format!(
                "Given the following event represented as a quadruplet of the form (subject, relation, object, timestamp):\n\n\
                 {}\n\n\
                 The following definition for the {} relation:\n\n\
                 {}\n\n\
                 Generate a one to three sentences description text for this event, in the style of a newspaper.\n\
                 You can add additional details, but the entirety of the information in the given quadruplet must be preserved.\n\
                 Do NOT add any additional information or text: you must only generate the description.\n",
                spec.render_quadruple(q),
                q.relation,
                definitions.get(&q.relation).expect("checked"),
            )
        }
        Setup::Multi => {
            let quads: Vec<String> = spec.quadruples.iter().map(|q| spec.render_quadruple(q)).collect();
            let mut seen = Vec::new();
            for q in &spec.quadruples {
                if !seen.contains(&&q.relation) {
                    seen.push(&q.relation);
                }
            }
            let defs: Vec<String> = seen
                .iter()
                .map(|r| format!("{r}: {}", definitions.get(r).expect("checked")))
                .collect();
            format!(
                "Given the following events represented as quadruplets of the form (subject, relation, object, timestamp):\n\n\
                 {}\n\n\
                 and the following definitions for the relations:\n\n\
                 {}\n\n\
                 Generate a short paragraph describing these events, in the style of a newspaper.\n\
                 You can add additional details, but the entirety of the information in the given quadruplets must be preserved.\n\
                 Do NOT add any additional information or text: you must only generate the description.\n",
                quads.join("\n"),
                defs.join("\n"),
            )
        }
    };
    if let Some(date) = spec.headline {
        out.push('\n');
        out.push_str(&HEADLINE.replace("$CURRENT_DATE", &spec.style.render(date)));
        out.push('\n');
    }
    Ok(out)
}
