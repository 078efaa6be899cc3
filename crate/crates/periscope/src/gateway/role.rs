//! Prompt roles, their templates, and the structured payloads each role's
//! responses must parse into.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The seven prompt roles the engine invokes a model under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptRole {
    Query,
    Score,
    Extract,
    Verify,
    Visual,
    Operate,
    Aggregate,
}

impl PromptRole {
    pub const ALL: [PromptRole; 7] = [
        PromptRole::Query,
        PromptRole::Score,
        PromptRole::Extract,
        PromptRole::Verify,
        PromptRole::Visual,
        PromptRole::Operate,
        PromptRole::Aggregate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PromptRole::Query => "query",
            PromptRole::Score => "score",
            PromptRole::Extract => "extract",
            PromptRole::Verify => "verify",
            PromptRole::Visual => "visual",
            PromptRole::Operate => "operate",
            PromptRole::Aggregate => "aggregate",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "query" => Ok(PromptRole::Query),
            "score" => Ok(PromptRole::Score),
            "extract" => Ok(PromptRole::Extract),
            "verify" => Ok(PromptRole::Verify),
            "visual" => Ok(PromptRole::Visual),
            "operate" => Ok(PromptRole::Operate),
            "aggregate" => Ok(PromptRole::Aggregate),
            other => Err(Error::InvalidInput(format!("unknown prompt role {other:?}"))),
        }
    }

    /// The built-in template for this role.
    pub fn default_template(&self) -> &'static str {
        match self {
            PromptRole::Query => include_str!("../../prompts/query.txt"),
            PromptRole::Score => include_str!("../../prompts/score.txt"),
            PromptRole::Extract => include_str!("../../prompts/extract.txt"),
            PromptRole::Verify => include_str!("../../prompts/verify.txt"),
            PromptRole::Visual => include_str!("../../prompts/visual.txt"),
            PromptRole::Operate => include_str!("../../prompts/operate.txt"),
            PromptRole::Aggregate => include_str!("../../prompts/aggregate.txt"),
        }
    }
}

impl fmt::Display for PromptRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The default guardrail text injected when the guardrail policy is enabled.
pub const DEFAULT_GUARDRAIL_TEXT: &str = include_str!("../../prompts/guardrail.txt");

/// Template set for all roles, overridable from a directory of
/// `<role>.txt` files.
#[derive(Debug, Clone)]
pub struct PromptSet {
    templates: BTreeMap<PromptRole, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        let templates = PromptRole::ALL
            .iter()
            .map(|r| (*r, r.default_template().to_string()))
            .collect();
        PromptSet { templates }
    }
}

impl PromptSet {
    /// Load overrides from `dir`; roles without a file keep the built-in
    /// template.
    pub fn with_overrides(dir: &Path) -> Result<Self> {
        let mut set = PromptSet::default();
        for role in PromptRole::ALL {
            let path = dir.join(format!("{role}.txt"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| Error::io(path.display().to_string(), e))?;
                set.templates.insert(role, text);
            }
        }
        Ok(set)
    }

    pub fn template(&self, role: PromptRole) -> &str {
        &self.templates[&role]
    }

    /// Render a role's template, substituting `{placeholder}` markers.
    /// Unknown markers are left untouched.
    pub fn render(&self, role: PromptRole, substitutions: &[(&str, &str)]) -> String {
        let mut text = self.template(role).to_string();
        for (name, value) in substitutions {
            text = text.replace(&format!("{{{name}}}"), value);
        }
        text
    }
}

/// Raw model-proposed knowledge operation, prior to validation and
/// stamping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawOperation {
    pub key: String,
    #[serde(default)]
    pub fact: String,
    pub action: String,
    #[serde(default)]
    pub provenance: Option<String>,
    #[serde(default)]
    pub rationale: String,
}

/// Raw model feedback block.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawFeedback {
    #[serde(default)]
    pub completeness_notes: String,
    #[serde(default)]
    pub directions: Vec<String>,
}

/// Raw model insight, prior to validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawInsight {
    pub statement: String,
    #[serde(default)]
    pub supporting_keys: Vec<String>,
    #[serde(default)]
    pub category: Option<String>,
}

/// Parsed, schema-valid payload for one role's response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RolePayload {
    Queries {
        queries: Vec<String>,
    },
    Score {
        relevance: f64,
        novelty: f64,
        potential_value: f64,
    },
    Extraction {
        reduced_text: String,
        links: Vec<String>,
        images: Vec<String>,
    },
    Verification {
        score: f64,
    },
    Visual {
        transcribed_text: String,
        geospatial_clues: Vec<String>,
        persons: Vec<String>,
    },
    Operations {
        operations: Vec<RawOperation>,
    },
    Aggregation {
        feedback: RawFeedback,
        insights: Vec<RawInsight>,
    },
}
