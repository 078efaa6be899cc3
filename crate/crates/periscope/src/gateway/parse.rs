//! Classify raw model text into a parsed payload, a refusal, or a parse
//! error. One repair pass (fence stripping, first balanced object) runs
//! before giving up.

use serde::Deserialize;

use super::role::{PromptRole, RawFeedback, RawInsight, RawOperation, RolePayload};

/// Lexical refusal markers. Matching is case-insensitive substring search;
/// an all-whitespace response also counts as a refusal.
pub const DEFAULT_REFUSAL_PATTERNS: &[&str] = &[
    "i cannot assist",
    "i can't assist",
    "i cannot help",
    "i can't help",
    "i am unable to help",
    "i'm unable to help",
    "i must decline",
    "i won't help",
    "i will not help",
    "cannot comply",
    "can't comply",
    "i'm sorry, but i can",
    "unable to assist with identifying",
    "not able to help identify",
    "refuse this request",
    "against my policy",
    "privacy harm",
];

/// True iff `text` matches the refusal pattern set or is effectively empty.
pub fn detect_refusal(text: &str, patterns: &[String]) -> bool {
    if text.trim().is_empty() {
        return true;
    }
    let lower = text.to_lowercase();
    patterns.iter().any(|p| lower.contains(&p.to_lowercase()))
}

pub fn default_refusal_patterns() -> Vec<String> {
    DEFAULT_REFUSAL_PATTERNS
        .iter()
        .map(|s| s.to_string())
        .collect()
}

/// Classification outcome of one raw completion.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Parsed(RolePayload),
    Refusal,
    ParseError(String),
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Parsed(_) => "parsed",
            Outcome::Refusal => "refusal",
            Outcome::ParseError(_) => "parse_error",
        }
    }
}

/// Classify raw text against `role`'s schema. Parse is attempted first so
/// well-formed payloads that merely mention refusal phrases inside field
/// values stay parsed; refusal detection runs on the leftovers.
pub fn classify(role: PromptRole, raw: &str, refusal_patterns: &[String]) -> Outcome {
    if let Some(payload) = try_parse(role, raw) {
        return Outcome::Parsed(payload);
    }
    if detect_refusal(raw, refusal_patterns) {
        return Outcome::Refusal;
    }
    Outcome::ParseError(raw.to_string())
}

fn try_parse(role: PromptRole, raw: &str) -> Option<RolePayload> {
    let candidate = repair(raw)?;
    parse_for_role(role, &candidate)
}

/// Extract the first balanced JSON object, tolerating markdown fences and
/// prose around it.
fn repair(raw: &str) -> Option<String> {
    let trimmed = raw.trim();
    let body = strip_fences(trimmed);
    first_balanced_object(body)
}

fn strip_fences(text: &str) -> &str {
    let t = text.trim();
    if let Some(rest) = t.strip_prefix("```") {
        // drop an optional language tag on the fence line
        let rest = rest.split_once('\n').map(|(_, b)| b).unwrap_or(rest);
        if let Some(inner) = rest.rsplit_once("```") {
            return inner.0.trim();
        }
        return rest.trim();
    }
    t
}

fn first_balanced_object(text: &str) -> Option<String> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (offset, ch) in text[start..].char_indices() {
        if in_string {
            if escaped {
                escaped = false;
            } else if ch == '\\' {
                escaped = true;
            } else if ch == '"' {
                in_string = false;
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(text[start..start + offset + 1].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

fn parse_for_role(role: PromptRole, json: &str) -> Option<RolePayload> {
    match role {
        PromptRole::Query => {
            #[derive(Deserialize)]
            struct Msg {
                queries: Vec<String>,
            }
            serde_json::from_str::<Msg>(json)
                .ok()
                .map(|m| RolePayload::Queries { queries: m.queries })
        }
        PromptRole::Score => {
            #[derive(Deserialize)]
            struct Msg {
                relevance: f64,
                novelty: f64,
                potential_value: f64,
            }
            serde_json::from_str::<Msg>(json).ok().map(|m| RolePayload::Score {
                relevance: m.relevance,
                novelty: m.novelty,
                potential_value: m.potential_value,
            })
        }
        PromptRole::Extract => {
            #[derive(Deserialize)]
            struct Msg {
                reduced_text: String,
                #[serde(default)]
                links: Vec<String>,
                #[serde(default)]
                images: Vec<String>,
            }
            serde_json::from_str::<Msg>(json)
                .ok()
                .map(|m| RolePayload::Extraction {
                    reduced_text: m.reduced_text,
                    links: m.links,
                    images: m.images,
                })
        }
        PromptRole::Verify => {
            #[derive(Deserialize)]
            struct Msg {
                score: f64,
            }
            serde_json::from_str::<Msg>(json)
                .ok()
                .map(|m| RolePayload::Verification { score: m.score })
        }
        PromptRole::Visual => {
            #[derive(Deserialize)]
            struct Msg {
                #[serde(default)]
                transcribed_text: String,
                #[serde(default)]
                geospatial_clues: Vec<String>,
                #[serde(default)]
                persons: Vec<String>,
            }
            serde_json::from_str::<Msg>(json).ok().map(|m| RolePayload::Visual {
                transcribed_text: m.transcribed_text,
                geospatial_clues: m.geospatial_clues,
                persons: m.persons,
            })
        }
        PromptRole::Operate => {
            #[derive(Deserialize)]
            struct Msg {
                operations: Vec<RawOperation>,
            }
            serde_json::from_str::<Msg>(json)
                .ok()
                .map(|m| RolePayload::Operations {
                    operations: m.operations,
                })
        }
        PromptRole::Aggregate => {
            #[derive(Deserialize)]
            struct Msg {
                #[serde(default)]
                feedback: RawFeedback,
                #[serde(default)]
                insights: Vec<RawInsight>,
            }
            serde_json::from_str::<Msg>(json)
                .ok()
                .map(|m| RolePayload::Aggregation {
                    feedback: m.feedback,
                    insights: m.insights,
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refusal_examples() {
        let patterns = default_refusal_patterns();
        assert!(detect_refusal(
            "I cannot assist with identifying private individuals",
            &patterns
        ));
        assert!(!detect_refusal("{\"queries\": [\"a\"]}", &patterns));
        assert!(detect_refusal("", &patterns));
        assert!(detect_refusal("   \n ", &patterns));
    }

    #[test]
    fn classify_parses_well_formed_payloads() {
        let patterns = default_refusal_patterns();
        match classify(PromptRole::Query, "{\"queries\": [\"q1\", \"q2\"]}", &patterns) {
            Outcome::Parsed(RolePayload::Queries { queries }) => {
                assert_eq!(queries, vec!["q1", "q2"])
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_repairs_fenced_output() {
        let patterns = default_refusal_patterns();
        let raw = "Sure, here you go:\n```json\n{\"score\": 0.7}\n```\n";
        match classify(PromptRole::Verify, raw, &patterns) {
            Outcome::Parsed(RolePayload::Verification { score }) => assert_eq!(score, 0.7),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn truncated_payload_is_a_parse_error_not_parsed() {
        let patterns = default_refusal_patterns();
        let raw = "{\"operations\": [{\"key\": \"x\", \"ac";
        match classify(PromptRole::Operate, raw, &patterns) {
            Outcome::ParseError(text) => assert!(text.contains("operations")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn refusal_text_inside_parsed_field_stays_parsed() {
        let patterns = default_refusal_patterns();
        let raw = "{\"reduced_text\": \"the page says: i cannot help feeling lucky\", \"links\": [], \"images\": []}";
        assert!(matches!(
            classify(PromptRole::Extract, raw, &patterns),
            Outcome::Parsed(_)
        ));
    }

    #[test]
    fn wrong_schema_for_role_fails() {
        let patterns = default_refusal_patterns();
        assert!(matches!(
            classify(PromptRole::Score, "{\"queries\": []}", &patterns),
            Outcome::ParseError(_)
        ));
    }
}
