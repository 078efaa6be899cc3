//! Model request/response types and the guardrail policy.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::parse::Outcome;
use super::role::{PromptRole, DEFAULT_GUARDRAIL_TEXT};

/// Binary image attached to a Visual-role request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePayload {
    pub mime: String,
    pub bytes: Vec<u8>,
}

/// One request to a model backend.
///
/// Evidence must be empty for the Query and Aggregate roles; images are
/// only valid on the Visual role. Both are enforced at construction.
#[derive(Debug, Clone)]
pub struct ModelRequest {
    pub role: PromptRole,
    pub system_text: String,
    pub knowledge_context: String,
    pub evidence: String,
    pub image_payloads: Vec<ImagePayload>,
    guardrail_applied: bool,
}

impl ModelRequest {
    pub fn new(
        role: PromptRole,
        system_text: String,
        knowledge_context: String,
        evidence: String,
    ) -> Result<Self> {
        if matches!(role, PromptRole::Query | PromptRole::Aggregate) && !evidence.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{role} requests take no evidence"
            )));
        }
        Ok(ModelRequest {
            role,
            system_text,
            knowledge_context,
            evidence,
            image_payloads: Vec::new(),
            guardrail_applied: false,
        })
    }

    pub fn with_images(mut self, images: Vec<ImagePayload>) -> Result<Self> {
        if self.role != PromptRole::Visual && !images.is_empty() {
            return Err(Error::InvalidInput(format!(
                "{} requests take no image payloads",
                self.role
            )));
        }
        self.image_payloads = images;
        Ok(self)
    }

    pub fn is_guardrailed(&self) -> bool {
        self.guardrail_applied
    }
}

/// System-prompt guardrail injected ahead of every request when enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuardrailPolicy {
    pub enabled: bool,
    pub guardrail_text: String,
}

impl Default for GuardrailPolicy {
    fn default() -> Self {
        GuardrailPolicy {
            enabled: false,
            guardrail_text: DEFAULT_GUARDRAIL_TEXT.to_string(),
        }
    }
}

impl GuardrailPolicy {
    pub fn enabled_default_text() -> Self {
        GuardrailPolicy {
            enabled: true,
            ..Default::default()
        }
    }
}

/// Prepend the guardrail to the request's system text when the policy is
/// enabled. Applying the same policy twice never double-prepends.
pub fn with_guardrail(mut request: ModelRequest, policy: &GuardrailPolicy) -> ModelRequest {
    if !policy.enabled || request.guardrail_applied {
        return request;
    }
    request.system_text = format!("{}\n\n{}", policy.guardrail_text, request.system_text);
    request.guardrail_applied = true;
    request
}

/// Token counts for one completed call.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input: u64,
    pub output: u64,
}

impl TokenUsage {
    pub fn total(&self) -> u64 {
        self.input + self.output
    }
}

/// Classified response for one request.
#[derive(Debug, Clone)]
pub struct ModelResponse {
    pub outcome: Outcome,
    pub token_usage: TokenUsage,
    pub latency: Duration,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evidence_rules_enforced() {
        assert!(ModelRequest::new(PromptRole::Query, "s".into(), "c".into(), "ev".into()).is_err());
        assert!(
            ModelRequest::new(PromptRole::Aggregate, "s".into(), "c".into(), "ev".into()).is_err()
        );
        assert!(ModelRequest::new(PromptRole::Score, "s".into(), "c".into(), "ev".into()).is_ok());
    }

    #[test]
    fn image_rules_enforced() {
        let img = ImagePayload {
            mime: "image/jpeg".into(),
            bytes: vec![1, 2],
        };
        let visual = ModelRequest::new(PromptRole::Visual, "s".into(), "c".into(), "e".into())
            .unwrap()
            .with_images(vec![img.clone()]);
        assert!(visual.is_ok());
        let score = ModelRequest::new(PromptRole::Score, "s".into(), "c".into(), "e".into())
            .unwrap()
            .with_images(vec![img]);
        assert!(score.is_err());
    }

    #[test]
    fn guardrail_disabled_is_identity() {
        let req =
            ModelRequest::new(PromptRole::Score, "S".into(), "c".into(), "e".into()).unwrap();
        let policy = GuardrailPolicy::default();
        let out = with_guardrail(req, &policy);
        assert_eq!(out.system_text, "S");
        assert!(!out.is_guardrailed());
    }

    #[test]
    fn guardrail_prepends_and_is_idempotent() {
        let req =
            ModelRequest::new(PromptRole::Score, "S".into(), "c".into(), "e".into()).unwrap();
        let policy = GuardrailPolicy::enabled_default_text();
        let once = with_guardrail(req, &policy);
        assert!(once.system_text.starts_with(&policy.guardrail_text));
        assert!(once.system_text.ends_with("S"));
        let twice = with_guardrail(once.clone(), &policy);
        assert_eq!(once.system_text, twice.system_text);
    }
}
