//! Uniform interface to text and vision models for all seven prompt roles,
//! with structured-output parsing, refusal detection, token accounting and
//! optional guardrail injection.

mod backend;
mod parse;
mod request;
mod role;
mod usage;

use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::error::Result;

pub use backend::{
    pseudo_token_count, request_hash, HttpBackend, HttpBackendConfig, ModelBackend, RawCompletion,
    ScriptedBackend, SCRIPTED_REFUSAL_TEXT,
};
pub use parse::{classify, default_refusal_patterns, detect_refusal, Outcome};
pub use request::{
    with_guardrail, GuardrailPolicy, ImagePayload, ModelRequest, ModelResponse, TokenUsage,
};
pub use role::{
    PromptRole, PromptSet, RawFeedback, RawInsight, RawOperation, RolePayload,
    DEFAULT_GUARDRAIL_TEXT,
};
pub use usage::{CallRecord, UsageAccumulator, UsageReport};

/// Front door for all model calls. Reentrant and thread-safe: concurrent
/// in-flight requests are fine, accounting uses atomic accumulation.
pub struct Gateway {
    backend: Arc<dyn ModelBackend>,
    policy: GuardrailPolicy,
    /// Roles the guardrail applies to when the policy is enabled; `None`
    /// means every role.
    guardrail_roles: Option<BTreeSet<PromptRole>>,
    refusal_patterns: Vec<String>,
    usage: UsageAccumulator,
    log: Mutex<Vec<CallRecord>>,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ModelBackend>) -> Self {
        Gateway {
            backend,
            policy: GuardrailPolicy::default(),
            guardrail_roles: None,
            refusal_patterns: default_refusal_patterns(),
            usage: UsageAccumulator::default(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn with_policy(mut self, policy: GuardrailPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Restrict guardrail injection to the given roles. Used by the defense
    /// harness to attack one stage at a time.
    pub fn with_guardrail_roles(mut self, roles: BTreeSet<PromptRole>) -> Self {
        self.guardrail_roles = Some(roles);
        self
    }

    pub fn with_refusal_patterns(mut self, patterns: Vec<String>) -> Self {
        self.refusal_patterns = patterns;
        self
    }

    pub fn policy(&self) -> &GuardrailPolicy {
        &self.policy
    }

    fn guardrail_applies(&self, role: PromptRole) -> bool {
        self.policy.enabled
            && self
                .guardrail_roles
                .as_ref()
                .map(|roles| roles.contains(&role))
                .unwrap_or(true)
    }

    /// Send one request: inject the guardrail if configured, call the
    /// backend (which owns transport retries), classify the raw text
    /// against the role schema, and record usage and the call log entry.
    pub async fn complete(&self, request: ModelRequest) -> Result<ModelResponse> {
        let request = if self.guardrail_applies(request.role) {
            with_guardrail(request, &self.policy)
        } else {
            request
        };
        let role = request.role;
        let guardrailed = request.is_guardrailed();
        let started = Instant::now();
        let raw = self.backend.complete_raw(&request).await?;
        let latency = started.elapsed();

        let outcome = classify(role, &raw.text, &self.refusal_patterns);
        self.usage
            .record(raw.input_tokens, raw.output_tokens, latency, outcome.label());
        self.log.lock().expect("call log lock").push(CallRecord {
            role,
            outcome: outcome.label().to_string(),
            input_tokens: raw.input_tokens,
            output_tokens: raw.output_tokens,
            latency_ms: latency.as_millis() as u64,
            guardrailed,
        });

        Ok(ModelResponse {
            outcome,
            token_usage: TokenUsage {
                input: raw.input_tokens,
                output: raw.output_tokens,
            },
            latency,
        })
    }

    pub fn usage_report(&self) -> UsageReport {
        self.usage.report()
    }

    pub fn call_log(&self) -> Vec<CallRecord> {
        self.log.lock().expect("call log lock").clone()
    }
}
