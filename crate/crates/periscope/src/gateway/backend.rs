//! Model backends: a chat-completion HTTP endpoint for live use and a
//! deterministic response script for offline runs.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use async_trait::async_trait;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::request::ModelRequest;
use super::role::PromptRole;

/// One raw completion returned by a backend.
#[derive(Debug, Clone)]
pub struct RawCompletion {
    pub text: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
}

#[async_trait]
pub trait ModelBackend: Send + Sync {
    async fn complete_raw(&self, request: &ModelRequest) -> Result<RawCompletion>;

    fn name(&self) -> &str {
        "backend"
    }
}

/// Deterministic whitespace-token count used by offline backends so
/// efficiency metrics stay reproducible.
pub fn pseudo_token_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Stable content hash of a request, usable as a script key.
pub fn request_hash(request: &ModelRequest) -> String {
    let mut hasher = Sha256::new();
    hasher.update(request.role.as_str().as_bytes());
    hasher.update([0]);
    hasher.update(request.system_text.as_bytes());
    hasher.update([0]);
    hasher.update(request.knowledge_context.as_bytes());
    hasher.update([0]);
    hasher.update(request.evidence.as_bytes());
    for image in &request.image_payloads {
        hasher.update([0]);
        hasher.update(&image.bytes);
    }
    hex::encode(hasher.finalize())
}

/// Canonical refusal text emitted by scripted refusals. Shaped like the
/// brief-refusal format the guardrail instructs.
pub const SCRIPTED_REFUSAL_TEXT: &str =
    "I cannot assist with identifying or profiling a private individual; \
     that would risk privacy harm. I can offer general safety guidance instead.";

// ---------------------------------------------------------------------------
// HTTP backend
// ---------------------------------------------------------------------------

/// Settings for a chat-completion style HTTP endpoint.
#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token; resolved
    /// at construction, never logged.
    pub auth_token_env: Option<String>,
    pub transport_attempts: u32,
    pub retry_base: std::time::Duration,
}

impl Default for HttpBackendConfig {
    fn default() -> Self {
        HttpBackendConfig {
            endpoint: String::new(),
            model: String::new(),
            auth_token_env: None,
            transport_attempts: 3,
            retry_base: std::time::Duration::from_millis(250),
        }
    }
}

/// Client for any endpoint speaking the common chat-completion contract:
/// request `{model, messages:[{role, content}]}`, response
/// `{choices:[{message:{content}}], usage:{prompt_tokens, completion_tokens}}`.
pub struct HttpBackend {
    config: HttpBackendConfig,
    token: Option<String>,
    client: reqwest::Client,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Result<Self> {
        if config.endpoint.is_empty() {
            return Err(Error::Config("gateway.endpoint is not set".into()));
        }
        let token = match &config.auth_token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                Error::Config(format!("auth token environment variable {var} is not set"))
            })?),
            None => None,
        };
        Ok(HttpBackend {
            config,
            token,
            client: reqwest::Client::new(),
        })
    }

    fn body_for(&self, request: &ModelRequest) -> serde_json::Value {
        let mut user_content = String::new();
        user_content.push_str(&request.knowledge_context);
        if !request.evidence.is_empty() {
            user_content.push_str("\n\n");
            user_content.push_str(&request.evidence);
        }
        let user: serde_json::Value = if request.image_payloads.is_empty() {
            serde_json::json!({ "role": "user", "content": user_content })
        } else {
            let mut parts = vec![serde_json::json!({ "type": "text", "text": user_content })];
            for image in &request.image_payloads {
                let b64 = base64_encode(&image.bytes);
                parts.push(serde_json::json!({
                    "type": "image_url",
                    "image_url": { "url": format!("data:{};base64,{}", image.mime, b64) }
                }));
            }
            serde_json::json!({ "role": "user", "content": parts })
        };
        serde_json::json!({
            "model": self.config.model,
            "messages": [
                { "role": "system", "content": request.system_text },
                user,
            ],
        })
    }
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

#[derive(Deserialize, Default)]
struct ChatUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
    #[serde(default)]
    usage: Option<ChatUsage>,
}

#[async_trait]
impl ModelBackend for HttpBackend {
    async fn complete_raw(&self, request: &ModelRequest) -> Result<RawCompletion> {
        let body = self.body_for(request);
        let attempts = self.config.transport_attempts.max(1);
        let mut last_err = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                tokio::time::sleep(self.config.retry_base * 2u32.pow(attempt - 1)).await;
            }
            let mut req = self.client.post(&self.config.endpoint).json(&body);
            if let Some(token) = &self.token {
                req = req.bearer_auth(token);
            }
            match req.send().await {
                Ok(resp) if resp.status().is_success() => {
                    let parsed: ChatResponse = resp
                        .json()
                        .await
                        .map_err(|e| Error::Transport(format!("bad completion body: {e}")))?;
                    let text = parsed
                        .choices
                        .into_iter()
                        .next()
                        .map(|c| c.message.content)
                        .unwrap_or_default();
                    let usage = parsed.usage.unwrap_or_default();
                    return Ok(RawCompletion {
                        input_tokens: usage.prompt_tokens,
                        output_tokens: usage.completion_tokens,
                        text,
                    });
                }
                Ok(resp) if resp.status().is_server_error() => {
                    last_err = format!("server error {}", resp.status());
                }
                Ok(resp) => {
                    // 4xx is definitive, retrying cannot help
                    return Err(Error::Transport(format!(
                        "endpoint rejected request: {}",
                        resp.status()
                    )));
                }
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(Error::Transport(format!(
            "{} after {attempts} attempts",
            last_err
        )))
    }

    fn name(&self) -> &str {
        "http"
    }
}

fn base64_encode(bytes: &[u8]) -> String {
    const TABLE: &[u8; 64] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    let mut out = String::with_capacity(bytes.len().div_ceil(3) * 4);
    for chunk in bytes.chunks(3) {
        let b = [
            chunk[0],
            chunk.get(1).copied().unwrap_or(0),
            chunk.get(2).copied().unwrap_or(0),
        ];
        let n = (u32::from(b[0]) << 16) | (u32::from(b[1]) << 8) | u32::from(b[2]);
        out.push(TABLE[(n >> 18) as usize & 63] as char);
        out.push(TABLE[(n >> 12) as usize & 63] as char);
        out.push(if chunk.len() > 1 {
            TABLE[(n >> 6) as usize & 63] as char
        } else {
            '='
        });
        out.push(if chunk.len() > 2 {
            TABLE[n as usize & 63] as char
        } else {
            '='
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Scripted backend
// ---------------------------------------------------------------------------

/// One scripted reply directive.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScriptEntry {
    role: String,
    /// Per-role sequence index this entry answers; omitted entries match in
    /// file order after indexed ones are exhausted.
    #[serde(default)]
    seq: Option<usize>,
    /// Exact request hash this entry answers.
    #[serde(default)]
    hash: Option<String>,
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    refuse: bool,
    #[serde(default)]
    malformed: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
struct ScriptFile {
    #[serde(default, rename = "response")]
    responses: Vec<ScriptEntry>,
    /// role name → default body/refuse/malformed
    #[serde(default)]
    defaults: BTreeMap<String, ScriptDefault>,
}

#[derive(Debug, Clone, Deserialize)]
struct ScriptDefault {
    #[serde(default)]
    body: Option<String>,
    #[serde(default)]
    refuse: bool,
    #[serde(default)]
    malformed: Option<String>,
}

#[derive(Debug, Clone)]
enum Reply {
    Body(String),
    Refuse,
    Malformed(String),
}

impl Reply {
    fn text(&self) -> String {
        match self {
            Reply::Body(b) => b.clone(),
            Reply::Refuse => SCRIPTED_REFUSAL_TEXT.to_string(),
            Reply::Malformed(m) => m.clone(),
        }
    }
}

/// Backend answering from a response script file keyed by request hash or
/// per-role sequence index. Fully deterministic.
pub struct ScriptedBackend {
    by_hash: BTreeMap<(String, String), Reply>,
    by_seq: BTreeMap<(String, usize), Reply>,
    defaults: BTreeMap<String, Reply>,
    counters: Mutex<BTreeMap<String, usize>>,
}

impl ScriptedBackend {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&raw)
    }

    pub fn from_toml(raw: &str) -> Result<Self> {
        let file: ScriptFile =
            toml::from_str(raw).map_err(|e| Error::OracleScript(e.to_string()))?;
        let mut by_hash = BTreeMap::new();
        let mut by_seq = BTreeMap::new();
        let mut auto_seq: BTreeMap<String, usize> = BTreeMap::new();
        for entry in file.responses {
            PromptRole::parse(&entry.role)?;
            let reply = entry_reply(entry.body, entry.refuse, entry.malformed)?;
            if let Some(hash) = entry.hash {
                by_hash.insert((entry.role.clone(), hash), reply);
            } else {
                let seq = entry.seq.unwrap_or_else(|| {
                    let n = auto_seq.entry(entry.role.clone()).or_insert(0);
                    let v = *n;
                    *n += 1;
                    v
                });
                if let Some(explicit) = entry.seq {
                    auto_seq
                        .entry(entry.role.clone())
                        .and_modify(|n| *n = (*n).max(explicit + 1))
                        .or_insert(explicit + 1);
                }
                by_seq.insert((entry.role, seq), reply);
            }
        }
        let mut defaults = BTreeMap::new();
        for (role, d) in file.defaults {
            PromptRole::parse(&role)?;
            defaults.insert(role, entry_reply(d.body, d.refuse, d.malformed)?);
        }
        Ok(ScriptedBackend {
            by_hash,
            by_seq,
            defaults,
            counters: Mutex::new(BTreeMap::new()),
        })
    }
}

fn entry_reply(body: Option<String>, refuse: bool, malformed: Option<String>) -> Result<Reply> {
    match (body, refuse, malformed) {
        (Some(b), false, None) => Ok(Reply::Body(b)),
        (None, true, None) => Ok(Reply::Refuse),
        (None, false, Some(m)) => Ok(Reply::Malformed(m)),
        _ => Err(Error::OracleScript(
            "each entry needs exactly one of body, refuse, malformed".into(),
        )),
    }
}

#[async_trait]
impl ModelBackend for ScriptedBackend {
    async fn complete_raw(&self, request: &ModelRequest) -> Result<RawCompletion> {
        let role = request.role.as_str().to_string();
        let hash = request_hash(request);
        let reply = if let Some(r) = self.by_hash.get(&(role.clone(), hash)) {
            r.clone()
        } else {
            let seq = {
                let mut counters = self.counters.lock().expect("script counter lock");
                let counter = counters.entry(role.clone()).or_insert(0);
                let current = *counter;
                *counter += 1;
                current
            };
            match self.by_seq.get(&(role.clone(), seq)) {
                Some(r) => r.clone(),
                None => self
                    .defaults
                    .get(&role)
                    .cloned()
                    .ok_or_else(|| {
                        Error::Transport(format!(
                            "script has no entry for role {role} call #{seq} and no default"
                        ))
                    })?,
            }
        };
        let text = reply.text();
        let input = pseudo_token_count(&request.system_text)
            + pseudo_token_count(&request.knowledge_context)
            + pseudo_token_count(&request.evidence);
        Ok(RawCompletion {
            input_tokens: input,
            output_tokens: pseudo_token_count(&text),
            text,
        })
    }

    fn name(&self) -> &str {
        "scripted"
    }
}

#[cfg(test)]
mod tests {
    use super::super::request::ModelRequest;
    use super::*;

    fn req(role: PromptRole) -> ModelRequest {
        ModelRequest::new(role, "sys".into(), "ctx".into(), "ev".into()).unwrap()
    }

    #[tokio::test]
    async fn scripted_sequence_and_default() {
        let script = r#"
[[response]]
role = "score"
body = '{"relevance": 0.9, "novelty": 0.8, "potential_value": 0.5}'

[defaults.score]
body = '{"relevance": 0.1, "novelty": 0.1, "potential_value": 0.1}'
"#;
        let backend = ScriptedBackend::from_toml(script).unwrap();
        let first = backend.complete_raw(&req(PromptRole::Score)).await.unwrap();
        assert!(first.text.contains("0.9"));
        let second = backend.complete_raw(&req(PromptRole::Score)).await.unwrap();
        assert!(second.text.contains("0.1"));
    }

    #[tokio::test]
    async fn scripted_refusal_and_missing_role() {
        let script = r#"
[defaults.extract]
refuse = true
"#;
        let backend = ScriptedBackend::from_toml(script).unwrap();
        let out = backend
            .complete_raw(&req(PromptRole::Extract))
            .await
            .unwrap();
        assert!(out.text.contains("cannot assist"));
        assert!(backend.complete_raw(&req(PromptRole::Verify)).await.is_err());
    }

    #[test]
    fn script_entry_must_pick_one_directive() {
        let bad = r#"
[[response]]
role = "score"
body = "x"
refuse = true
"#;
        assert!(ScriptedBackend::from_toml(bad).is_err());
    }

    #[test]
    fn tokens_are_deterministic() {
        assert_eq!(pseudo_token_count("a b  c\nd"), 4);
        assert_eq!(pseudo_token_count(""), 0);
    }

    #[test]
    fn base64_matches_reference() {
        assert_eq!(base64_encode(b"hi"), "aGk=");
        assert_eq!(base64_encode(b"hello"), "aGVsbG8=");
        assert_eq!(base64_encode(b""), "");
    }
}
