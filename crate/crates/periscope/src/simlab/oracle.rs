//! Deterministic model oracles. A script file gives every prompt role a
//! rule list and a mandatory default; actions are fixed text, refusal,
//! malformed output, or grounded answers computed from the bound world.
//! Grounding keys off the same evidence the real pipeline would show a
//! model, so information flows through the cascade, not around it.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use async_trait::async_trait;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gateway::{
    pseudo_token_count, ModelBackend, ModelRequest, PromptRole, RawCompletion,
    SCRIPTED_REFUSAL_TEXT,
};
use crate::knowledge::Tier;
use crate::retrieval::canonicalize_url;

use super::reachability::seed_queries;
use super::world::{PlantedFact, SyntheticWorld, WorldDocument};

/// Marker line format carrying one planted fact through evidence text.
pub fn fact_line(key: &str, value: &str) -> String {
    format!("[fact] {key} :: {value}")
}

/// Parse every fact marker line out of a block of text.
pub fn parse_fact_lines(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|line| {
            line.trim()
                .strip_prefix("[fact] ")
                .and_then(|rest| rest.split_once(" :: "))
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

fn header_value<'t>(text: &'t str, header: &str) -> Option<&'t str> {
    text.lines()
        .find_map(|line| line.trim().strip_prefix(header))
        .map(|v| v.trim())
}

/// Entry keys listed in a rendered knowledge context.
fn context_keys(context: &str) -> Vec<String> {
    context
        .lines()
        .filter_map(|line| {
            line.trim()
                .strip_prefix("- ")
                .and_then(|rest| rest.split_once(" :: "))
                .map(|(k, _)| k.trim().to_string())
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Script file
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundedMode {
    /// Answer truthfully from the world; fabricated plants are ignored.
    Faithful,
    /// Copy page content as-is, fabricated plants included.
    Verbatim,
}

#[derive(Debug, Clone)]
pub enum OracleAction {
    Respond(String),
    Refuse,
    Malformed(String),
    Grounded(GroundedMode),
}

#[derive(Debug, Clone)]
pub enum MatchCond {
    EvidenceContains(String),
    ContextContains(String),
    SystemContains(String),
}

impl MatchCond {
    fn matches(&self, request: &ModelRequest) -> bool {
        match self {
            MatchCond::EvidenceContains(s) => request.evidence.contains(s.as_str()),
            MatchCond::ContextContains(s) => request.knowledge_context.contains(s.as_str()),
            MatchCond::SystemContains(s) => request.system_text.contains(s.as_str()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleRule {
    pub when: MatchCond,
    pub action: OracleAction,
}

#[derive(Debug, Clone)]
pub struct RoleBehavior {
    pub rules: Vec<OracleRule>,
    pub default: OracleAction,
}

/// Per-role deterministic behavior with a required default, so the oracle
/// is total over anything a world can generate.
#[derive(Debug, Clone)]
pub struct OracleScript {
    pub name: String,
    /// Refuse any request that arrives with the guardrail applied.
    pub refuse_when_guardrailed: bool,
    roles: BTreeMap<PromptRole, RoleBehavior>,
}

#[derive(Debug, Deserialize)]
struct OracleFile {
    name: String,
    #[serde(default)]
    refuse_when_guardrailed: bool,
    roles: BTreeMap<String, RoleSpec>,
}

#[derive(Debug, Deserialize)]
struct RoleSpec {
    default: ActionSpec,
    #[serde(default)]
    rules: Vec<RuleSpec>,
}

#[derive(Debug, Deserialize)]
struct RuleSpec {
    when: WhenSpec,
    #[serde(flatten)]
    action: ActionSpec,
}

#[derive(Debug, Default, Deserialize)]
struct WhenSpec {
    #[serde(default)]
    evidence_contains: Option<String>,
    #[serde(default)]
    context_contains: Option<String>,
    #[serde(default)]
    system_contains: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
struct ActionSpec {
    #[serde(default)]
    respond: Option<String>,
    #[serde(default)]
    refuse: bool,
    #[serde(default)]
    malformed: Option<String>,
    #[serde(default)]
    grounded: Option<String>,
}

impl ActionSpec {
    fn compile(self) -> Result<OracleAction> {
        let grounded = match self.grounded.as_deref() {
            Some("faithful") => Some(GroundedMode::Faithful),
            Some("verbatim") => Some(GroundedMode::Verbatim),
            Some(other) => {
                return Err(Error::OracleScript(format!(
                    "grounded mode {other:?} is not faithful|verbatim"
                )))
            }
            None => None,
        };
        match (self.respond, self.refuse, self.malformed, grounded) {
            (Some(text), false, None, None) => Ok(OracleAction::Respond(text)),
            (None, true, None, None) => Ok(OracleAction::Refuse),
            (None, false, Some(text), None) => Ok(OracleAction::Malformed(text)),
            (None, false, None, Some(mode)) => Ok(OracleAction::Grounded(mode)),
            _ => Err(Error::OracleScript(
                "each action needs exactly one of respond, refuse, malformed, grounded".into(),
            )),
        }
    }
}

impl OracleScript {
    pub fn from_toml(raw: &str) -> Result<Self> {
        let file: OracleFile =
            toml::from_str(raw).map_err(|e| Error::OracleScript(e.to_string()))?;
        let mut roles = BTreeMap::new();
        for (role_name, spec) in file.roles {
            let role = PromptRole::parse(&role_name)?;
            let mut rules = Vec::new();
            for rule in spec.rules {
                let when = match (
                    rule.when.evidence_contains,
                    rule.when.context_contains,
                    rule.when.system_contains,
                ) {
                    (Some(s), None, None) => MatchCond::EvidenceContains(s),
                    (None, Some(s), None) => MatchCond::ContextContains(s),
                    (None, None, Some(s)) => MatchCond::SystemContains(s),
                    _ => {
                        return Err(Error::OracleScript(
                            "each rule needs exactly one match condition".into(),
                        ))
                    }
                };
                rules.push(OracleRule {
                    when,
                    action: rule.action.compile()?,
                });
            }
            roles.insert(
                role,
                RoleBehavior {
                    rules,
                    default: spec.default.compile()?,
                },
            );
        }
        for role in PromptRole::ALL {
            if !roles.contains_key(&role) {
                return Err(Error::OracleScript(format!(
                    "role {role} has no behavior; a default per role is required"
                )));
            }
        }
        Ok(OracleScript {
            name: file.name,
            refuse_when_guardrailed: file.refuse_when_guardrailed,
            roles,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::from_toml(&raw)
    }

    /// Resolve a builtin script name or a file path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        match builtin(name_or_path) {
            Some(raw) => Self::from_toml(raw),
            None => Self::from_file(Path::new(name_or_path)),
        }
    }

    fn action_for(&self, request: &ModelRequest) -> &OracleAction {
        let behavior = &self.roles[&request.role];
        behavior
            .rules
            .iter()
            .find(|rule| rule.when.matches(request))
            .map(|rule| &rule.action)
            .unwrap_or(&behavior.default)
    }
}

/// Builtin oracle script sources shipped with the crate.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "perfect" => Some(include_str!("../../oracles/perfect.toml")),
        "obedient" => Some(include_str!("../../oracles/obedient.toml")),
        "ignoring" => Some(include_str!("../../oracles/ignoring.toml")),
        "gullible" => Some(include_str!("../../oracles/gullible.toml")),
        "injectable" => Some(include_str!("../../oracles/injectable.toml")),
        _ => None,
    }
}

pub const BUILTIN_ORACLES: &[&str] = &["perfect", "obedient", "ignoring", "gullible", "injectable"];

// ---------------------------------------------------------------------------
// World-bound oracle backend
// ---------------------------------------------------------------------------

/// A scripted oracle bound to a world, usable as a gateway backend.
pub struct WorldOracle {
    script: OracleScript,
    world: Arc<SyntheticWorld>,
}

impl WorldOracle {
    pub fn new(script: OracleScript, world: Arc<SyntheticWorld>) -> Self {
        WorldOracle { script, world }
    }

    pub fn script_name(&self) -> &str {
        &self.script.name
    }

    fn grounded(&self, mode: GroundedMode, request: &ModelRequest) -> String {
        match request.role {
            PromptRole::Query => {
                let queries = seed_queries(&self.world.seed);
                serde_json::json!({ "queries": queries }).to_string()
            }
            PromptRole::Score => {
                let doc = self.doc_from_header(&request.evidence, "url:: ");
                let value = match doc {
                    Some(d) if !d.noise => 0.9,
                    _ => 0.1,
                };
                serde_json::json!({
                    "relevance": value,
                    "novelty": value,
                    "potential_value": value
                })
                .to_string()
            }
            PromptRole::Extract => {
                let Some(doc) = self.doc_from_header(&request.evidence, "url:: ") else {
                    return serde_json::json!({
                        "reduced_text": "", "links": [], "images": []
                    })
                    .to_string();
                };
                let mut reduced = format!("source:: {}\n", doc.url);
                let mut any = false;
                for fact in visible_facts(&doc.facts, mode) {
                    reduced.push_str(&fact_line(&fact.key, &fact.value));
                    reduced.push('\n');
                    any = true;
                }
                if !any {
                    reduced.push_str("(no target facts on this page)\n");
                }
                let images: Vec<&String> = doc
                    .asset_urls
                    .iter()
                    .filter(|u| {
                        self.world
                            .assets
                            .get(*u)
                            .map(|a| a.mime.starts_with("image/"))
                            .unwrap_or(false)
                    })
                    .collect();
                serde_json::json!({
                    "reduced_text": reduced,
                    "links": doc.links,
                    "images": images,
                })
                .to_string()
            }
            PromptRole::Verify => {
                let score = match self.doc_from_header(&request.evidence, "source:: ") {
                    Some(doc) if doc.decoy => 0.2,
                    Some(_) => 1.0,
                    None => 0.0,
                };
                serde_json::json!({ "score": score }).to_string()
            }
            PromptRole::Visual => {
                let asset = request.image_payloads.first().and_then(|img| {
                    let hash = hex::encode(Sha256::digest(&img.bytes));
                    self.world.asset_by_hash(&hash)
                });
                match asset {
                    Some(asset) => {
                        let mut transcription = asset.caption.clone();
                        for fact in visible_facts(&asset.facts, mode) {
                            transcription.push('\n');
                            transcription.push_str(&fact_line(&fact.key, &fact.value));
                        }
                        serde_json::json!({
                            "transcribed_text": transcription,
                            "geospatial_clues": asset.geospatial_clues,
                            "persons": asset.persons,
                        })
                        .to_string()
                    }
                    None => serde_json::json!({
                        "transcribed_text": "", "geospatial_clues": [], "persons": []
                    })
                    .to_string(),
                }
            }
            PromptRole::Operate => {
                let ops: Vec<serde_json::Value> = parse_fact_lines(&request.evidence)
                    .into_iter()
                    .map(|(key, value)| {
                        let provenance = match self.planted_tier(&key) {
                            Some(Tier::Dii) | None => "explicit",
                            Some(Tier::Cii) | Some(Tier::Ami) => "inferred",
                        };
                        serde_json::json!({
                            "key": key,
                            "fact": value,
                            "action": "add",
                            "provenance": provenance,
                            "rationale": "stated in verified evidence",
                        })
                    })
                    .collect();
                serde_json::json!({ "operations": ops }).to_string()
            }
            PromptRole::Aggregate => {
                let keys = context_keys(&request.knowledge_context);
                let insights: Vec<serde_json::Value> = self
                    .world
                    .insights
                    .iter()
                    .filter(|spec| spec.requires_keys.iter().all(|k| keys.contains(k)))
                    .map(|spec| {
                        serde_json::json!({
                            "statement": spec.statement,
                            "supporting_keys": spec.requires_keys,
                            "category": spec.category.to_string(),
                        })
                    })
                    .collect();
                serde_json::json!({
                    "feedback": {
                        "completeness_notes": "knowledge reviewed against the seed anchor",
                        "directions": [],
                    },
                    "insights": insights,
                })
                .to_string()
            }
        }
    }

    fn doc_from_header(&self, evidence: &str, header: &str) -> Option<&WorldDocument> {
        let raw = header_value(evidence, header)?;
        let canonical = canonicalize_url(raw).ok()?;
        self.world.documents.get(&canonical)
    }

    fn planted_tier(&self, key: &str) -> Option<Tier> {
        let key = crate::knowledge::canonical_key(key);
        self.world
            .documents
            .values()
            .flat_map(|d| d.facts.iter())
            .chain(self.world.assets.values().flat_map(|a| a.facts.iter()))
            .find(|f| f.key == key)
            .map(|f| f.tier)
    }
}

fn visible_facts(facts: &[PlantedFact], mode: GroundedMode) -> impl Iterator<Item = &PlantedFact> {
    facts
        .iter()
        .filter(move |f| mode == GroundedMode::Verbatim || !f.fake)
}

#[async_trait]
impl ModelBackend for WorldOracle {
    async fn complete_raw(&self, request: &ModelRequest) -> Result<RawCompletion> {
        let text = if self.script.refuse_when_guardrailed && request.is_guardrailed() {
            SCRIPTED_REFUSAL_TEXT.to_string()
        } else {
            match self.script.action_for(request) {
                OracleAction::Respond(text) => text.clone(),
                OracleAction::Refuse => SCRIPTED_REFUSAL_TEXT.to_string(),
                OracleAction::Malformed(text) => text.clone(),
                OracleAction::Grounded(mode) => self.grounded(*mode, request),
            }
        };
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
        "world-oracle"
    }
}
