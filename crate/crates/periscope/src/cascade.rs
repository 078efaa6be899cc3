//! The multi-stage filtering cascade: coarse snippet scoring against the
//! sum gate, content reduction into evidence bundles, fine-grained identity
//! verification, and visual analysis of attached images.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gateway::{
    Gateway, ImagePayload, ModelRequest, Outcome, PromptRole, RolePayload,
};
use crate::retrieval::{canonicalize_url, SearchResult};

/// Float slack for the threshold gates. Three components of 0.6 sum to
/// 1.7999999999999998 in binary floating point; the boundary must pass.
pub const GATE_EPSILON: f64 = 1e-9;

/// Relevance / novelty / potential-value triple, each clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SnippetScore {
    pub relevance: f64,
    pub novelty: f64,
    pub potential_value: f64,
}

impl SnippetScore {
    pub fn zero() -> Self {
        SnippetScore::default()
    }

    pub fn sum(&self) -> f64 {
        self.relevance + self.novelty + self.potential_value
    }

    /// Clamp every component into [0, 1]; the flag reports whether any
    /// component was out of range.
    pub fn clamped(relevance: f64, novelty: f64, potential_value: f64) -> (Self, bool) {
        let inside =
            |v: f64| (0.0..=1.0).contains(&v) && v.is_finite();
        let was_clamped = !(inside(relevance) && inside(novelty) && inside(potential_value));
        let clamp = |v: f64| if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        (
            SnippetScore {
                relevance: clamp(relevance),
                novelty: clamp(novelty),
                potential_value: clamp(potential_value),
            },
            was_clamped,
        )
    }
}

/// The coarse (φ) and fine (τ) gate thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateThresholds {
    pub phi: f64,
    pub tau: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        GateThresholds { phi: 1.8, tau: 0.6 }
    }
}

impl GateThresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi > 0.0 && self.phi <= 3.0) {
            return Err(Error::Config(format!("phi {} outside (0, 3]", self.phi)));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::Config(format!("tau {} outside (0, 1]", self.tau)));
        }
        Ok(())
    }
}

/// Sum gate: pass iff relevance + novelty + potential_value ≥ φ.
pub fn gate(score: &SnippetScore, thresholds: &GateThresholds) -> bool {
    score.sum() + GATE_EPSILON >= thresholds.phi
}

/// Sum gate plus an optional per-dimension minimum.
pub fn gate_with_min(
    score: &SnippetScore,
    thresholds: &GateThresholds,
    per_dim_min: Option<f64>,
) -> bool {
    if let Some(min) = per_dim_min {
        let passes = |v: f64| v + GATE_EPSILON >= min;
        if !(passes(score.relevance) && passes(score.novelty) && passes(score.potential_value)) {
            return false;
        }
    }
    gate(score, thresholds)
}

/// Reduced representation of one crawled source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub source_url: String,
    pub reduced_text: String,
    /// Canonical URLs of images worth visual analysis.
    pub image_refs: Vec<String>,
    /// Canonical URLs extracted for future crawling.
    pub new_links: Vec<String>,
    /// Set by verification; bundles are accepted iff score ≥ τ.
    pub verification_score: Option<f64>,
}

/// Structured output of one image analysis.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VisualAnalysis {
    pub transcribed_text: String,
    pub geospatial_clues: Vec<String>,
    pub persons_described: Vec<String>,
}

/// A degradation or anomaly inside one cascade call, to be stamped with the
/// iteration by the orchestrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentNote {
    pub stage: String,
    pub kind: String,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
}

impl IncidentNote {
    fn new(stage: &str, kind: &str, detail: impl Into<String>, url: Option<String>) -> Self {
        IncidentNote {
            stage: stage.into(),
            kind: kind.into(),
            detail: detail.into(),
            url,
        }
    }
}

/// Tunables for content reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    /// Words per Extract call; longer pages are chunked.
    pub chunk_words: usize,
    /// Hard cap on a bundle's reduced text, in characters.
    pub reduced_text_cap: usize,
    /// Optional per-dimension score minimum (off by default).
    pub per_dim_min: Option<f64>,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            chunk_words: 8_000,
            reduced_text_cap: 40_000,
            per_dim_min: None,
        }
    }
}

/// Judge one snippet. Refusals, parse errors and transport failures all
/// degrade to the zero triple with an incident; out-of-range components are
/// clamped with a warning.
pub async fn score_snippet(
    gateway: &Gateway,
    snippet: &SearchResult,
    system_text: &str,
    knowledge_context: &str,
) -> (SnippetScore, Vec<IncidentNote>) {
    let evidence = format!("url:: {}\nsnippet:: {}", snippet.url, snippet.snippet);
    let request = match ModelRequest::new(
        PromptRole::Score,
        system_text.to_string(),
        knowledge_context.to_string(),
        evidence,
    ) {
        Ok(req) => req,
        Err(e) => {
            return (
                SnippetScore::zero(),
                vec![IncidentNote::new("scorer", "bad_request", e.to_string(), Some(snippet.url.clone()))],
            )
        }
    };
    match gateway.complete(request).await {
        Ok(resp) => match resp.outcome {
            Outcome::Parsed(RolePayload::Score {
                relevance,
                novelty,
                potential_value,
            }) => {
                let (score, was_clamped) =
                    SnippetScore::clamped(relevance, novelty, potential_value);
                let mut notes = Vec::new();
                if was_clamped {
                    notes.push(IncidentNote::new(
                        "scorer",
                        "clamped",
                        format!(
                            "score ({relevance}, {novelty}, {potential_value}) clamped to [0,1]"
                        ),
                        Some(snippet.url.clone()),
                    ));
                }
                (score, notes)
            }
            Outcome::Refusal => (
                SnippetScore::zero(),
                vec![IncidentNote::new("scorer", "refusal", "scorer refused", Some(snippet.url.clone()))],
            ),
            Outcome::ParseError(_) => (
                SnippetScore::zero(),
                vec![IncidentNote::new("scorer", "parse_error", "unparseable score", Some(snippet.url.clone()))],
            ),
            Outcome::Parsed(_) => (
                SnippetScore::zero(),
                vec![IncidentNote::new("scorer", "parse_error", "wrong payload kind", Some(snippet.url.clone()))],
            ),
        },
        Err(e) => (
            SnippetScore::zero(),
            vec![IncidentNote::new("scorer", "transport", e.to_string(), Some(snippet.url.clone()))],
        ),
    }
}

/// Reduce one page's content into an evidence bundle. Oversize content is
/// chunked; per-chunk reductions are concatenated in order. Any failed
/// chunk drops the whole bundle.
pub async fn reduce_content(
    gateway: &Gateway,
    url: &str,
    content: &str,
    anchors: &[String],
    asset_refs: &[(String, String)],
    system_text: &str,
    knowledge_context: &str,
    config: &CascadeConfig,
) -> (Option<EvidenceBundle>, Vec<IncidentNote>) {
    let mut notes = Vec::new();
    let words: Vec<&str> = content.split_whitespace().collect();
    let chunks: Vec<String> = if words.is_empty() {
        vec![String::new()]
    } else {
        words
            .chunks(config.chunk_words.max(1))
            .map(|c| c.join(" "))
            .collect()
    };

    let anchor_list = anchors.join(" | ");
    let asset_list = asset_refs
        .iter()
        .map(|(u, m)| format!("{u} ({m})"))
        .collect::<Vec<_>>()
        .join(" | ");

    let mut reduced_parts: Vec<String> = Vec::new();
    let mut links: Vec<String> = Vec::new();
    let mut images: Vec<String> = Vec::new();

    for chunk in &chunks {
        let evidence = format!(
            "url:: {url}\ncontent::\n{chunk}\nanchors:: {anchor_list}\nassets:: {asset_list}"
        );
        let request = match ModelRequest::new(
            PromptRole::Extract,
            system_text.to_string(),
            knowledge_context.to_string(),
            evidence,
        ) {
            Ok(req) => req,
            Err(e) => {
                notes.push(IncidentNote::new("extraction", "bad_request", e.to_string(), Some(url.to_string())));
                return (None, notes);
            }
        };
        match gateway.complete(request).await {
            Ok(resp) => match resp.outcome {
                Outcome::Parsed(RolePayload::Extraction {
                    reduced_text,
                    links: chunk_links,
                    images: chunk_images,
                }) => {
                    if !reduced_text.trim().is_empty() {
                        reduced_parts.push(reduced_text);
                    }
                    for link in chunk_links {
                        match canonicalize_url(&link) {
                            Ok(canonical) => {
                                if !links.contains(&canonical) {
                                    links.push(canonical);
                                }
                            }
                            Err(_) => notes.push(IncidentNote::new(
                                "extraction",
                                "bad_link",
                                format!("dropped unparseable link {link:?}"),
                                Some(url.to_string()),
                            )),
                        }
                    }
                    for image in chunk_images {
                        match canonicalize_url(&image) {
                            Ok(canonical) => {
                                if !images.contains(&canonical) {
                                    images.push(canonical);
                                }
                            }
                            Err(_) => notes.push(IncidentNote::new(
                                "extraction",
                                "bad_link",
                                format!("dropped unparseable image ref {image:?}"),
                                Some(url.to_string()),
                            )),
                        }
                    }
                }
                Outcome::Refusal => {
                    notes.push(IncidentNote::new("extraction", "refusal", "extractor refused", Some(url.to_string())));
                    return (None, notes);
                }
                Outcome::ParseError(_) => {
                    notes.push(IncidentNote::new("extraction", "parse_error", "unparseable extraction", Some(url.to_string())));
                    return (None, notes);
                }
                Outcome::Parsed(_) => {
                    notes.push(IncidentNote::new("extraction", "parse_error", "wrong payload kind", Some(url.to_string())));
                    return (None, notes);
                }
            },
            Err(e) => {
                notes.push(IncidentNote::new("extraction", "transport", e.to_string(), Some(url.to_string())));
                return (None, notes);
            }
        }
    }

    let mut reduced_text = reduced_parts.join("\n");
    if reduced_text.len() > config.reduced_text_cap {
        reduced_text.truncate(config.reduced_text_cap);
        notes.push(IncidentNote::new(
            "extraction",
            "truncated",
            format!("reduced text truncated to {} chars", config.reduced_text_cap),
            Some(url.to_string()),
        ));
    }

    (
        Some(EvidenceBundle {
            source_url: url.to_string(),
            reduced_text,
            image_refs: images,
            new_links: links,
            verification_score: None,
        }),
        notes,
    )
}

/// Verification outcome for one bundle.
#[derive(Debug, Clone, PartialEq)]
pub enum VerifyOutcome {
    Accepted(EvidenceBundle),
    Rejected { score: f64 },
    /// Refusal, parse error or transport failure.
    Degraded,
}

/// Run the fine-grained identity check. The bundle is accepted iff the
/// verifier's confidence reaches τ.
pub async fn verify(
    gateway: &Gateway,
    bundle: EvidenceBundle,
    system_text: &str,
    knowledge_context: &str,
    thresholds: &GateThresholds,
) -> (VerifyOutcome, Vec<IncidentNote>) {
    let url = bundle.source_url.clone();
    let evidence = format!("source:: {}\n{}", bundle.source_url, bundle.reduced_text);
    let request = match ModelRequest::new(
        PromptRole::Verify,
        system_text.to_string(),
        knowledge_context.to_string(),
        evidence,
    ) {
        Ok(req) => req,
        Err(e) => {
            return (
                VerifyOutcome::Degraded,
                vec![IncidentNote::new("verification", "bad_request", e.to_string(), Some(url))],
            )
        }
    };
    match gateway.complete(request).await {
        Ok(resp) => match resp.outcome {
            Outcome::Parsed(RolePayload::Verification { score }) => {
                let mut notes = Vec::new();
                let clamped = if (0.0..=1.0).contains(&score) && score.is_finite() {
                    score
                } else {
                    notes.push(IncidentNote::new(
                        "verification",
                        "clamped",
                        format!("verification score {score} clamped to [0,1]"),
                        Some(url.clone()),
                    ));
                    if score.is_finite() { score.clamp(0.0, 1.0) } else { 0.0 }
                };
                if clamped + GATE_EPSILON >= thresholds.tau {
                    let mut accepted = bundle;
                    accepted.verification_score = Some(clamped);
                    (VerifyOutcome::Accepted(accepted), notes)
                } else {
                    (VerifyOutcome::Rejected { score: clamped }, notes)
                }
            }
            Outcome::Refusal => (
                VerifyOutcome::Degraded,
                vec![IncidentNote::new("verification", "refusal", "verifier refused", Some(url))],
            ),
            Outcome::ParseError(_) | Outcome::Parsed(_) => (
                VerifyOutcome::Degraded,
                vec![IncidentNote::new("verification", "parse_error", "unparseable verification", Some(url))],
            ),
        },
        Err(e) => (
            VerifyOutcome::Degraded,
            vec![IncidentNote::new("verification", "transport", e.to_string(), Some(url))],
        ),
    }
}

/// Analyze one image attached to a verified bundle. Undecodable or refused
/// analyses yield an empty result with an incident, never a fabrication.
pub async fn analyze_image(
    gateway: &Gateway,
    image_url: &str,
    mime: &str,
    bytes: Vec<u8>,
    system_text: &str,
) -> (VisualAnalysis, Vec<IncidentNote>) {
    let request = ModelRequest::new(
        PromptRole::Visual,
        system_text.to_string(),
        String::new(),
        String::new(),
    )
    .and_then(|r| {
        r.with_images(vec![ImagePayload {
            mime: mime.to_string(),
            bytes,
        }])
    });
    let request = match request {
        Ok(req) => req,
        Err(e) => {
            return (
                VisualAnalysis::default(),
                vec![IncidentNote::new("visual", "bad_request", e.to_string(), Some(image_url.to_string()))],
            )
        }
    };
    match gateway.complete(request).await {
        Ok(resp) => match resp.outcome {
            Outcome::Parsed(RolePayload::Visual {
                transcribed_text,
                geospatial_clues,
                persons,
            }) => (
                VisualAnalysis {
                    transcribed_text,
                    geospatial_clues,
                    persons_described: persons,
                },
                Vec::new(),
            ),
            Outcome::Refusal => (
                VisualAnalysis::default(),
                vec![IncidentNote::new("visual", "refusal", "vision model refused", Some(image_url.to_string()))],
            ),
            Outcome::ParseError(_) | Outcome::Parsed(_) => (
                VisualAnalysis::default(),
                vec![IncidentNote::new("visual", "parse_error", "unparseable visual analysis", Some(image_url.to_string()))],
            ),
        },
        Err(e) => (
            VisualAnalysis::default(),
            vec![IncidentNote::new("visual", "transport", e.to_string(), Some(image_url.to_string()))],
        ),
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::gateway::ScriptedBackend;

    fn snippet(url: &str) -> SearchResult {
        SearchResult {
            url: url.into(),
            snippet: "something about the target".into(),
            originating_query: "q".into(),
            rank: 1,
        }
    }

    fn gateway(script: &str) -> Gateway {
        Gateway::new(Arc::new(ScriptedBackend::from_toml(script).unwrap()))
    }

    #[test]
    fn gate_boundary_matches_shipped_thresholds() {
        let thresholds = GateThresholds::default();
        assert_eq!(thresholds.phi, 1.8);
        assert_eq!(thresholds.tau, 0.6);

        let boundary = SnippetScore {
            relevance: 0.6,
            novelty: 0.6,
            potential_value: 0.6,
        };
        assert!(gate(&boundary, &thresholds));

        let below = SnippetScore {
            relevance: 0.6,
            novelty: 0.6,
            potential_value: 0.59,
        };
        assert!(!gate(&below, &thresholds));

        assert!(!gate(&SnippetScore::zero(), &thresholds));
        assert!(gate(
            &SnippetScore {
                relevance: 1.0,
                novelty: 1.0,
                potential_value: 0.0
            },
            &thresholds
        ));
    }

    #[test]
    fn per_dim_minimum_is_optional() {
        let thresholds = GateThresholds::default();
        let lopsided = SnippetScore {
            relevance: 1.0,
            novelty: 1.0,
            potential_value: 0.0,
        };
        assert!(gate_with_min(&lopsided, &thresholds, None));
        assert!(!gate_with_min(&lopsided, &thresholds, Some(0.6)));
        let even = SnippetScore {
            relevance: 0.6,
            novelty: 0.6,
            potential_value: 0.6,
        };
        assert!(gate_with_min(&even, &thresholds, Some(0.6)));
    }

    #[tokio::test]
    async fn scripted_score_passes_through() {
        let gw = gateway(
            r#"
[defaults.score]
body = '{"relevance": 0.9, "novelty": 0.8, "potential_value": 0.5}'
"#,
        );
        let (score, notes) = score_snippet(&gw, &snippet("https://a.example/x"), "sys", "ctx").await;
        assert_eq!(score.relevance, 0.9);
        assert_eq!(score.novelty, 0.8);
        assert_eq!(score.potential_value, 0.5);
        assert!(notes.is_empty());
    }

    #[tokio::test]
    async fn refusal_degrades_to_zero_with_incident() {
        let gw = gateway("[defaults.score]\nrefuse = true\n");
        let (score, notes) = score_snippet(&gw, &snippet("https://a.example/x"), "sys", "ctx").await;
        assert_eq!(score, SnippetScore::zero());
        assert_eq!(notes.len(), 1);
        assert_eq!(notes[0].kind, "refusal");
    }

    #[tokio::test]
    async fn out_of_range_component_clamped_with_warning() {
        let gw = gateway(
            r#"
[defaults.score]
body = '{"relevance": 1.3, "novelty": 0.5, "potential_value": -0.2}'
"#,
        );
        let (score, notes) = score_snippet(&gw, &snippet("https://a.example/x"), "sys", "ctx").await;
        assert_eq!(score.relevance, 1.0);
        assert_eq!(score.potential_value, 0.0);
        assert_eq!(notes[0].kind, "clamped");
    }

    #[tokio::test]
    async fn oversize_page_chunks_in_order() {
        let gw = gateway(
            r#"
[[response]]
role = "extract"
body = '{"reduced_text": "part-one", "links": ["https://l1.example/a"], "images": []}'
[[response]]
role = "extract"
body = '{"reduced_text": "part-two", "links": [], "images": ["https://i.example/p.jpg"]}'
[[response]]
role = "extract"
body = '{"reduced_text": "part-three", "links": ["https://l1.example/a"], "images": []}'
"#,
        );
        let config = CascadeConfig {
            chunk_words: 2,
            ..Default::default()
        };
        let content = "w1 w2 w3 w4 w5 w6"; // 3 chunks of 2 words
        let (bundle, notes) = reduce_content(
            &gw,
            "https://page.example/long",
            content,
            &[],
            &[],
            "sys",
            "ctx",
            &config,
        )
        .await;
        let bundle = bundle.unwrap();
        assert_eq!(bundle.reduced_text, "part-one\npart-two\npart-three");
        assert_eq!(bundle.new_links, vec!["https://l1.example/a"]);
        assert_eq!(bundle.image_refs, vec!["https://i.example/p.jpg"]);
        assert!(notes.is_empty());
    }

    #[tokio::test]
    async fn extraction_echo_populates_refs() {
        let gw = gateway(
            r#"
[defaults.extract]
body = '{"reduced_text": "about the target", "links": ["https://l1.example/a", "https://l2.example/b"], "images": ["https://i.example/p.jpg"]}'
"#,
        );
        let (bundle, _) = reduce_content(
            &gw,
            "https://page.example/p",
            "text",
            &["https://l1.example/a".into(), "https://l2.example/b".into()],
            &[("https://i.example/p.jpg".into(), "image/jpeg".into())],
            "sys",
            "ctx",
            &CascadeConfig::default(),
        )
        .await;
        let bundle = bundle.unwrap();
        assert_eq!(bundle.new_links.len(), 2);
        assert_eq!(bundle.image_refs.len(), 1);
    }

    #[tokio::test]
    async fn verify_boundary_accepts_at_tau() {
        let gw = gateway("[defaults.verify]\nbody = '{\"score\": 0.6}'\n");
        let bundle = EvidenceBundle {
            source_url: "https://a.example/x".into(),
            reduced_text: "evidence".into(),
            image_refs: vec![],
            new_links: vec![],
            verification_score: None,
        };
        let (outcome, _) = verify(&gw, bundle, "sys", "ctx", &GateThresholds::default()).await;
        match outcome {
            VerifyOutcome::Accepted(b) => assert_eq!(b.verification_score, Some(0.6)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[tokio::test]
    async fn verify_zero_rejects() {
        let gw = gateway("[defaults.verify]\nbody = '{\"score\": 0.0}'\n");
        let bundle = EvidenceBundle {
            source_url: "https://a.example/x".into(),
            reduced_text: "evidence".into(),
            image_refs: vec![],
            new_links: vec![],
            verification_score: None,
        };
        let (outcome, _) = verify(&gw, bundle, "sys", "ctx", &GateThresholds::default()).await;
        assert!(matches!(outcome, VerifyOutcome::Rejected { score } if score == 0.0));
    }

    #[tokio::test]
    async fn visual_refusal_yields_empty_analysis() {
        let gw = gateway("[defaults.visual]\nrefuse = true\n");
        let (analysis, notes) =
            analyze_image(&gw, "https://i.example/p.jpg", "image/jpeg", vec![1, 2, 3], "sys").await;
        assert_eq!(analysis, VisualAnalysis::default());
        assert_eq!(notes[0].kind, "refusal");
    }
}
