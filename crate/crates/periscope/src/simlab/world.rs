//! Synthetic web worlds: a human-editable spec file describing documents,
//! links, planted facts, assets, robots rules and a search index, compiled
//! into an in-memory world with generated asset bytes and a derived ground
//! truth.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use url::Url;

use crate::error::{Error, Result};
use crate::knowledge::{canonical_key, Category, GroundTruthProfile, SeedKnowledge, Tier, TruthFact};
use crate::retrieval::canonicalize_url;

use super::fixtures;

// ---------------------------------------------------------------------------
// Spec file shape
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
struct WorldFile {
    world: WorldMeta,
    seed: SeedSpec,
    #[serde(default, rename = "host")]
    hosts: Vec<HostSpec>,
    #[serde(default, rename = "document")]
    documents: Vec<DocumentSpec>,
    #[serde(default, rename = "index")]
    index: Vec<IndexSpec>,
    #[serde(default, rename = "insight")]
    insights: Vec<InsightSpecRaw>,
}

#[derive(Debug, Deserialize)]
struct WorldMeta {
    name: String,
    #[serde(default)]
    description: String,
    /// Link targets allowed to point nowhere.
    #[serde(default)]
    dangling_links: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct SeedSpec {
    full_name: String,
    affiliation: String,
    #[serde(default)]
    extra_hints: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct HostSpec {
    name: String,
    robots: String,
}

#[derive(Debug, Deserialize)]
struct DocumentSpec {
    url: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    body: String,
    #[serde(default)]
    links: Vec<String>,
    /// Same-name persona that is not the target.
    #[serde(default)]
    decoy: bool,
    /// Off-target page the coarse filter should reject.
    #[serde(default)]
    noise: bool,
    #[serde(default)]
    delay_ms: u64,
    /// Serve this many 500s before the first success.
    #[serde(default)]
    fail_times: u32,
    #[serde(default, rename = "fact")]
    facts: Vec<FactSpec>,
    #[serde(default, rename = "asset")]
    assets: Vec<AssetSpec>,
}

#[derive(Debug, Deserialize)]
struct FactSpec {
    key: String,
    value: String,
    #[serde(default = "default_tier")]
    tier: String,
    #[serde(default = "default_category")]
    category: String,
    /// Fabricated defensive plant; never part of the ground truth.
    #[serde(default)]
    fake: bool,
}

fn default_tier() -> String {
    "DII".into()
}

fn default_category() -> String {
    "C17".into()
}

#[derive(Debug, Deserialize)]
struct AssetSpec {
    name: String,
    /// jpeg_exif | jpeg_plain | pdf | pdf_encrypted
    kind: String,
    #[serde(default)]
    caption: String,
    #[serde(default)]
    geospatial_clues: Vec<String>,
    #[serde(default)]
    persons: Vec<String>,
    #[serde(default)]
    exif: Option<ExifSpec>,
    #[serde(default)]
    pdf: Option<PdfSpec>,
    #[serde(default, rename = "fact")]
    facts: Vec<FactSpec>,
}

#[derive(Debug, Deserialize)]
struct ExifSpec {
    #[serde(default)]
    gps: Option<[f64; 2]>,
    #[serde(default)]
    model: Option<String>,
    #[serde(default)]
    timestamp: Option<String>,
    #[serde(default)]
    artist: Option<String>,
}

#[derive(Debug, Deserialize)]
struct PdfSpec {
    #[serde(default)]
    author: Option<String>,
    #[serde(default)]
    producer: Option<String>,
    #[serde(default)]
    creation_date: Option<String>,
}

#[derive(Debug, Deserialize)]
struct IndexSpec {
    pattern: String,
    urls: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct InsightSpecRaw {
    statement: String,
    requires_keys: Vec<String>,
    #[serde(default = "default_category")]
    category: String,
}

// ---------------------------------------------------------------------------
// Built world
// ---------------------------------------------------------------------------

/// A planted fact with its canonical key.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedFact {
    pub key: String,
    pub value: String,
    pub tier: Tier,
    pub category: Category,
    pub fake: bool,
}

#[derive(Debug, Clone)]
pub struct WorldDocument {
    pub url: String,
    pub title: String,
    pub body: String,
    pub links: Vec<String>,
    pub decoy: bool,
    pub noise: bool,
    pub delay: Duration,
    pub fail_times: u32,
    pub facts: Vec<PlantedFact>,
    pub asset_urls: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct WorldAsset {
    pub url: String,
    pub name: String,
    pub mime: String,
    pub bytes: Vec<u8>,
    pub sha256: String,
    pub caption: String,
    pub geospatial_clues: Vec<String>,
    pub persons: Vec<String>,
    pub facts: Vec<PlantedFact>,
}

#[derive(Debug, Clone)]
pub struct IndexEntry {
    pub pattern: String,
    pub urls: Vec<String>,
}

/// Cross-source conclusion a grounded aggregator may emit once all its
/// required keys are present in the knowledge base.
#[derive(Debug, Clone)]
pub struct InsightSpec {
    pub statement: String,
    pub requires_keys: Vec<String>,
    pub category: Category,
}

/// A fully built offline world.
#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub name: String,
    pub description: String,
    pub seed: SeedKnowledge,
    pub documents: BTreeMap<String, WorldDocument>,
    pub assets: BTreeMap<String, WorldAsset>,
    /// host → robots.txt body
    pub robots: BTreeMap<String, String>,
    pub index: Vec<IndexEntry>,
    pub insights: Vec<InsightSpec>,
    pub ground_truth: GroundTruthProfile,
    pub dangling: BTreeSet<String>,
}

impl SyntheticWorld {
    pub fn document(&self, canonical_url: &str) -> Option<&WorldDocument> {
        self.documents.get(canonical_url)
    }

    pub fn asset_by_hash(&self, sha256_hex: &str) -> Option<&WorldAsset> {
        self.assets.values().find(|a| a.sha256 == sha256_hex)
    }

    /// All fake-marked facts, used by the injected-data defense rule.
    pub fn fake_facts(&self) -> Vec<&PlantedFact> {
        self.documents
            .values()
            .flat_map(|d| d.facts.iter())
            .chain(self.assets.values().flat_map(|a| a.facts.iter()))
            .filter(|f| f.fake)
            .collect()
    }

    /// Whether `query` activates this index pattern: every pattern token
    /// must occur in the query, case-insensitively.
    pub fn index_matches(pattern: &str, query: &str) -> bool {
        let q = query.to_lowercase();
        pattern
            .split_whitespace()
            .all(|token| q.contains(&token.to_lowercase()))
    }

    /// Ranked URLs for a query across all matching index entries.
    pub fn search(&self, query: &str, k: usize) -> Vec<(String, String)> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for entry in &self.index {
            if !Self::index_matches(&entry.pattern, query) {
                continue;
            }
            for url in &entry.urls {
                if seen.insert(url.clone()) {
                    let snippet = self
                        .documents
                        .get(url)
                        .map(|d| snippet_of(d))
                        .unwrap_or_default();
                    out.push((url.clone(), snippet));
                    if out.len() == k {
                        return out;
                    }
                }
            }
        }
        out
    }
}

fn snippet_of(doc: &WorldDocument) -> String {
    let text = if doc.body.is_empty() {
        doc.title.clone()
    } else {
        format!("{} — {}", doc.title, doc.body)
    };
    let words: Vec<&str> = text.split_whitespace().take(30).collect();
    words.join(" ")
}

// ---------------------------------------------------------------------------
// Build
// ---------------------------------------------------------------------------

/// Compile a world spec file into a [`SyntheticWorld`]. Dangling link
/// targets, unknown index URLs and duplicate fact keys are build errors.
pub fn build_world_from_str(raw: &str) -> Result<SyntheticWorld> {
    let file: WorldFile = toml::from_str(raw).map_err(|e| Error::WorldSpec(e.to_string()))?;

    let seed = SeedKnowledge {
        full_name: file.seed.full_name,
        affiliation: file.seed.affiliation,
        extra_hints: file.seed.extra_hints,
    };
    seed.validate().map_err(|e| Error::WorldSpec(e.to_string()))?;

    let mut documents = BTreeMap::new();
    let mut assets = BTreeMap::new();
    let mut fact_keys: BTreeSet<String> = BTreeSet::new();
    let mut truth = GroundTruthProfile::default();

    for doc_spec in file.documents {
        let url = canonicalize_url(&doc_spec.url)
            .map_err(|e| Error::WorldSpec(format!("document url: {e}")))?;
        Url::parse(&url).expect("canonical url parses");
        let excluded = doc_spec.decoy || doc_spec.noise;

        let facts = compile_facts(&doc_spec.facts, &mut fact_keys, &mut truth, excluded)?;

        let mut asset_urls = Vec::new();
        for asset_spec in &doc_spec.assets {
            let asset_url = format!("{}/{}", url.trim_end_matches('/'), asset_spec.name);
            let asset_url = canonicalize_url(&asset_url)
                .map_err(|e| Error::WorldSpec(format!("asset url: {e}")))?;
            let asset_facts =
                compile_facts(&asset_spec.facts, &mut fact_keys, &mut truth, excluded)?;
            let (bytes, mime) = build_asset_bytes(asset_spec)?;
            let sha256 = hex::encode(Sha256::digest(&bytes));
            if assets
                .insert(
                    asset_url.clone(),
                    WorldAsset {
                        url: asset_url.clone(),
                        name: asset_spec.name.clone(),
                        mime,
                        bytes,
                        sha256,
                        caption: asset_spec.caption.clone(),
                        geospatial_clues: asset_spec.geospatial_clues.clone(),
                        persons: asset_spec.persons.clone(),
                        facts: asset_facts,
                    },
                )
                .is_some()
            {
                return Err(Error::WorldSpec(format!("duplicate asset url {asset_url}")));
            }
            asset_urls.push(asset_url);
        }

        let links: Vec<String> = doc_spec
            .links
            .iter()
            .map(|l| canonicalize_url(l).map_err(|e| Error::WorldSpec(format!("link: {e}"))))
            .collect::<Result<_>>()?;

        let previous = documents.insert(
            url.clone(),
            WorldDocument {
                url: url.clone(),
                title: if doc_spec.title.is_empty() {
                    url.clone()
                } else {
                    doc_spec.title
                },
                body: doc_spec.body,
                links,
                decoy: doc_spec.decoy,
                noise: doc_spec.noise,
                delay: Duration::from_millis(doc_spec.delay_ms),
                fail_times: doc_spec.fail_times,
                facts,
                asset_urls,
            },
        );
        if previous.is_some() {
            return Err(Error::WorldSpec(format!("duplicate document url {url}")));
        }
    }

    let dangling: BTreeSet<String> = file
        .world
        .dangling_links
        .iter()
        .map(|l| canonicalize_url(l).map_err(|e| Error::WorldSpec(format!("dangling: {e}"))))
        .collect::<Result<_>>()?;

    // every link resolves to a document, an asset, or a declared dangling target
    for doc in documents.values() {
        for link in &doc.links {
            if !documents.contains_key(link)
                && !assets.contains_key(link)
                && !dangling.contains(link)
            {
                return Err(Error::WorldSpec(format!(
                    "document {} links to unknown target {link}",
                    doc.url
                )));
            }
        }
    }

    let mut index = Vec::new();
    for entry in file.index {
        let urls: Vec<String> = entry
            .urls
            .iter()
            .map(|u| canonicalize_url(u).map_err(|e| Error::WorldSpec(format!("index url: {e}"))))
            .collect::<Result<_>>()?;
        for url in &urls {
            if !documents.contains_key(url) {
                return Err(Error::WorldSpec(format!(
                    "index pattern {:?} references unknown document {url}",
                    entry.pattern
                )));
            }
        }
        index.push(IndexEntry {
            pattern: entry.pattern,
            urls,
        });
    }

    let mut insights = Vec::new();
    for raw in file.insights {
        let keys: Vec<String> = raw.requires_keys.iter().map(|k| canonical_key(k)).collect();
        for key in &keys {
            if !fact_keys.contains(key) {
                return Err(Error::WorldSpec(format!(
                    "insight {:?} requires unknown fact key {key:?}",
                    raw.statement
                )));
            }
        }
        insights.push(InsightSpec {
            statement: raw.statement,
            requires_keys: keys,
            category: Category::parse(&raw.category)
                .map_err(|e| Error::WorldSpec(e.to_string()))?,
        });
    }

    let robots = file
        .hosts
        .into_iter()
        .map(|h| (h.name.to_lowercase(), h.robots))
        .collect();

    Ok(SyntheticWorld {
        name: file.world.name,
        description: file.world.description,
        seed,
        documents,
        assets,
        robots,
        index,
        insights,
        ground_truth: truth,
        dangling,
    })
}

pub fn build_world(path: &Path) -> Result<SyntheticWorld> {
    let raw =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    build_world_from_str(&raw)
}

fn compile_facts(
    specs: &[FactSpec],
    seen_keys: &mut BTreeSet<String>,
    truth: &mut GroundTruthProfile,
    excluded_from_truth: bool,
) -> Result<Vec<PlantedFact>> {
    let mut out = Vec::new();
    for spec in specs {
        let key = canonical_key(&spec.key);
        if key.is_empty() {
            return Err(Error::WorldSpec("fact with empty key".into()));
        }
        if !seen_keys.insert(key.clone()) {
            return Err(Error::WorldSpec(format!("duplicate fact key {key:?}")));
        }
        let tier = match spec.tier.to_uppercase().as_str() {
            "DII" => Tier::Dii,
            "CII" => Tier::Cii,
            "AMI" => Tier::Ami,
            other => return Err(Error::WorldSpec(format!("bad tier {other:?}"))),
        };
        let category =
            Category::parse(&spec.category).map_err(|e| Error::WorldSpec(e.to_string()))?;
        if !excluded_from_truth && !spec.fake {
            truth.facts.insert(
                key.clone(),
                TruthFact {
                    fact: spec.value.clone(),
                    tier,
                    category,
                },
            );
        }
        out.push(PlantedFact {
            key,
            value: spec.value.clone(),
            tier,
            category,
            fake: spec.fake,
        });
    }
    Ok(out)
}

fn build_asset_bytes(spec: &AssetSpec) -> Result<(Vec<u8>, String)> {
    match spec.kind.as_str() {
        "jpeg_exif" => {
            let exif = spec.exif.as_ref().ok_or_else(|| {
                Error::WorldSpec(format!("asset {:?} kind jpeg_exif needs [asset.exif]", spec.name))
            })?;
            let bytes = fixtures::jpeg_with_exif(&fixtures::ExifFields {
                gps: exif.gps.map(|[lat, lon]| (lat, lon)),
                model: exif.model.clone(),
                timestamp: exif.timestamp.clone(),
                artist: exif.artist.clone(),
            });
            Ok((bytes, "image/jpeg".into()))
        }
        "jpeg_plain" => Ok((fixtures::jpeg_plain(&spec.caption), "image/jpeg".into())),
        "pdf" => {
            let pdf = spec.pdf.as_ref().ok_or_else(|| {
                Error::WorldSpec(format!("asset {:?} kind pdf needs [asset.pdf]", spec.name))
            })?;
            Ok((
                fixtures::pdf_with_info(
                    pdf.author.as_deref(),
                    pdf.producer.as_deref(),
                    pdf.creation_date.as_deref(),
                ),
                "application/pdf".into(),
            ))
        }
        "pdf_encrypted" => Ok((fixtures::pdf_encrypted(), "application/pdf".into())),
        other => Err(Error::WorldSpec(format!(
            "asset {:?} has unknown kind {other:?}",
            spec.name
        ))),
    }
}

/// Render a document as the minimal HTML page the serving harness emits.
/// `injection` is appended to the body of the target's own pages when a
/// page-level defense scenario is active.
pub fn render_document(doc: &WorldDocument, injection: Option<&str>) -> String {
    let mut body = String::new();
    body.push_str(&format!("<html><head><title>{}</title></head><body>\n", doc.title));
    body.push_str(&format!("<h1>{}</h1>\n", doc.title));
    if !doc.body.is_empty() {
        body.push_str(&format!("<p>{}</p>\n", doc.body));
    }
    for fact in &doc.facts {
        body.push_str(&format!("<p>{}: {}</p>\n", fact.key, fact.value));
    }
    if let Some(text) = injection {
        if !doc.decoy && !doc.noise {
            body.push_str(&format!("<p>{text}</p>\n"));
        }
    }
    for link in &doc.links {
        body.push_str(&format!("<a href=\"{link}\">{link}</a>\n"));
    }
    for asset in &doc.asset_urls {
        if asset.ends_with(".pdf") {
            body.push_str(&format!("<a href=\"{asset}\">{asset}</a>\n"));
        } else {
            body.push_str(&format!("<img src=\"{asset}\">\n"));
        }
    }
    body.push_str("</body></html>\n");
    body
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[world]
name = "mini"

[seed]
full_name = "Alex Chen"
affiliation = "Univ Z"

[[document]]
url = "https://univ-z.edu/people/alex"
title = "Alex Chen"
body = "Faculty page."

  [[document.fact]]
  key = "email"
  value = "achen@univ-z.edu"
  tier = "DII"
  category = "C2"

[[index]]
pattern = "alex chen univ z"
urls = ["https://univ-z.edu/people/alex"]
"#;

    #[test]
    fn minimal_world_builds_with_one_truth_fact() {
        let world = build_world_from_str(MINIMAL).unwrap();
        assert_eq!(world.documents.len(), 1);
        assert_eq!(world.ground_truth.len(), 1);
        assert!(world.ground_truth.facts.contains_key("email"));
    }

    #[test]
    fn decoy_facts_are_excluded_from_truth() {
        let spec = format!(
            "{MINIMAL}\n[[document]]\nurl = \"https://other.example/alex\"\ndecoy = true\n  [[document.fact]]\n  key = \"decoy city\"\n  value = \"City Q\"\n"
        );
        let world = build_world_from_str(&spec).unwrap();
        assert_eq!(world.ground_truth.len(), 1);
        assert!(!world.ground_truth.facts.contains_key("decoy city"));
    }

    #[test]
    fn fake_facts_are_excluded_from_truth_but_listed() {
        let spec = format!(
            "{MINIMAL}\n[[document]]\nurl = \"https://blog.example/alex\"\n  [[document.fact]]\n  key = \"fake pet\"\n  value = \"owns a dragon\"\n  fake = true\n"
        );
        let world = build_world_from_str(&spec).unwrap();
        assert_eq!(world.ground_truth.len(), 1);
        assert_eq!(world.fake_facts().len(), 1);
    }

    #[test]
    fn dangling_link_is_a_build_error_unless_declared() {
        let bad = format!(
            "{MINIMAL}\n[[document]]\nurl = \"https://hub.example/x\"\nlinks = [\"https://gone.example/y\"]\n"
        );
        assert!(build_world_from_str(&bad).is_err());

        let ok = bad.replace(
            "[world]\nname = \"mini\"",
            "[world]\nname = \"mini\"\ndangling_links = [\"https://gone.example/y\"]",
        );
        assert!(build_world_from_str(&ok).is_ok());
    }

    #[test]
    fn unknown_index_url_is_a_build_error() {
        let bad = format!(
            "{MINIMAL}\n[[index]]\npattern = \"x\"\nurls = [\"https://nowhere.example/z\"]\n"
        );
        assert!(build_world_from_str(&bad).is_err());
    }

    #[test]
    fn duplicate_fact_keys_rejected() {
        let bad = format!(
            "{MINIMAL}\n[[document]]\nurl = \"https://b.example/p\"\n  [[document.fact]]\n  key = \"Email\"\n  value = \"again\"\n"
        );
        assert!(build_world_from_str(&bad).is_err());
    }

    #[test]
    fn index_matching_is_token_based() {
        assert!(SyntheticWorld::index_matches(
            "alex chen univ z",
            "\"Alex Chen\" Univ Z homepage"
        ));
        assert!(!SyntheticWorld::index_matches("alex chen github", "Alex Chen Univ Z"));
    }
}
