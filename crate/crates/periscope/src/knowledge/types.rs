//! Domain types for the audit target's knowledge state.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimal starting knowledge anchoring an audit: a person's full name and
/// primary affiliation, optionally a few extra hints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedKnowledge {
    pub full_name: String,
    pub affiliation: String,
    #[serde(default)]
    pub extra_hints: Vec<String>,
}

impl SeedKnowledge {
    pub fn new(full_name: impl Into<String>, affiliation: impl Into<String>) -> Result<Self> {
        let seed = SeedKnowledge {
            full_name: full_name.into(),
            affiliation: affiliation.into(),
            extra_hints: Vec::new(),
        };
        seed.validate()?;
        Ok(seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.full_name.trim().is_empty() {
            return Err(Error::InvalidInput("seed full_name is empty".into()));
        }
        if self.affiliation.trim().is_empty() {
            return Err(Error::InvalidInput("seed affiliation is empty".into()));
        }
        Ok(())
    }
}

/// Exposure tier of a fact: directly stated, inferred within one source, or
/// synthesized across sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Tier {
    #[serde(rename = "DII")]
    Dii,
    #[serde(rename = "CII")]
    Cii,
    #[serde(rename = "AMI")]
    Ami,
}

impl Tier {
    pub const ALL: [Tier; 3] = [Tier::Dii, Tier::Cii, Tier::Ami];

    pub fn as_str(&self) -> &'static str {
        match self {
            Tier::Dii => "DII",
            Tier::Cii => "CII",
            Tier::Ami => "AMI",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How an entry came to be known. Determines its tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProvenanceKind {
    /// Extracted verbatim from one source.
    #[default]
    ExplicitMatch,
    /// Inferred from context within a single source.
    SingleSourceInference,
    /// Produced by aggregation over multiple sources.
    CrossSourceSynthesis,
}

/// One of the 17 information categories, each with a fixed name and a
/// perceived-invasion-severity score on a 1–7 scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Category(u8);

/// Category table: (name, severity score). Index 0 is C1.
const CATEGORY_TABLE: [(&str, f64); 17] = [
    ("Core Identity Information", 6.2),
    ("Contact Information", 6.8),
    ("Affiliations", 4.5),
    ("Physical Appearance", 5.1),
    ("Geographic Location", 6.9),
    ("Personal Attributes", 5.8),
    ("Educational History", 4.2),
    ("Personal Development", 3.5),
    ("Career History", 4.3),
    ("Accomplishments", 3.1),
    ("Interpersonal Relationships", 6.5),
    ("Lifestyle & Interests", 4.8),
    ("Health & Wellness", 7.0),
    ("Financial Status", 7.0),
    ("Key Life Events & Goals", 5.5),
    ("Digital Footprint", 4.1),
    ("Other Information", 3.0),
];

impl Category {
    pub const COUNT: usize = 17;
    pub const C1: Category = Category(1);
    pub const C2: Category = Category(2);
    pub const C3: Category = Category(3);
    pub const C4: Category = Category(4);
    pub const C5: Category = Category(5);
    pub const C6: Category = Category(6);
    pub const C7: Category = Category(7);
    pub const C8: Category = Category(8);
    pub const C9: Category = Category(9);
    pub const C10: Category = Category(10);
    pub const C11: Category = Category(11);
    pub const C12: Category = Category(12);
    pub const C13: Category = Category(13);
    pub const C14: Category = Category(14);
    pub const C15: Category = Category(15);
    pub const C16: Category = Category(16);
    pub const C17: Category = Category(17);

    pub fn new(index: u8) -> Result<Self> {
        if (1..=17).contains(&index) {
            Ok(Category(index))
        } else {
            Err(Error::InvalidInput(format!(
                "category index {index} out of range 1..=17"
            )))
        }
    }

    pub fn all() -> impl Iterator<Item = Category> {
        (1..=17).map(Category)
    }

    pub fn index(&self) -> u8 {
        self.0
    }

    pub fn name(&self) -> &'static str {
        CATEGORY_TABLE[(self.0 - 1) as usize].0
    }

    /// Perceived privacy-invasion severity, 1–7 scale.
    pub fn ppis(&self) -> f64 {
        CATEGORY_TABLE[(self.0 - 1) as usize].1
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        let digits = t
            .strip_prefix('C')
            .or_else(|| t.strip_prefix('c'))
            .unwrap_or(t);
        digits
            .parse::<u8>()
            .ok()
            .and_then(|n| Category::new(n).ok())
            .ok_or_else(|| Error::InvalidInput(format!("bad category {s:?}")))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

impl Serialize for Category {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        Category::parse(&raw).map_err(serde::de::Error::custom)
    }
}

/// One atomic fact about the target, keyed by a canonical name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeEntry {
    pub key: String,
    pub fact: String,
    pub tier: Tier,
    pub category: Category,
    pub confidence: f64,
    pub sources: BTreeSet<String>,
    pub iteration_added: u32,
    pub last_modified_iteration: u32,
    #[serde(default)]
    pub provenance: ProvenanceKind,
}

impl KnowledgeEntry {
    /// An entry with no sources has not yet been tied to evidence.
    pub fn is_draft(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.key.trim().is_empty() {
            return Err(Error::InvalidInput("entry key is empty".into()));
        }
        if self.last_modified_iteration < self.iteration_added {
            return Err(Error::InvalidInput(format!(
                "entry {:?}: last_modified_iteration {} < iteration_added {}",
                self.key, self.last_modified_iteration, self.iteration_added
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(Error::InvalidInput(format!(
                "entry {:?}: confidence {} outside [0,1]",
                self.key, self.confidence
            )));
        }
        Ok(())
    }
}

/// Action kind for a knowledge operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpAction {
    Add,
    Update,
    Delete,
}

impl fmt::Display for OpAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpAction::Add => f.write_str("add"),
            OpAction::Update => f.write_str("update"),
            OpAction::Delete => f.write_str("delete"),
        }
    }
}

/// Optional stamps applied together with an operation. The integration stage
/// fills tier/category/confidence/provenance; `diff` fills everything so a
/// reconstructed base matches field-for-field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OpMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub category: Option<Category>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub confidence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<ProvenanceKind>,
    /// Replace the source set exactly instead of merging `source_url`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sources_replace: Option<BTreeSet<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iteration_added: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_modified: Option<u32>,
}

/// A single Add/Update/Delete instruction against a knowledge base.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeOperation {
    pub key: String,
    /// Empty is permitted only for Delete.
    #[serde(default)]
    pub fact: String,
    pub action: OpAction,
    #[serde(default)]
    pub source_url: String,
    #[serde(default)]
    pub rationale: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<OpMeta>,
}

impl KnowledgeOperation {
    pub fn add(key: impl Into<String>, fact: impl Into<String>, source: impl Into<String>) -> Self {
        KnowledgeOperation {
            key: key.into(),
            fact: fact.into(),
            action: OpAction::Add,
            source_url: source.into(),
            rationale: String::new(),
            meta: None,
        }
    }

    pub fn update(
        key: impl Into<String>,
        fact: impl Into<String>,
        source: impl Into<String>,
    ) -> Self {
        KnowledgeOperation {
            key: key.into(),
            fact: fact.into(),
            action: OpAction::Update,
            source_url: source.into(),
            rationale: String::new(),
            meta: None,
        }
    }

    pub fn delete(key: impl Into<String>) -> Self {
        KnowledgeOperation {
            key: key.into(),
            fact: String::new(),
            action: OpAction::Delete,
            source_url: String::new(),
            rationale: String::new(),
            meta: None,
        }
    }

    pub fn with_meta(mut self, meta: OpMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.key.trim().is_empty() {
            return Err(Error::InvalidInput("operation key is empty".into()));
        }
        match self.action {
            OpAction::Add | OpAction::Update => {
                if self.fact.trim().is_empty() {
                    return Err(Error::InvalidInput(format!(
                        "{} on {:?} has empty fact",
                        self.action, self.key
                    )));
                }
            }
            OpAction::Delete => {}
        }
        Ok(())
    }
}

/// Outcome of one applied operation, kept for the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoggedOperation {
    pub iteration: u32,
    pub op: KnowledgeOperation,
    pub outcome: String,
}

/// The evolving fact dictionary for one audit target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub seed: SeedKnowledge,
    pub(crate) entries: BTreeMap<String, KnowledgeEntry>,
    pub iteration: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<LoggedOperation>,
}

impl KnowledgeBase {
    pub fn new(seed: SeedKnowledge) -> Self {
        KnowledgeBase {
            seed,
            entries: BTreeMap::new(),
            iteration: 0,
            log: Vec::new(),
        }
    }

    /// Advance the iteration counter. The counter never moves backwards.
    pub fn begin_iteration(&mut self, t: u32) {
        debug_assert!(t >= self.iteration, "iteration must not decrease");
        self.iteration = self.iteration.max(t);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, canonical: &str) -> Option<&KnowledgeEntry> {
        self.entries.get(canonical)
    }

    pub fn contains_key(&self, canonical: &str) -> bool {
        self.entries.contains_key(canonical)
    }

    /// Entries in stable key order.
    pub fn entries(&self) -> impl Iterator<Item = &KnowledgeEntry> {
        self.entries.values()
    }

    pub fn keys(&self) -> impl Iterator<Item = &String> {
        self.entries.keys()
    }

    /// Distinct source URLs across all entries.
    pub fn all_sources(&self) -> BTreeSet<String> {
        self.entries
            .values()
            .flat_map(|e| e.sources.iter().cloned())
            .collect()
    }

    /// Entries-only structural equality, ignoring iteration counter and log.
    pub fn same_entries(&self, other: &KnowledgeBase) -> bool {
        self.entries == other.entries
    }

    pub fn validate(&self) -> Result<()> {
        self.seed.validate()?;
        for (key, entry) in &self.entries {
            if key != &entry.key {
                return Err(Error::InvalidInput(format!(
                    "map key {key:?} disagrees with entry key {:?}",
                    entry.key
                )));
            }
            entry.validate()?;
        }
        Ok(())
    }

    /// Serialized view fed to model calls: one line per entry plus the seed
    /// anchor, in stable order.
    pub fn render_context(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "seed_name:: {}\nseed_affiliation:: {}\n",
            self.seed.full_name, self.seed.affiliation
        ));
        for hint in &self.seed.extra_hints {
            out.push_str(&format!("seed_hint:: {hint}\n"));
        }
        for entry in self.entries.values() {
            let sources: Vec<&str> = entry.sources.iter().map(|s| s.as_str()).collect();
            out.push_str(&format!(
                "- {} :: {} [tier={} cat={} sources={}]\n",
                entry.key,
                entry.fact,
                entry.tier,
                entry.category,
                sources.join(",")
            ));
        }
        out
    }
}

/// One statement synthesized across sources, with the entry keys that
/// support it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub statement: String,
    pub supporting_keys: Vec<String>,
    pub category: Category,
    /// Distinct source URLs reachable through the supporting entries.
    #[serde(default)]
    pub sources: BTreeSet<String>,
}

/// Validated cross-source insights for one iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct InsightSet {
    pub insights: Vec<Insight>,
}

impl InsightSet {
    /// Keep only insights whose supporting keys all exist in `kb` and whose
    /// supporting entries span at least two distinct sources. Returns the
    /// accepted set and a human-readable note per downgraded insight.
    pub fn validated(candidates: Vec<Insight>, kb: &KnowledgeBase) -> (InsightSet, Vec<String>) {
        let mut accepted = Vec::new();
        let mut downgraded = Vec::new();
        for mut insight in candidates {
            let mut missing = Vec::new();
            let mut sources = BTreeSet::new();
            for key in &insight.supporting_keys {
                match kb.get(&super::ops::canonical_key(key)) {
                    Some(entry) => sources.extend(entry.sources.iter().cloned()),
                    None => missing.push(key.clone()),
                }
            }
            if !missing.is_empty() {
                downgraded.push(format!(
                    "insight {:?} cites unknown keys: {}",
                    insight.statement,
                    missing.join(", ")
                ));
                continue;
            }
            if sources.len() < 2 {
                downgraded.push(format!(
                    "insight {:?} is not multi-source ({} distinct source)",
                    insight.statement,
                    sources.len()
                ));
                continue;
            }
            insight.sources = sources;
            accepted.push(insight);
        }
        (InsightSet { insights: accepted }, downgraded)
    }
}

/// Gap analysis and next-step suggestions produced at the end of an
/// iteration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StrategicFeedback {
    pub completeness_notes: String,
    pub suggested_directions: Vec<String>,
}

impl StrategicFeedback {
    pub fn truncated(mut self, max_directions: usize) -> Self {
        self.suggested_directions.truncate(max_directions);
        self
    }
}

/// A planted fact in a ground-truth profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFact {
    pub fact: String,
    pub tier: Tier,
    pub category: Category,
}

/// The reference profile an audit is scored against.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruthProfile {
    pub facts: BTreeMap<String, TruthFact>,
}

impl GroundTruthProfile {
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_table_is_complete() {
        assert_eq!(Category::all().count(), 17);
        assert_eq!(Category::C1.name(), "Core Identity Information");
        assert!((Category::C1.ppis() - 6.2).abs() < 1e-12);
        assert!((Category::C17.ppis() - 3.0).abs() < 1e-12);
        assert!((Category::C13.ppis() - 7.0).abs() < 1e-12);
        for c in Category::all() {
            assert!((1.0..=7.0).contains(&c.ppis()), "{c} ppis out of range");
            assert!(!c.name().is_empty());
        }
    }

    #[test]
    fn category_serde_round_trip() {
        let json = serde_json::to_string(&Category::C5).unwrap();
        assert_eq!(json, "\"C5\"");
        let back: Category = serde_json::from_str(&json).unwrap();
        assert_eq!(back, Category::C5);
        assert!(serde_json::from_str::<Category>("\"C18\"").is_err());
    }

    #[test]
    fn seed_rejects_empty_fields() {
        assert!(SeedKnowledge::new("", "Univ Z").is_err());
        assert!(SeedKnowledge::new("A B", " ").is_err());
        assert!(SeedKnowledge::new("A B", "Univ Z").is_ok());
    }

    #[test]
    fn op_validation() {
        assert!(KnowledgeOperation::add("", "x", "u").validate().is_err());
        assert!(KnowledgeOperation::add("k", "", "u").validate().is_err());
        assert!(KnowledgeOperation::update("k", " ", "u").validate().is_err());
        assert!(KnowledgeOperation::delete("k").validate().is_ok());
    }

    #[test]
    fn insight_validation_requires_known_keys_and_two_sources() {
        let seed = SeedKnowledge::new("A B", "Univ Z").unwrap();
        let mut kb = KnowledgeBase::new(seed);
        kb.begin_iteration(1);
        let ops = vec![
            KnowledgeOperation::add("workplace", "Office in City A", "https://a.example/1"),
            KnowledgeOperation::add("weekend spot", "City B gym", "https://b.example/2"),
            KnowledgeOperation::add("hobby", "tennis", "https://a.example/1"),
        ];
        apply_ops_for_test(&mut kb, ops);

        let multi = Insight {
            statement: "weekly commute between City A and City B".into(),
            supporting_keys: vec!["workplace".into(), "weekend spot".into()],
            category: Category::C12,
            sources: BTreeSet::new(),
        };
        let single = Insight {
            statement: "plays tennis at the office".into(),
            supporting_keys: vec!["workplace".into(), "hobby".into()],
            category: Category::C12,
            sources: BTreeSet::new(),
        };
        let ghost = Insight {
            statement: "cites a missing key".into(),
            supporting_keys: vec!["no such key".into()],
            category: Category::C17,
            sources: BTreeSet::new(),
        };
        let (set, downgraded) = InsightSet::validated(vec![multi, single, ghost], &kb);
        assert_eq!(set.insights.len(), 1);
        assert_eq!(set.insights[0].sources.len(), 2);
        assert_eq!(downgraded.len(), 2);
    }

    fn apply_ops_for_test(kb: &mut KnowledgeBase, ops: Vec<KnowledgeOperation>) {
        super::super::ops::apply_operations(kb, &ops).unwrap();
    }
}
