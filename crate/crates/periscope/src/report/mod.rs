//! Tier classification, category assignment, metric computation and report
//! rendering. Rendering is deterministic: stable ordering, no timestamps in
//! the content body, and the structured form loads back losslessly.

mod category;
mod domain;
mod metrics;

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{
    Category, Insight, InsightSet, KnowledgeBase, ProvenanceKind, SeedKnowledge, Tier,
};
use crate::media::MediaFinding;

pub use category::{Categorizer, RuleCategorizer};
pub use domain::{domain_histogram, DomainClass, DomainRules};
pub use metrics::{
    accuracy_from_verdicts, accuracy_vs_truth, load_verification_file, AccuracyReport,
    AuditMetrics, Verdict,
};

pub const REPORT_SCHEMA: &str = "report/1";

/// Map an entry's provenance onto its exposure tier. Total and
/// deterministic: verbatim extraction is surface knowledge, single-source
/// inference sits below it, and cross-source synthesis is the deep layer.
pub fn classify_tier(provenance: ProvenanceKind) -> Tier {
    match provenance {
        ProvenanceKind::ExplicitMatch => Tier::Dii,
        ProvenanceKind::SingleSourceInference => Tier::Cii,
        ProvenanceKind::CrossSourceSynthesis => Tier::Ami,
    }
}

/// One knowledge entry as rendered in a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub key: String,
    pub fact: String,
    pub tier: Tier,
    pub confidence: f64,
    pub sources: Vec<String>,
}

/// The complete audit report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: String,
    pub seed: SeedKnowledge,
    /// Category id → entries; every knowledge entry appears exactly once.
    pub entries_by_category: BTreeMap<String, Vec<ReportEntry>>,
    pub insights: Vec<Insight>,
    /// All 17 categories, zeros included.
    pub category_counts: BTreeMap<String, usize>,
    /// tier → category id → count.
    pub tier_matrix: BTreeMap<String, BTreeMap<String, usize>>,
    pub domain_histogram: Vec<(DomainClass, usize)>,
    /// Derived severity index: Σ (category count × category severity).
    pub severity_index: f64,
    pub metrics: AuditMetrics,
    pub media_findings: Vec<MediaFinding>,
    /// incident kind → count.
    pub incident_summary: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<AccuracyReport>,
}

/// Assemble a report from a finished audit's pieces.
pub fn build_report(
    kb: &KnowledgeBase,
    insights: &InsightSet,
    metrics: AuditMetrics,
    media_findings: Vec<MediaFinding>,
    incident_kinds: impl IntoIterator<Item = String>,
    domain_rules: &DomainRules,
) -> AuditReport {
    let mut entries_by_category: BTreeMap<String, Vec<ReportEntry>> = BTreeMap::new();
    let mut category_counts: BTreeMap<String, usize> = Category::all()
        .map(|c| (c.to_string(), 0usize))
        .collect();
    let mut tier_matrix: BTreeMap<String, BTreeMap<String, usize>> = Tier::ALL
        .iter()
        .map(|t| (t.to_string(), BTreeMap::new()))
        .collect();

    for entry in kb.entries() {
        let cat = entry.category.to_string();
        entries_by_category
            .entry(cat.clone())
            .or_default()
            .push(ReportEntry {
                key: entry.key.clone(),
                fact: entry.fact.clone(),
                tier: entry.tier,
                confidence: entry.confidence,
                sources: entry.sources.iter().cloned().collect(),
            });
        *category_counts.get_mut(&cat).expect("all categories present") += 1;
        *tier_matrix
            .get_mut(entry.tier.as_str())
            .expect("all tiers present")
            .entry(cat)
            .or_insert(0) += 1;
    }

    let severity_index: f64 = Category::all()
        .map(|c| category_counts[&c.to_string()] as f64 * c.ppis())
        .sum();

    let all_sources = kb.all_sources();
    let histogram = domain_histogram(all_sources.iter().map(|s| s.as_str()), domain_rules);

    let mut incident_summary: BTreeMap<String, usize> = BTreeMap::new();
    for kind in incident_kinds {
        *incident_summary.entry(kind).or_insert(0) += 1;
    }

    let mut media_findings = media_findings;
    media_findings.sort_by(|a, b| a.sha256.cmp(&b.sha256));

    AuditReport {
        schema: REPORT_SCHEMA.into(),
        seed: kb.seed.clone(),
        entries_by_category,
        insights: insights.insights.clone(),
        category_counts,
        tier_matrix,
        domain_histogram: histogram,
        severity_index,
        metrics,
        media_findings,
        incident_summary,
        accuracy: None,
    }
}

impl AuditReport {
    pub fn total_entries(&self) -> usize {
        self.category_counts.values().sum()
    }

    /// Structural invariants every well-formed report satisfies.
    pub fn validate(&self) -> Result<()> {
        let by_cat: usize = self.entries_by_category.values().map(|v| v.len()).sum();
        if by_cat != self.total_entries() {
            return Err(Error::InvalidInput(format!(
                "category counts sum {} != grouped entries {by_cat}",
                self.total_entries()
            )));
        }
        for (tier, row) in &self.tier_matrix {
            let row_sum: usize = row.values().sum();
            let by_tier: usize = self
                .entries_by_category
                .values()
                .flatten()
                .filter(|e| e.tier.as_str() == tier)
                .count();
            if row_sum != by_tier {
                return Err(Error::InvalidInput(format!(
                    "tier {tier} matrix row sums to {row_sum}, entries say {by_tier}"
                )));
            }
        }
        Ok(())
    }

    /// Deterministic structured rendering.
    pub fn render_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("report serializes");
        out.push('\n');
        out
    }

    pub fn load_json(raw: &str) -> Result<Self> {
        let report: AuditReport = serde_json::from_str(raw)?;
        if report.schema != REPORT_SCHEMA {
            return Err(Error::SchemaMismatch {
                expected: REPORT_SCHEMA.into(),
                found: report.schema,
            });
        }
        Ok(report)
    }

    pub fn load_json_file(path: &Path) -> Result<Self> {
        let raw =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::load_json(&raw)
    }

    /// Deterministic human-readable rendering: all 17 category headings
    /// with counts, the tier matrix, the source histogram, metrics, media
    /// leaks and incidents.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str("PRIVACY EXPOSURE AUDIT REPORT\n");
        out.push_str("=============================\n\n");
        out.push_str(&format!(
            "Target seed : {} / {}\n",
            self.seed.full_name, self.seed.affiliation
        ));
        out.push_str(&format!("Entries     : {}\n", self.total_entries()));
        out.push_str(&format!("Insights    : {}\n", self.insights.len()));
        out.push_str(&format!("Severity idx: {:.1} (derived: Σ count × severity score)\n", self.severity_index));
        out.push_str("\n-- Exposure by category --\n");
        for category in Category::all() {
            let id = category.to_string();
            let count = self.category_counts.get(&id).copied().unwrap_or(0);
            out.push_str(&format!(
                "{:<4} {:<28} severity {:>3.1}  count {}\n",
                id,
                category.name(),
                category.ppis(),
                count
            ));
            if let Some(entries) = self.entries_by_category.get(&id) {
                for entry in entries {
                    out.push_str(&format!(
                        "     [{}] {} :: {} ({} source{})\n",
                        entry.tier,
                        entry.key,
                        entry.fact,
                        entry.sources.len(),
                        if entry.sources.len() == 1 { "" } else { "s" }
                    ));
                }
            }
        }
        out.push_str("\n-- Tier × category --\n");
        for (tier, row) in &self.tier_matrix {
            let cells: Vec<String> = row.iter().map(|(c, n)| format!("{c}:{n}")).collect();
            out.push_str(&format!("{:<4} {}\n", tier, cells.join(" ")));
        }
        out.push_str("\n-- Cross-source insights --\n");
        if self.insights.is_empty() {
            out.push_str("(none)\n");
        }
        for insight in &self.insights {
            out.push_str(&format!(
                "[{}] {} (supported by: {})\n",
                insight.category,
                insight.statement,
                insight.supporting_keys.join(", ")
            ));
        }
        out.push_str("\n-- Evidentiary source classes --\n");
        if self.domain_histogram.is_empty() {
            out.push_str("(none)\n");
        }
        for (class, count) in &self.domain_histogram {
            out.push_str(&format!("{:<14} {}\n", class.to_string(), count));
        }
        out.push_str("\n-- Efficiency --\n");
        out.push_str(&format!(
            "iterations {} (early stop: {})\nmodel calls {} | refusals {} | parse errors {} | refusal rate {:.2}%\ntokens {} in / {} out / {} total\nwall time {} ms\nvisited urls {} | cited source urls {}\n",
            self.metrics.iterations_run,
            self.metrics.early_stopped,
            self.metrics.model_calls,
            self.metrics.refusals,
            self.metrics.parse_errors,
            self.metrics.refusal_rate * 100.0,
            self.metrics.input_tokens,
            self.metrics.output_tokens,
            self.metrics.total_tokens,
            self.metrics.wall_time_ms,
            self.metrics.visited_url_count,
            self.metrics.source_url_count,
        ));
        if let Some(accuracy) = &self.accuracy {
            out.push_str("\n-- Verified accuracy --\n");
            out.push_str(&format!(
                "source {} | fact accuracy {:.2}% ({} correct / {} incorrect / {} duplicate / {} invalid)\n",
                accuracy.source,
                accuracy.fact_accuracy * 100.0,
                accuracy.correct,
                accuracy.incorrect,
                accuracy.duplicate,
                accuracy.invalid,
            ));
            if let Some(cov) = accuracy.coverage {
                out.push_str(&format!("coverage {:.2}%\n", cov * 100.0));
            }
        }
        out.push_str("\n-- Metadata leaks --\n");
        let leaks: Vec<&MediaFinding> = self.media_findings.iter().filter(|f| f.leak).collect();
        if leaks.is_empty() {
            out.push_str("(none)\n");
        }
        for finding in leaks {
            out.push_str(&format!(
                "{} {} ({})\n",
                &finding.sha256[..12],
                finding.labels.join(", "),
                finding.mime
            ));
            if let Some(image) = &finding.image {
                if let Some((lat, lon)) = image.gps {
                    out.push_str(&format!("  gps {lat:.4}, {lon:.4}\n"));
                }
                if let Some(model) = &image.camera_model {
                    out.push_str(&format!("  camera {model}\n"));
                }
                if let Some(ts) = &image.timestamp {
                    out.push_str(&format!("  taken {ts}\n"));
                }
                if let Some(creator) = &image.creator {
                    out.push_str(&format!("  creator {creator}\n"));
                }
            }
            if let Some(pdf) = &finding.pdf {
                if let Some(author) = &pdf.author {
                    out.push_str(&format!("  author {author}\n"));
                }
                if let Some(producer) = &pdf.producer {
                    out.push_str(&format!("  producer {producer}\n"));
                }
            }
        }
        out.push_str("\n-- Incidents --\n");
        if self.incident_summary.is_empty() {
            out.push_str("(none)\n");
        }
        for (kind, count) in &self.incident_summary {
            out.push_str(&format!("{kind}: {count}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{apply_operations, KnowledgeOperation, OpMeta};

    fn sample_report() -> AuditReport {
        let mut kb = KnowledgeBase::new(SeedKnowledge::new("A B", "Univ Z").unwrap());
        kb.begin_iteration(1);
        let categorizer = RuleCategorizer::default();
        let ops: Vec<KnowledgeOperation> = [
            ("email", "a@x.org", "https://univ-z.edu/p"),
            ("home city", "lives in City Y", "https://blog.example/h"),
            ("award", "winner of prize P", "https://univ-z.edu/p2"),
        ]
        .into_iter()
        .map(|(k, f, s)| {
            KnowledgeOperation::add(k, f, s).with_meta(OpMeta {
                category: Some(categorizer.categorize(k, f)),
                ..Default::default()
            })
        })
        .collect();
        apply_operations(&mut kb, &ops).unwrap();
        build_report(
            &kb,
            &InsightSet::default(),
            AuditMetrics::default(),
            Vec::new(),
            ["refusal".to_string(), "refusal".to_string()],
            &DomainRules::default(),
        )
    }

    #[test]
    fn classify_tier_is_total() {
        assert_eq!(classify_tier(ProvenanceKind::ExplicitMatch), Tier::Dii);
        assert_eq!(classify_tier(ProvenanceKind::SingleSourceInference), Tier::Cii);
        assert_eq!(classify_tier(ProvenanceKind::CrossSourceSynthesis), Tier::Ami);
    }

    #[test]
    fn category_counts_sum_to_entry_total() {
        let report = sample_report();
        report.validate().unwrap();
        assert_eq!(report.total_entries(), 3);
        assert_eq!(report.category_counts.len(), 17);
        assert_eq!(report.incident_summary["refusal"], 2);
    }

    #[test]
    fn double_render_is_byte_identical() {
        let report = sample_report();
        assert_eq!(report.render_json(), report.render_json());
        assert_eq!(report.render_text(), report.render_text());
    }

    #[test]
    fn structured_render_round_trips() {
        let report = sample_report();
        let loaded = AuditReport::load_json(&report.render_json()).unwrap();
        assert_eq!(loaded, report);
    }

    #[test]
    fn text_render_lists_all_seventeen_categories() {
        let text = sample_report().render_text();
        for category in Category::all() {
            assert!(
                text.contains(&format!("{category} ")),
                "missing heading {category}"
            );
        }
        assert!(text.contains("Contact Information"));
    }

    #[test]
    fn severity_index_weights_counts() {
        let report = sample_report();
        // C2 email (6.8) + C5 home city (6.9) + C10 award (3.1)
        assert!((report.severity_index - (6.8 + 6.9 + 3.1)).abs() < 1e-9);
    }
}
