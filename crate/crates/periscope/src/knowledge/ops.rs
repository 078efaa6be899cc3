//! The Add/Update/Delete algebra over a knowledge base, the diff that
//! reconstructs one base from another, and coverage against a ground truth.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::types::{
    GroundTruthProfile, KnowledgeBase, KnowledgeEntry, KnowledgeOperation, LoggedOperation,
    OpAction, OpMeta, ProvenanceKind, Tier,
};

/// Canonical form of an entry key: lowercased, trimmed, inner whitespace
/// collapsed to single spaces.
pub fn canonical_key(raw: &str) -> String {
    raw.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// What happened to each operation in an applied batch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpOutcome {
    Added,
    /// Add on an existing key degrades to an update.
    AddedAsUpdate,
    Updated,
    /// Update on a missing key inserts instead of failing.
    UpdatedAsAdd,
    Deleted,
    /// Delete on an absent key is a warning, never an error.
    DeleteAbsent,
}

impl OpOutcome {
    pub fn as_str(&self) -> &'static str {
        match self {
            OpOutcome::Added => "added",
            OpOutcome::AddedAsUpdate => "added_as_update",
            OpOutcome::Updated => "updated",
            OpOutcome::UpdatedAsAdd => "updated_as_add",
            OpOutcome::Deleted => "deleted",
            OpOutcome::DeleteAbsent => "delete_absent",
        }
    }
}

/// Summary of one applied batch.
#[derive(Debug, Clone, Default)]
pub struct ApplyReport {
    pub outcomes: Vec<OpOutcome>,
    pub warnings: Vec<String>,
}

/// Apply a batch of operations in order.
///
/// The whole batch is validated up front; a malformed operation rejects the
/// batch with its index and leaves the base untouched. Delete on an absent
/// key is recorded as a warning, not an error. Every applied operation is
/// appended to the base's log.
pub fn apply_operations(kb: &mut KnowledgeBase, ops: &[KnowledgeOperation]) -> Result<ApplyReport> {
    for (index, op) in ops.iter().enumerate() {
        op.validate().map_err(|e| Error::BadOperation {
            index,
            reason: e.to_string(),
        })?;
    }

    let iteration = kb.iteration.max(1);
    let mut report = ApplyReport::default();

    for op in ops {
        let key = canonical_key(&op.key);
        let outcome = match op.action {
            OpAction::Add | OpAction::Update => {
                let existed = kb.entries.contains_key(&key);
                if existed {
                    let entry = kb.entries.get_mut(&key).expect("checked above");
                    update_entry(entry, op, iteration);
                    if op.action == OpAction::Add {
                        OpOutcome::AddedAsUpdate
                    } else {
                        OpOutcome::Updated
                    }
                } else {
                    let entry = new_entry(&key, op, iteration);
                    kb.entries.insert(key.clone(), entry);
                    if op.action == OpAction::Add {
                        OpOutcome::Added
                    } else {
                        OpOutcome::UpdatedAsAdd
                    }
                }
            }
            OpAction::Delete => {
                if kb.entries.remove(&key).is_some() {
                    OpOutcome::Deleted
                } else {
                    report
                        .warnings
                        .push(format!("delete on absent key {key:?}"));
                    OpOutcome::DeleteAbsent
                }
            }
        };
        kb.log.push(LoggedOperation {
            iteration,
            op: op.clone(),
            outcome: outcome.as_str().to_string(),
        });
        report.outcomes.push(outcome);
    }

    Ok(report)
}

fn new_entry(key: &str, op: &KnowledgeOperation, iteration: u32) -> KnowledgeEntry {
    let meta = op.meta.clone().unwrap_or_default();
    let mut sources = meta.sources_replace.unwrap_or_default();
    if sources.is_empty() && !op.source_url.is_empty() {
        sources.insert(op.source_url.clone());
    }
    let provenance = meta.provenance.unwrap_or_default();
    let iteration_added = meta.iteration_added.unwrap_or(iteration);
    KnowledgeEntry {
        key: key.to_string(),
        fact: op.fact.clone(),
        tier: meta.tier.unwrap_or(default_tier(provenance)),
        category: meta.category.unwrap_or(super::types::Category::C17),
        confidence: meta.confidence.unwrap_or(1.0).clamp(0.0, 1.0),
        sources,
        iteration_added,
        last_modified_iteration: meta.last_modified.unwrap_or(iteration).max(iteration_added),
        provenance,
    }
}

fn update_entry(entry: &mut KnowledgeEntry, op: &KnowledgeOperation, iteration: u32) {
    entry.fact = op.fact.clone();
    let meta = op.meta.clone().unwrap_or_default();
    if let Some(replace) = meta.sources_replace {
        entry.sources = replace;
    } else if !op.source_url.is_empty() {
        entry.sources.insert(op.source_url.clone());
    }
    if let Some(tier) = meta.tier {
        entry.tier = tier;
    }
    if let Some(category) = meta.category {
        entry.category = category;
    }
    if let Some(confidence) = meta.confidence {
        entry.confidence = confidence.clamp(0.0, 1.0);
    }
    if let Some(provenance) = meta.provenance {
        entry.provenance = provenance;
    }
    entry.last_modified_iteration = meta
        .last_modified
        .unwrap_or(iteration)
        .max(entry.iteration_added);
}

fn default_tier(provenance: ProvenanceKind) -> Tier {
    match provenance {
        ProvenanceKind::ExplicitMatch => Tier::Dii,
        ProvenanceKind::SingleSourceInference => Tier::Cii,
        ProvenanceKind::CrossSourceSynthesis => Tier::Ami,
    }
}

/// Operations that transform `old`'s entries into `new`'s, field for field.
/// Applying the result to a clone of `old` yields a base whose entries equal
/// `new`'s. The iteration counter and log are not reconciled.
pub fn diff(old: &KnowledgeBase, new: &KnowledgeBase) -> Vec<KnowledgeOperation> {
    let mut ops = Vec::new();

    for key in old.entries.keys() {
        if !new.entries.contains_key(key) {
            ops.push(KnowledgeOperation::delete(key.clone()));
        }
    }

    for (key, entry) in &new.entries {
        match old.entries.get(key) {
            Some(existing) if existing == entry => {}
            Some(existing) => {
                // Update can rewrite every field except iteration_added.
                if existing.iteration_added == entry.iteration_added {
                    ops.push(full_op(OpAction::Update, entry));
                } else {
                    ops.push(KnowledgeOperation::delete(key.clone()));
                    ops.push(full_op(OpAction::Add, entry));
                }
            }
            None => ops.push(full_op(OpAction::Add, entry)),
        }
    }

    ops
}

fn full_op(action: OpAction, entry: &KnowledgeEntry) -> KnowledgeOperation {
    KnowledgeOperation {
        key: entry.key.clone(),
        fact: entry.fact.clone(),
        action,
        source_url: String::new(),
        rationale: "reconciliation".into(),
        meta: Some(OpMeta {
            tier: Some(entry.tier),
            category: Some(entry.category),
            confidence: Some(entry.confidence),
            provenance: Some(entry.provenance),
            sources_replace: Some(entry.sources.clone()),
            iteration_added: Some(entry.iteration_added),
            last_modified: Some(entry.last_modified_iteration),
        }),
    }
}

/// Normalize a fact string for equivalence checks: lowercase, trimmed,
/// whitespace collapsed.
pub fn normalized_match(a: &str, b: &str) -> bool {
    normalize_fact(a) == normalize_fact(b)
}

fn normalize_fact(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Coverage of a knowledge base against a ground-truth profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Coverage {
    /// Fraction of ground-truth facts matched by some entry, in [0, 1].
    pub ratio: f64,
    /// (truth key, entry key) pairs, one per matched truth fact.
    pub matched: Vec<(String, String)>,
}

/// Fraction of ground-truth facts that some knowledge entry matches under
/// `matcher`. An empty truth is vacuously covered (ratio 1.0).
pub fn coverage<F>(kb: &KnowledgeBase, truth: &GroundTruthProfile, matcher: F) -> Coverage
where
    F: Fn(&str, &str) -> bool,
{
    if truth.facts.is_empty() {
        return Coverage {
            ratio: 1.0,
            matched: Vec::new(),
        };
    }
    let mut matched = Vec::new();
    for (truth_key, truth_fact) in &truth.facts {
        let hit = kb
            .entries
            .values()
            .find(|entry| matcher(&entry.fact, &truth_fact.fact));
        if let Some(entry) = hit {
            matched.push((truth_key.clone(), entry.key.clone()));
        }
    }
    Coverage {
        ratio: matched.len() as f64 / truth.facts.len() as f64,
        matched,
    }
}

#[cfg(test)]
mod tests {
    use super::super::types::{Category, SeedKnowledge, Tier, TruthFact};
    use super::*;

    fn kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(SeedKnowledge::new("A B", "Univ Z").unwrap());
        kb.begin_iteration(1);
        kb
    }

    #[test]
    fn add_into_empty() {
        let mut base = kb();
        let report =
            apply_operations(&mut base, &[KnowledgeOperation::add("affiliation", "Univ Z", "u1")])
                .unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(report.outcomes, vec![OpOutcome::Added]);
        let entry = base.get("affiliation").unwrap();
        assert_eq!(entry.fact, "Univ Z");
        assert!(entry.sources.contains("u1"));
        assert_eq!(entry.iteration_added, 1);
    }

    #[test]
    fn update_replaces_fact_and_merges_sources() {
        let mut base = kb();
        apply_operations(&mut base, &[KnowledgeOperation::add("affiliation", "Univ Z", "u1")])
            .unwrap();
        base.begin_iteration(2);
        apply_operations(
            &mut base,
            &[KnowledgeOperation::update("affiliation", "Univ W", "u2")],
        )
        .unwrap();
        let entry = base.get("affiliation").unwrap();
        assert_eq!(entry.fact, "Univ W");
        assert!(!entry.fact.contains("Univ Z"));
        assert_eq!(entry.sources.len(), 2);
        assert_eq!(entry.iteration_added, 1);
        assert_eq!(entry.last_modified_iteration, 2);
    }

    #[test]
    fn delete_absent_is_a_warning() {
        let mut base = kb();
        apply_operations(&mut base, &[KnowledgeOperation::add("x", "1", "u")]).unwrap();
        let report = apply_operations(&mut base, &[KnowledgeOperation::delete("y")]).unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(report.outcomes, vec![OpOutcome::DeleteAbsent]);
    }

    #[test]
    fn add_existing_key_degrades_to_update() {
        let mut base = kb();
        apply_operations(&mut base, &[KnowledgeOperation::add("email", "a@x", "u1")]).unwrap();
        let report =
            apply_operations(&mut base, &[KnowledgeOperation::add("email", "a@x", "u1")]).unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(report.outcomes, vec![OpOutcome::AddedAsUpdate]);
    }

    #[test]
    fn keys_are_canonicalized_before_lookup() {
        let mut base = kb();
        apply_operations(&mut base, &[KnowledgeOperation::add("  Email   Address ", "a@x", "u")])
            .unwrap();
        assert!(base.contains_key("email address"));
        apply_operations(
            &mut base,
            &[KnowledgeOperation::update("EMAIL ADDRESS", "b@x", "u2")],
        )
        .unwrap();
        assert_eq!(base.len(), 1);
        assert_eq!(base.get("email address").unwrap().fact, "b@x");
    }

    #[test]
    fn malformed_op_rejected_with_index() {
        let mut base = kb();
        let err = apply_operations(
            &mut base,
            &[
                KnowledgeOperation::add("ok", "x", "u"),
                KnowledgeOperation::add("", "y", "u"),
            ],
        )
        .unwrap_err();
        match err {
            Error::BadOperation { index, .. } => assert_eq!(index, 1),
            other => panic!("unexpected error {other:?}"),
        }
        // batch rejected atomically
        assert!(base.is_empty());
    }

    #[test]
    fn diff_identity_and_single_add() {
        let base = kb();
        assert!(diff(&base, &base).is_empty());

        let mut with_a = base.clone();
        apply_operations(&mut with_a, &[KnowledgeOperation::add("a", "1", "u")]).unwrap();
        let ops = diff(&base, &with_a);
        assert_eq!(ops.len(), 1);
        assert_eq!(ops[0].action, OpAction::Add);

        let mut rebuilt = base.clone();
        apply_operations(&mut rebuilt, &ops).unwrap();
        assert!(rebuilt.same_entries(&with_a));
    }

    #[test]
    fn coverage_examples() {
        let truth = GroundTruthProfile {
            facts: [
                ("f1", "lives in City Y"),
                ("f2", "attended Univ Z"),
                ("f3", "email a@x"),
                ("f4", "works at Lab Q"),
                ("f5", "born 1990"),
            ]
            .into_iter()
            .map(|(k, f)| {
                (
                    k.to_string(),
                    TruthFact {
                        fact: f.to_string(),
                        tier: Tier::Dii,
                        category: Category::C17,
                    },
                )
            })
            .collect(),
        };

        let empty = kb();
        let cov = coverage(&empty, &truth, normalized_match);
        assert_eq!(cov.ratio, 0.0);
        assert!(cov.matched.is_empty());

        let mut full = kb();
        let ops: Vec<_> = truth
            .facts
            .iter()
            .map(|(k, t)| KnowledgeOperation::add(k.clone(), t.fact.clone(), "u"))
            .collect();
        apply_operations(&mut full, &ops).unwrap();
        let cov = coverage(&full, &truth, normalized_match);
        assert_eq!(cov.ratio, 1.0);
        assert_eq!(cov.matched.len(), 5);

        let empty_truth = GroundTruthProfile::default();
        let cov = coverage(&empty, &empty_truth, normalized_match);
        assert_eq!(cov.ratio, 1.0);
    }

    #[test]
    fn coverage_is_monotone_under_matched_add() {
        let truth = GroundTruthProfile {
            facts: [(
                "f1".to_string(),
                TruthFact {
                    fact: "plays chess".into(),
                    tier: Tier::Cii,
                    category: Category::C12,
                },
            )]
            .into_iter()
            .collect(),
        };
        let mut base = kb();
        let before = coverage(&base, &truth, normalized_match).ratio;
        apply_operations(&mut base, &[KnowledgeOperation::add("hobby", "Plays  CHESS", "u")])
            .unwrap();
        let after = coverage(&base, &truth, normalized_match).ratio;
        assert!(after >= before);
        assert_eq!(after, 1.0);
    }
}
