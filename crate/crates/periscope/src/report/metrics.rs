//! Audit metrics and external-verification handling. Accuracy slots are
//! only ever populated from a verification source — a ground truth or a
//! reviewed verdict file — never invented.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knowledge::{canonical_key, coverage, normalized_match, GroundTruthProfile, KnowledgeBase};

/// Counts and efficiency numbers for one completed audit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditMetrics {
    pub iterations_run: u32,
    pub early_stopped: bool,
    pub fact_count: usize,
    /// Distinct source URLs cited by entries.
    pub source_url_count: usize,
    /// URLs dequeued for crawling over the whole audit.
    pub visited_url_count: usize,
    pub model_calls: u64,
    pub refusals: u64,
    pub parse_errors: u64,
    pub refusal_rate: f64,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub total_tokens: u64,
    pub wall_time_ms: u64,
    pub incident_count: usize,
}

/// Reviewer verdict for one entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
    Duplicate,
    Invalid,
}

impl Verdict {
    fn parse(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "correct" => Ok(Verdict::Correct),
            "incorrect" => Ok(Verdict::Incorrect),
            "duplicate" => Ok(Verdict::Duplicate),
            "invalid" => Ok(Verdict::Invalid),
            other => Err(Error::InvalidInput(format!("unknown verdict {other:?}"))),
        }
    }
}

/// Accuracy numbers derived from a verification source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    /// Where the verdicts came from.
    pub source: String,
    /// correct / (correct + incorrect + invalid); duplicates are removed
    /// from the denominator.
    pub fact_accuracy: f64,
    pub correct: usize,
    pub incorrect: usize,
    pub duplicate: usize,
    pub invalid: usize,
    /// Fraction of ground-truth facts recovered, when a truth was the
    /// verification source.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coverage: Option<f64>,
}

/// Parse a verification file: one `<entry key>\t<verdict>` line per entry,
/// `#` comments allowed. Keys must exist in the knowledge base.
pub fn load_verification_file(path: &Path, kb: &KnowledgeBase) -> Result<BTreeMap<String, Verdict>> {
    let raw =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut verdicts = BTreeMap::new();
    let mut unknown = Vec::new();
    for line in raw.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, verdict) = line
            .split_once('\t')
            .or_else(|| line.split_once('='))
            .ok_or_else(|| {
                Error::InvalidInput(format!("verification line {line:?} is not `key<TAB>verdict`"))
            })?;
        let key = canonical_key(key);
        if !kb.contains_key(&key) {
            unknown.push(key.clone());
            continue;
        }
        verdicts.insert(key, Verdict::parse(verdict)?);
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownVerificationKeys(unknown));
    }
    Ok(verdicts)
}

/// Accuracy from reviewer verdicts.
pub fn accuracy_from_verdicts(verdicts: &BTreeMap<String, Verdict>, source: &str) -> AccuracyReport {
    let count = |v: Verdict| verdicts.values().filter(|x| **x == v).count();
    let correct = count(Verdict::Correct);
    let incorrect = count(Verdict::Incorrect);
    let duplicate = count(Verdict::Duplicate);
    let invalid = count(Verdict::Invalid);
    let denominator = correct + incorrect + invalid;
    AccuracyReport {
        source: source.to_string(),
        fact_accuracy: if denominator == 0 {
            0.0
        } else {
            correct as f64 / denominator as f64
        },
        correct,
        incorrect,
        duplicate,
        invalid,
        coverage: None,
    }
}

/// Accuracy against a planted ground truth: an entry is correct when it
/// matches some truth fact under normalized equality; coverage is the
/// matched fraction of the truth.
pub fn accuracy_vs_truth(kb: &KnowledgeBase, truth: &GroundTruthProfile) -> AccuracyReport {
    let cov = coverage(kb, truth, normalized_match);
    let matched_entries: std::collections::BTreeSet<&String> =
        cov.matched.iter().map(|(_, entry_key)| entry_key).collect();
    let correct = kb
        .entries()
        .filter(|e| matched_entries.contains(&e.key))
        .count();
    let incorrect = kb.len() - correct;
    AccuracyReport {
        source: "ground-truth".into(),
        fact_accuracy: if kb.len() == 0 {
            0.0
        } else {
            correct as f64 / kb.len() as f64
        },
        correct,
        incorrect,
        duplicate: 0,
        invalid: 0,
        coverage: Some(cov.ratio),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::{apply_operations, KnowledgeOperation, SeedKnowledge};

    fn kb_with(keys: &[(&str, &str)]) -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(SeedKnowledge::new("A B", "Univ Z").unwrap());
        kb.begin_iteration(1);
        let ops: Vec<_> = keys
            .iter()
            .map(|(k, f)| KnowledgeOperation::add(*k, *f, "https://s.example/p"))
            .collect();
        apply_operations(&mut kb, &ops).unwrap();
        kb
    }

    #[test]
    fn verification_file_round_trip() {
        let kb = kb_with(&[("email", "a@x"), ("city", "City Y"), ("bogus", "zz")]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.tsv");
        std::fs::write(&path, "# review\nemail\tcorrect\ncity\tincorrect\nbogus\tinvalid\n")
            .unwrap();
        let verdicts = load_verification_file(&path, &kb).unwrap();
        let report = accuracy_from_verdicts(&verdicts, "file");
        assert_eq!(report.correct, 1);
        assert_eq!(report.incorrect, 1);
        assert_eq!(report.invalid, 1);
        assert!((report.fact_accuracy - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_lists_it() {
        let kb = kb_with(&[("email", "a@x")]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("verdicts.tsv");
        std::fs::write(&path, "ghost\tcorrect\n").unwrap();
        match load_verification_file(&path, &kb).unwrap_err() {
            Error::UnknownVerificationKeys(keys) => assert_eq!(keys, vec!["ghost".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicates_leave_the_denominator() {
        let verdicts: BTreeMap<String, Verdict> = [
            ("a".to_string(), Verdict::Correct),
            ("b".to_string(), Verdict::Duplicate),
        ]
        .into_iter()
        .collect();
        let report = accuracy_from_verdicts(&verdicts, "x");
        assert_eq!(report.fact_accuracy, 1.0);
        assert_eq!(report.duplicate, 1);
    }

    #[test]
    fn truth_accuracy_counts_matched_entries() {
        use crate::knowledge::{Category, Tier, TruthFact};
        let kb = kb_with(&[("email", "a@x"), ("noise", "unrelated")]);
        let truth = GroundTruthProfile {
            facts: [(
                "email".to_string(),
                TruthFact {
                    fact: "A@X".into(),
                    tier: Tier::Dii,
                    category: Category::C2,
                },
            )]
            .into_iter()
            .collect(),
        };
        let report = accuracy_vs_truth(&kb, &truth);
        assert_eq!(report.correct, 1);
        assert_eq!(report.incorrect, 1);
        assert_eq!(report.fact_accuracy, 0.5);
        assert_eq!(report.coverage, Some(1.0));
    }
}
