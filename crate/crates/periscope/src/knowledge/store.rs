//! Line-delimited knowledge file: a header record followed by one entry
//! record per line, UTF-8, sorted by key.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::types::{KnowledgeBase, KnowledgeEntry, SeedKnowledge};

pub const KB_SCHEMA: &str = "kb/1";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    schema: String,
    seed: SeedKnowledge,
    iteration: u32,
    entry_count: usize,
}

/// Write `kb` to `path`. The first line is the header record; every further
/// line is one entry in key order. The operation log is not part of this
/// file.
pub fn persist_knowledge(kb: &KnowledgeBase, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header = Header {
        schema: KB_SCHEMA.to_string(),
        seed: kb.seed.clone(),
        iteration: kb.iteration,
        entry_count: kb.len(),
    };
    out.push_str(&serde_json::to_string(&header)?);
    out.push('\n');
    for entry in kb.entries() {
        out.push_str(&serde_json::to_string(entry)?);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Load a knowledge file written by [`persist_knowledge`]. A malformed line
/// fails with its 1-based line number.
pub fn load_knowledge(path: &Path) -> Result<KnowledgeBase> {
    let raw =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut lines = raw.lines().enumerate();

    let (_, first) = lines.next().ok_or(Error::CorruptKnowledgeFile {
        line: 1,
        reason: "empty file".into(),
    })?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| Error::CorruptKnowledgeFile {
            line: 1,
            reason: e.to_string(),
        })?;
    if header.schema != KB_SCHEMA {
        return Err(Error::SchemaMismatch {
            expected: KB_SCHEMA.into(),
            found: header.schema,
        });
    }

    let mut entries: BTreeMap<String, KnowledgeEntry> = BTreeMap::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let entry: KnowledgeEntry =
            serde_json::from_str(line).map_err(|e| Error::CorruptKnowledgeFile {
                line: idx + 1,
                reason: e.to_string(),
            })?;
        entry.validate().map_err(|e| Error::CorruptKnowledgeFile {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        if entries.insert(entry.key.clone(), entry).is_some() {
            return Err(Error::CorruptKnowledgeFile {
                line: idx + 1,
                reason: "duplicate key".into(),
            });
        }
    }

    if entries.len() != header.entry_count {
        return Err(Error::CorruptKnowledgeFile {
            line: entries.len() + 1,
            reason: format!(
                "header announces {} entries, file holds {}",
                header.entry_count,
                entries.len()
            ),
        });
    }

    let mut kb = KnowledgeBase::new(header.seed);
    kb.iteration = header.iteration;
    kb.entries = entries;
    Ok(kb)
}

#[cfg(test)]
mod tests {
    use super::super::ops::apply_operations;
    use super::super::types::KnowledgeOperation;
    use super::*;

    fn sample_kb() -> KnowledgeBase {
        let mut kb = KnowledgeBase::new(SeedKnowledge::new("A B", "Univ Z").unwrap());
        kb.begin_iteration(2);
        apply_operations(
            &mut kb,
            &[
                KnowledgeOperation::add("email", "a@x.org", "https://a.example/p"),
                KnowledgeOperation::add("city", "City Y", "https://b.example/q"),
                KnowledgeOperation::add("degree", "PhD CS", "https://a.example/p"),
            ],
        )
        .unwrap();
        kb
    }

    #[test]
    fn round_trip_preserves_structure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        let kb = sample_kb();
        persist_knowledge(&kb, &path).unwrap();
        let loaded = load_knowledge(&path).unwrap();
        assert!(loaded.same_entries(&kb));
        assert_eq!(loaded.iteration, kb.iteration);
        assert_eq!(loaded.seed, kb.seed);
    }

    #[test]
    fn empty_kb_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        let kb = KnowledgeBase::new(SeedKnowledge::new("A B", "Univ Z").unwrap());
        persist_knowledge(&kb, &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        assert_eq!(raw.lines().count(), 1);
        assert!(load_knowledge(&path).unwrap().is_empty());
    }

    #[test]
    fn three_entries_make_four_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        persist_knowledge(&sample_kb(), &path).unwrap();
        let raw = std::fs::read_to_string(&path).unwrap();
        assert_eq!(raw.lines().count(), 4);
    }

    #[test]
    fn corrupt_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        persist_knowledge(&sample_kb(), &path).unwrap();
        let mut raw = std::fs::read_to_string(&path).unwrap();
        let third_start = raw
            .match_indices('\n')
            .nth(1)
            .map(|(i, _)| i + 1)
            .unwrap();
        raw.insert_str(third_start, "{broken");
        std::fs::write(&path, raw).unwrap();
        match load_knowledge(&path).unwrap_err() {
            Error::CorruptKnowledgeFile { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn schema_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kb.jsonl");
        std::fs::write(
            &path,
            "{\"schema\":\"kb/0\",\"seed\":{\"full_name\":\"A\",\"affiliation\":\"B\"},\"iteration\":0,\"entry_count\":0}\n",
        )
        .unwrap();
        assert!(matches!(
            load_knowledge(&path).unwrap_err(),
            Error::SchemaMismatch { .. }
        ));
    }
}
