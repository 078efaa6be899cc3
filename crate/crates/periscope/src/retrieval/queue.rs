//! Crawl candidate queue with canonical-URL dedup against both pending and
//! visited sets.

use indexmap::IndexSet;
use std::collections::HashSet;

use crate::error::Result;

use super::url::canonicalize_url;

/// Pending/visited URL bookkeeping for one audit. A URL enters the pending
/// set at most once over the audit's lifetime.
#[derive(Debug, Default, Clone)]
pub struct UrlQueue {
    pending: IndexSet<String>,
    visited: HashSet<String>,
}

impl UrlQueue {
    pub fn new() -> Self {
        UrlQueue::default()
    }

    /// Canonicalize and enqueue. Returns true when the URL was actually
    /// added (not already pending or visited).
    pub fn enqueue(&mut self, raw: &str) -> Result<bool> {
        let canonical = canonicalize_url(raw)?;
        if self.visited.contains(&canonical) || self.pending.contains(&canonical) {
            return Ok(false);
        }
        self.pending.insert(canonical);
        Ok(true)
    }

    /// Remove up to `n` URLs in insertion order and mark them visited.
    /// Dequeued URLs count as visited regardless of their fetch outcome.
    pub fn drain(&mut self, n: usize) -> Vec<String> {
        let take = n.min(self.pending.len());
        let batch: Vec<String> = self.pending.drain(..take).collect();
        for url in &batch {
            self.visited.insert(url.clone());
        }
        batch
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn visited_len(&self) -> usize {
        self.visited.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.pending.is_empty()
    }

    pub fn was_visited(&self, canonical: &str) -> bool {
        self.visited.contains(canonical)
    }

    pub fn visited(&self) -> impl Iterator<Item = &String> {
        self.visited.iter()
    }
}
