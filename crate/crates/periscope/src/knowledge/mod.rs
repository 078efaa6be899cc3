//! Knowledge state for an audit target: the fact dictionary, the
//! Add/Update/Delete operation algebra that mutates it, coverage against a
//! ground-truth profile, and line-delimited persistence.

mod ops;
mod store;
mod types;

pub use ops::{apply_operations, canonical_key, coverage, diff, normalized_match, ApplyReport, Coverage, OpOutcome};
pub use store::{load_knowledge, persist_knowledge, KB_SCHEMA};
pub use types::{
    Category, GroundTruthProfile, Insight, InsightSet, KnowledgeBase, KnowledgeEntry,
    KnowledgeOperation, LoggedOperation, OpAction, OpMeta, ProvenanceKind, SeedKnowledge,
    StrategicFeedback, Tier, TruthFact,
};
