//! periscope — an autonomous privacy-exposure auditing engine.
//!
//! From a minimal seed (a person's full name and primary affiliation, given
//! with their consent) the engine iteratively searches, crawls, filters and
//! synthesizes public traces into a tiered knowledge base, then renders an
//! audit report with coverage, accuracy and efficiency metrics. Everything
//! is testable offline against a built-in synthetic web and scripted model
//! oracles.
//!
//! The pipeline per iteration: generate queries → search → score snippets
//! against a coarse gate → crawl admitted URLs politely → reduce page
//! content to evidence bundles → verify bundle identity against a fine gate
//! → analyze attached images → integrate facts through Add/Update/Delete
//! operations → aggregate cross-source insights and strategic feedback.
//!
//! Start with [`explorer::run_audit`] for the full loop, or the `examples/`
//! directory for one runnable program per capability.

pub mod cascade;
pub mod error;
pub mod gateway;
pub mod knowledge;
pub mod media;
pub mod report;
pub mod retrieval;
pub mod simlab;

pub use error::{Error, Result};
