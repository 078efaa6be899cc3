//! Search and crawl tooling: query execution against a provider endpoint,
//! URL queue with canonical dedup, and bounded-parallel polite fetching.

mod crawl;
mod html;
mod queue;
mod robots;
mod search;
mod url;

pub use crawl::{CrawlResult, CrawlStatus, Crawler, FetchPolicy, MediaAsset, UrlMapping};
pub use html::{extract_page, guess_media_mime, PageExtract};
pub use queue::UrlQueue;
pub use robots::{RobotsCache, RobotsRules};
pub use search::{SearchClient, SearchResult};
pub use url::{canonicalize_url, canonicalize_url_with, host_of, DEFAULT_TRACKING_PARAMS};
