//! The crawl tool: bounded-parallel polite fetching with robots compliance,
//! per-attempt timeouts, retries, and per-host rate limiting.

use std::collections::HashMap;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use futures::stream::{self, StreamExt};
use tokio::time::timeout;
use url::Url;

use crate::error::{Error, Result};

use super::html::{extract_page, guess_media_mime, PageExtract};
use super::queue::UrlQueue;
use super::robots::{RobotsCache, RobotsRules};

/// Fetch behavior knobs. The shipped defaults are the audit defaults:
/// 15 s timeout, 5 retries spaced 60 s apart, 10 parallel fetches, robots
/// respected, one request per second per host.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchPolicy {
    pub timeout: Duration,
    pub max_retries: u32,
    pub retry_delay: Duration,
    pub max_parallel: usize,
    /// Minimum spacing between requests to one host.
    pub per_host_interval: Duration,
    pub respect_robots: bool,
    pub user_agent: String,
}

impl Default for FetchPolicy {
    fn default() -> Self {
        FetchPolicy {
            timeout: Duration::from_secs(15),
            max_retries: 5,
            retry_delay: Duration::from_secs(60),
            max_parallel: 10,
            per_host_interval: Duration::from_secs(1),
            respect_robots: true,
            user_agent: "periscope-audit/0.1".into(),
        }
    }
}

impl FetchPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.timeout.is_zero()
            || self.max_parallel == 0
            || self.per_host_interval.is_zero()
        {
            return Err(Error::Config(
                "fetch policy values must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One fetched media asset, original bytes retained.
#[derive(Debug, Clone, PartialEq)]
pub struct MediaAsset {
    pub url: String,
    pub mime: String,
    pub bytes: Vec<u8>,
}

/// Outcome of fetching one URL.
#[derive(Debug, Clone, PartialEq)]
pub enum CrawlStatus {
    Ok {
        /// Markup-stripped readable text.
        content: String,
        /// Hyperlinks found on the page, absolutized.
        anchors: Vec<String>,
        /// Media assets fetched alongside the page.
        media: Vec<MediaAsset>,
    },
    Timeout,
    Blocked,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrawlResult {
    pub url: String,
    pub status: CrawlStatus,
    pub fetch_time: Duration,
    /// Page fetch attempts actually made (0 for robots-blocked URLs).
    pub attempts: u32,
    pub warnings: Vec<String>,
}

/// Maps logical URLs onto transport URLs. `Direct` fetches as-is; `Proxy`
/// rewrites `https://host/path` to `{base}/host/path`, which is how the
/// synthetic-web server is addressed.
#[derive(Debug, Clone)]
pub enum UrlMapping {
    Direct,
    Proxy(Url),
}

impl UrlMapping {
    pub fn resolve(&self, logical: &Url) -> Url {
        match self {
            UrlMapping::Direct => logical.clone(),
            UrlMapping::Proxy(base) => {
                let mut actual = base.clone();
                let host = logical.host_str().unwrap_or("unknown-host");
                let base_path = base.path().trim_end_matches('/');
                actual.set_path(&format!("{base_path}/{host}{}", logical.path()));
                actual.set_query(logical.query());
                actual
            }
        }
    }
}

/// Polite fetcher over one audit's lifetime: shares the robots cache and
/// per-host pacing across all crawl batches.
pub struct Crawler {
    http: reqwest::Client,
    mapping: UrlMapping,
    policy: FetchPolicy,
    robots: RobotsCache,
    host_last_request: Mutex<HashMap<String, Instant>>,
}

impl Crawler {
    pub fn new(policy: FetchPolicy, mapping: UrlMapping) -> Result<Self> {
        policy.validate()?;
        Ok(Crawler {
            http: reqwest::Client::new(),
            mapping,
            policy,
            robots: RobotsCache::default(),
            host_last_request: Mutex::new(HashMap::new()),
        })
    }

    pub fn policy(&self) -> &FetchPolicy {
        &self.policy
    }

    /// Drain up to `cap` URLs from the queue and fetch them with at most
    /// `max_parallel` in flight. Results come back sorted by URL so runs
    /// are reproducible regardless of completion order.
    pub async fn crawl(&self, queue: &mut UrlQueue, cap: usize) -> Vec<CrawlResult> {
        let batch = queue.drain(cap);
        let mut results: Vec<CrawlResult> = stream::iter(batch)
            .map(|url| self.fetch_one(url))
            .buffer_unordered(self.policy.max_parallel)
            .collect()
            .await;
        results.sort_by(|a, b| a.url.cmp(&b.url));
        results
    }

    async fn fetch_one(&self, url: String) -> CrawlResult {
        let started = Instant::now();
        let mut warnings = Vec::new();

        let parsed = match Url::parse(&url) {
            Ok(u) => u,
            Err(e) => {
                return CrawlResult {
                    url,
                    status: CrawlStatus::Failed(format!("bad url: {e}")),
                    fetch_time: started.elapsed(),
                    attempts: 0,
                    warnings,
                }
            }
        };

        if self.policy.respect_robots && !self.robots_allows(&parsed).await {
            return CrawlResult {
                url,
                status: CrawlStatus::Blocked,
                fetch_time: started.elapsed(),
                attempts: 0,
                warnings,
            };
        }

        let (outcome, attempts) = self.fetch_with_retries(&parsed).await;
        let status = match outcome {
            FetchOutcome::Html(body) => {
                let page = extract_page(&body, &parsed);
                let media = self.fetch_assets(&page, &mut warnings).await;
                CrawlStatus::Ok {
                    content: page.text,
                    anchors: page.anchors,
                    media,
                }
            }
            FetchOutcome::Timeout => CrawlStatus::Timeout,
            FetchOutcome::Failed(reason) => CrawlStatus::Failed(reason),
        };

        CrawlResult {
            url,
            status,
            fetch_time: started.elapsed(),
            attempts,
            warnings,
        }
    }

    async fn fetch_with_retries(&self, logical: &Url) -> (FetchOutcome, u32) {
        let max_attempts = self.policy.max_retries + 1;
        let mut last = FetchOutcome::Failed("not attempted".into());
        for attempt in 1..=max_attempts {
            if attempt > 1 {
                tokio::time::sleep(self.policy.retry_delay).await;
            }
            self.pace_host(logical).await;
            match self.single_attempt(logical).await {
                AttemptOutcome::Done(outcome) => return (outcome, attempt),
                AttemptOutcome::Retry(outcome) => last = outcome,
            }
        }
        (last, max_attempts)
    }

    async fn single_attempt(&self, logical: &Url) -> AttemptOutcome {
        let actual = self.mapping.resolve(logical);
        let request = self
            .http
            .get(actual)
            .header("User-Agent", &self.policy.user_agent)
            .send();
        match timeout(self.policy.timeout, request).await {
            Err(_) => AttemptOutcome::Retry(FetchOutcome::Timeout),
            Ok(Err(e)) => AttemptOutcome::Retry(FetchOutcome::Failed(e.to_string())),
            Ok(Ok(resp)) => {
                let status = resp.status();
                if status.is_success() {
                    match timeout(self.policy.timeout, resp.text()).await {
                        Ok(Ok(body)) => AttemptOutcome::Done(FetchOutcome::Html(body)),
                        Ok(Err(e)) => {
                            AttemptOutcome::Retry(FetchOutcome::Failed(e.to_string()))
                        }
                        Err(_) => AttemptOutcome::Retry(FetchOutcome::Timeout),
                    }
                } else if status.is_server_error() {
                    AttemptOutcome::Retry(FetchOutcome::Failed(format!("status {status}")))
                } else {
                    // 4xx is definitive
                    AttemptOutcome::Done(FetchOutcome::Failed(format!("status {status}")))
                }
            }
        }
    }

    /// Fetch the page's media assets, one attempt each, robots-gated like
    /// pages. Failures degrade to warnings.
    async fn fetch_assets(
        &self,
        page: &PageExtract,
        warnings: &mut Vec<String>,
    ) -> Vec<MediaAsset> {
        let mut media = Vec::new();
        for (asset_url, mime) in &page.assets {
            let Ok(parsed) = Url::parse(asset_url) else {
                warnings.push(format!("asset {asset_url:?} is not a valid url"));
                continue;
            };
            if self.policy.respect_robots && !self.robots_allows(&parsed).await {
                warnings.push(format!("asset {asset_url} disallowed by robots"));
                continue;
            }
            self.pace_host(&parsed).await;
            let actual = self.mapping.resolve(&parsed);
            let request = self
                .http
                .get(actual)
                .header("User-Agent", &self.policy.user_agent)
                .send();
            let bytes = match timeout(self.policy.timeout, request).await {
                Ok(Ok(resp)) if resp.status().is_success() => {
                    match timeout(self.policy.timeout, resp.bytes()).await {
                        Ok(Ok(b)) => b.to_vec(),
                        _ => {
                            warnings.push(format!("asset {asset_url} body read failed"));
                            continue;
                        }
                    }
                }
                Ok(Ok(resp)) => {
                    warnings.push(format!("asset {asset_url} returned {}", resp.status()));
                    continue;
                }
                Ok(Err(e)) => {
                    warnings.push(format!("asset {asset_url} failed: {e}"));
                    continue;
                }
                Err(_) => {
                    warnings.push(format!("asset {asset_url} timed out"));
                    continue;
                }
            };
            media.push(MediaAsset {
                url: asset_url.clone(),
                mime: guess_media_mime(asset_url).unwrap_or(mime).to_string(),
                bytes,
            });
        }
        media
    }

    async fn robots_allows(&self, logical: &Url) -> bool {
        let host = logical.host_str().unwrap_or("").to_string();
        let rules = match self.robots.get(&host) {
            Some(rules) => rules,
            None => {
                let rules = self.fetch_robots(logical).await;
                self.robots.insert(&host, rules)
            }
        };
        rules.allows(&self.policy.user_agent, logical.path())
    }

    async fn fetch_robots(&self, logical: &Url) -> RobotsRules {
        let mut robots_logical = logical.clone();
        robots_logical.set_path("/robots.txt");
        robots_logical.set_query(None);
        let actual = self.mapping.resolve(&robots_logical);
        let request = self
            .http
            .get(actual)
            .header("User-Agent", &self.policy.user_agent)
            .send();
        match timeout(self.policy.timeout, request).await {
            Ok(Ok(resp)) if resp.status().is_success() => {
                match timeout(self.policy.timeout, resp.text()).await {
                    Ok(Ok(body)) => RobotsRules::parse(&body),
                    _ => RobotsRules::allow_all(),
                }
            }
            // absent or unreadable robots file → no restrictions
            _ => RobotsRules::allow_all(),
        }
    }

    /// Enforce the per-host minimum request interval.
    async fn pace_host(&self, logical: &Url) {
        let host = logical.host_str().unwrap_or("").to_string();
        loop {
            let wait = {
                let mut last_map = self.host_last_request.lock().expect("host pacing lock");
                let now = Instant::now();
                match last_map.get(&host) {
                    Some(last) => {
                        let elapsed = now.duration_since(*last);
                        if elapsed >= self.policy.per_host_interval {
                            last_map.insert(host.clone(), now);
                            None
                        } else {
                            Some(self.policy.per_host_interval - elapsed)
                        }
                    }
                    None => {
                        last_map.insert(host.clone(), now);
                        None
                    }
                }
            };
            match wait {
                None => return,
                Some(delay) => tokio::time::sleep(delay).await,
            }
        }
    }
}

enum FetchOutcome {
    Html(String),
    Timeout,
    Failed(String),
}

enum AttemptOutcome {
    Done(FetchOutcome),
    Retry(FetchOutcome),
}
