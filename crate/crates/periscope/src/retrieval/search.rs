//! Search provider client: HTTP endpoint returning ranked (url, snippet)
//! pairs, merged across queries with canonical-URL dedup.

use serde::Deserialize;
use url::Url;

use crate::error::{Error, Result};

use super::url::canonicalize_url;

/// One ranked hit for one query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchResult {
    /// Canonical URL.
    pub url: String,
    pub snippet: String,
    pub originating_query: String,
    /// 1-based provider rank.
    pub rank: u32,
}

#[derive(Debug, Deserialize)]
struct ProviderHit {
    url: String,
    #[serde(default)]
    snippet: String,
    #[serde(default)]
    rank: Option<u32>,
}

#[derive(Debug, Deserialize)]
struct ProviderResponse {
    results: Vec<ProviderHit>,
}

/// Client for the search-provider contract:
/// `GET {endpoint}?q=<query>&k=<k>` → `{"results": [{url, snippet, rank}]}`.
pub struct SearchClient {
    http: reqwest::Client,
    endpoint: Url,
}

impl SearchClient {
    pub fn new(endpoint: Url) -> Self {
        SearchClient {
            http: reqwest::Client::new(),
            endpoint,
        }
    }

    /// Run every query, keep at most `k` hits per query, merge with
    /// canonical-URL dedup keeping the best (lowest) rank. A failing query
    /// yields a warning and no hits; if every query fails the whole call is
    /// a retriable transport error.
    pub async fn search(
        &self,
        queries: &[String],
        k: usize,
    ) -> Result<(Vec<SearchResult>, Vec<String>)> {
        if queries.is_empty() {
            return Ok((Vec::new(), Vec::new()));
        }
        if k == 0 {
            return Err(Error::InvalidInput("search k must be >= 1".into()));
        }

        let mut merged: Vec<SearchResult> = Vec::new();
        let mut warnings = Vec::new();
        let mut failures = 0usize;

        for query in queries {
            match self.one_query(query, k).await {
                Ok(hits) => {
                    for hit in hits {
                        match merged.iter_mut().find(|r| r.url == hit.url) {
                            Some(existing) => {
                                if hit.rank < existing.rank {
                                    *existing = hit;
                                }
                            }
                            None => merged.push(hit),
                        }
                    }
                }
                Err(e) => {
                    failures += 1;
                    warnings.push(format!("search for {query:?} failed: {e}"));
                }
            }
        }

        if failures == queries.len() {
            return Err(Error::Transport(format!(
                "all {failures} search queries failed"
            )));
        }
        Ok((merged, warnings))
    }

    async fn one_query(&self, query: &str, k: usize) -> Result<Vec<SearchResult>> {
        let mut url = self.endpoint.clone();
        url.query_pairs_mut()
            .append_pair("q", query)
            .append_pair("k", &k.to_string());
        let resp = self
            .http
            .get(url)
            .send()
            .await
            .map_err(|e| Error::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(Error::Transport(format!(
                "search provider returned {}",
                resp.status()
            )));
        }
        let body: ProviderResponse = resp
            .json()
            .await
            .map_err(|e| Error::Transport(format!("bad search payload: {e}")))?;

        let mut hits = Vec::new();
        for (i, hit) in body.results.into_iter().take(k).enumerate() {
            let Ok(canonical) = canonicalize_url(&hit.url) else {
                continue;
            };
            hits.push(SearchResult {
                url: canonical,
                snippet: hit.snippet,
                originating_query: query.to_string(),
                rank: hit.rank.unwrap_or(i as u32 + 1),
            });
        }
        Ok(hits)
    }
}
