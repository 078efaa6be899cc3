//! Local serving harness for a synthetic world: a search endpoint and a
//! host-prefixed crawl surface with scripted delays and failures, plus a
//! request log and an in-flight gauge for concurrency assertions.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use serde::{Deserialize, Serialize};
use url::Url;

use crate::error::{Error, Result};

use super::world::{render_document, SyntheticWorld};

/// What kind of request a log entry records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    Search,
    Robots,
    Page,
    Asset,
    Other,
}

/// One logged request to the harness.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequestLogEntry {
    pub seq: u64,
    pub kind: RequestKind,
    /// Logical URL for page/asset/robots requests, query text for searches.
    pub target: String,
    /// Gauge value observed when this request started (this request
    /// included).
    pub inflight_at_start: usize,
}

#[derive(Debug, Default)]
pub struct ServerMetrics {
    log: Mutex<Vec<RequestLogEntry>>,
    seq: AtomicU64,
    inflight: AtomicUsize,
    max_inflight: AtomicUsize,
    attempts: Mutex<HashMap<String, u32>>,
}

impl ServerMetrics {
    fn record(&self, kind: RequestKind, target: String) -> InflightGuard<'_> {
        let current = self.inflight.fetch_add(1, Ordering::SeqCst) + 1;
        self.max_inflight.fetch_max(current, Ordering::SeqCst);
        let seq = self.seq.fetch_add(1, Ordering::SeqCst);
        self.log.lock().expect("request log lock").push(RequestLogEntry {
            seq,
            kind,
            target,
            inflight_at_start: current,
        });
        InflightGuard { metrics: self }
    }

    /// Attempt count for one logical URL, 1-based for the current call.
    fn bump_attempts(&self, url: &str) -> u32 {
        let mut map = self.attempts.lock().expect("attempt counter lock");
        let counter = map.entry(url.to_string()).or_insert(0);
        *counter += 1;
        *counter
    }

    pub fn log_snapshot(&self) -> Vec<RequestLogEntry> {
        self.log.lock().expect("request log lock").clone()
    }

    pub fn max_inflight(&self) -> usize {
        self.max_inflight.load(Ordering::SeqCst)
    }

    pub fn attempts_for(&self, url: &str) -> u32 {
        self.attempts
            .lock()
            .expect("attempt counter lock")
            .get(url)
            .copied()
            .unwrap_or(0)
    }
}

struct InflightGuard<'a> {
    metrics: &'a ServerMetrics,
}

impl Drop for InflightGuard<'_> {
    fn drop(&mut self) {
        self.metrics.inflight.fetch_sub(1, Ordering::SeqCst);
    }
}

struct ServerState {
    world: Arc<SyntheticWorld>,
    injection: Option<String>,
    metrics: Arc<ServerMetrics>,
}

/// Running harness bound to a loopback port. Dropping the handle stops the
/// server.
pub struct ServerHandle {
    pub addr: SocketAddr,
    metrics: Arc<ServerMetrics>,
    task: tokio::task::JoinHandle<()>,
}

impl ServerHandle {
    /// Base URL crawlers use as their proxy mapping.
    pub fn base_url(&self) -> Url {
        Url::parse(&format!("http://{}", self.addr)).expect("loopback url")
    }

    /// Search endpoint URL.
    pub fn search_endpoint(&self) -> Url {
        self.base_url().join("/__search").expect("search url")
    }

    pub fn metrics(&self) -> Arc<ServerMetrics> {
        self.metrics.clone()
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.task.abort();
    }
}

/// Serve `world` on an ephemeral loopback port. `injection` appends a
/// page-level defense text to the target's own pages.
pub async fn serve(world: Arc<SyntheticWorld>, injection: Option<String>) -> Result<ServerHandle> {
    let metrics = Arc::new(ServerMetrics::default());
    let state = Arc::new(ServerState {
        world,
        injection,
        metrics: metrics.clone(),
    });

    let app = Router::new()
        .route("/__search", get(handle_search))
        .route("/__log", get(handle_log))
        .route("/{host}/{*path}", get(handle_fetch))
        .with_state(state);

    let listener = tokio::net::TcpListener::bind("127.0.0.1:0")
        .await
        .map_err(|e| Error::Startup(format!("cannot bind harness: {e}")))?;
    let addr = listener.local_addr().map_err(|e| Error::Startup(e.to_string()))?;
    let task = tokio::spawn(async move {
        let _ = axum::serve(listener, app).await;
    });

    Ok(ServerHandle {
        addr,
        metrics,
        task,
    })
}

#[derive(Deserialize)]
struct SearchParams {
    q: String,
    #[serde(default = "default_k")]
    k: usize,
}

fn default_k() -> usize {
    10
}

#[derive(Serialize)]
struct SearchHitOut {
    url: String,
    snippet: String,
    rank: u32,
}

async fn handle_search(
    State(state): State<Arc<ServerState>>,
    Query(params): Query<SearchParams>,
) -> Response {
    let _guard = state
        .metrics
        .record(RequestKind::Search, format!("q={}", params.q));
    let hits: Vec<SearchHitOut> = state
        .world
        .search(&params.q, params.k.max(1))
        .into_iter()
        .enumerate()
        .map(|(i, (url, snippet))| SearchHitOut {
            url,
            snippet,
            rank: i as u32 + 1,
        })
        .collect();
    axum::Json(serde_json::json!({ "results": hits })).into_response()
}

async fn handle_log(State(state): State<Arc<ServerState>>) -> Response {
    axum::Json(state.metrics.log_snapshot()).into_response()
}

async fn handle_fetch(
    State(state): State<Arc<ServerState>>,
    Path((host, path)): Path<(String, String)>,
) -> Response {
    let logical = format!("https://{host}/{path}");

    if path == "robots.txt" {
        let _guard = state.metrics.record(RequestKind::Robots, logical);
        return match state.world.robots.get(&host.to_lowercase()) {
            Some(body) => (StatusCode::OK, body.clone()).into_response(),
            None => (StatusCode::NOT_FOUND, "no robots file").into_response(),
        };
    }

    if let Some(asset) = state.world.assets.get(&logical) {
        let _guard = state.metrics.record(RequestKind::Asset, logical);
        return (
            StatusCode::OK,
            [(header::CONTENT_TYPE, asset.mime.clone())],
            asset.bytes.clone(),
        )
            .into_response();
    }

    if let Some(doc) = state.world.documents.get(&logical) {
        let guard = state.metrics.record(RequestKind::Page, logical.clone());
        if !doc.delay.is_zero() {
            tokio::time::sleep(doc.delay).await;
        }
        let attempt = state.metrics.bump_attempts(&logical);
        let response = if attempt <= doc.fail_times {
            (StatusCode::INTERNAL_SERVER_ERROR, "scripted failure").into_response()
        } else {
            (
                StatusCode::OK,
                [(header::CONTENT_TYPE, "text/html; charset=utf-8".to_string())],
                render_document(doc, state.injection.as_deref()),
            )
                .into_response()
        };
        drop(guard);
        return response;
    }

    let _guard = state.metrics.record(RequestKind::Other, logical);
    (StatusCode::NOT_FOUND, "unknown url").into_response()
}

#[cfg(test)]
mod tests {
    use super::super::world::build_world_from_str;
    use super::*;

    const WORLD: &str = r#"
[world]
name = "serve-test"

[seed]
full_name = "Alex Chen"
affiliation = "Univ Z"

[[host]]
name = "blocked.example"
robots = "User-agent: *\nDisallow: /private/\n"

[[document]]
url = "https://univ-z.edu/people/alex"
title = "Alex Chen"
body = "Faculty page for Alex Chen of Univ Z."

  [[document.fact]]
  key = "email"
  value = "achen@univ-z.edu"
  tier = "DII"
  category = "C2"

[[document]]
url = "https://flaky.example/profile"
title = "Flaky"
fail_times = 2

[[index]]
pattern = "alex chen"
urls = ["https://univ-z.edu/people/alex"]
"#;

    #[tokio::test]
    async fn search_and_fetch_round_trip() {
        let world = Arc::new(build_world_from_str(WORLD).unwrap());
        let handle = serve(world, None).await.unwrap();
        let client = reqwest::Client::new();

        let body: serde_json::Value = client
            .get(handle.search_endpoint())
            .query(&[("q", "Alex Chen homepage"), ("k", "10")])
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        assert_eq!(body["results"][0]["url"], "https://univ-z.edu/people/alex");

        let page = client
            .get(handle.base_url().join("/univ-z.edu/people/alex").unwrap())
            .send()
            .await
            .unwrap()
            .text()
            .await
            .unwrap();
        assert!(page.contains("achen@univ-z.edu"));

        let robots = client
            .get(handle.base_url().join("/blocked.example/robots.txt").unwrap())
            .send()
            .await
            .unwrap();
        assert_eq!(robots.status(), 200);

        let log = handle.metrics().log_snapshot();
        assert_eq!(log.len(), 3);
        assert!(matches!(log[0].kind, RequestKind::Search));
        assert!(matches!(log[1].kind, RequestKind::Page));
        assert!(matches!(log[2].kind, RequestKind::Robots));
    }

    #[tokio::test]
    async fn scripted_failures_count_attempts() {
        let world = Arc::new(build_world_from_str(WORLD).unwrap());
        let handle = serve(world, None).await.unwrap();
        let client = reqwest::Client::new();
        let url = handle.base_url().join("/flaky.example/profile").unwrap();

        let first = client.get(url.clone()).send().await.unwrap();
        assert_eq!(first.status(), 500);
        let second = client.get(url.clone()).send().await.unwrap();
        assert_eq!(second.status(), 500);
        let third = client.get(url).send().await.unwrap();
        assert_eq!(third.status(), 200);
        assert_eq!(
            handle.metrics().attempts_for("https://flaky.example/profile"),
            3
        );
    }
}
