//! Page snapshots: the raw body before any script runs, plus the rendered
//! DOM and final location from a browser-automation endpoint. The endpoint
//! is anything speaking the standard remote-automation wire protocol
//! (create session, navigate, execute script, read URL/source).

use chrono::Utc;
use serde_json::{json, Value};
use std::time::{Duration, Instant};

use super::{netguard, EvidenceError, PageSnapshot};

/// Client for one renderer endpoint. "Settled" means the document reported
/// ready and a quiet period elapsed, bounded by a maximum wait — pages whose
/// scripts never stop get truncated at the bound, captcha gates settle with
/// the gate visible.
pub struct RendererClient {
    base: String,
    http: reqwest::blocking::Client,
    settle_quiet: Duration,
    settle_max: Duration,
    poll_interval: Duration,
}

impl RendererClient {
    pub fn new(endpoint: &str) -> Result<RendererClient, EvidenceError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .map_err(|e| EvidenceError::RendererUnavailable(e.to_string()))?;
        Ok(RendererClient {
            base: endpoint.trim_end_matches('/').to_owned(),
            http,
            settle_quiet: Duration::from_secs(2),
            settle_max: Duration::from_secs(15),
            poll_interval: Duration::from_millis(250),
        })
    }

    /// Override the settle policy (quiet period, maximum wait).
    pub fn with_settle(mut self, quiet: Duration, max: Duration) -> RendererClient {
        self.settle_quiet = quiet;
        self.settle_max = max;
        self
    }

    fn unavailable(&self, detail: impl std::fmt::Display) -> EvidenceError {
        EvidenceError::RendererUnavailable(format!("{}: {detail}", self.base))
    }

    fn call(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> Result<Value, EvidenceError> {
        netguard::record_network_op();
        let mut req = self.http.request(method, format!("{}{path}", self.base));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().map_err(|e| self.unavailable(e))?;
        if !resp.status().is_success() {
            return Err(self.unavailable(format!("{path} -> HTTP {}", resp.status().as_u16())));
        }
        resp.json::<Value>().map_err(|e| self.unavailable(e))
    }

    fn start_session(&self) -> Result<String, EvidenceError> {
        let created = self.call(
            reqwest::Method::POST,
            "/session",
            Some(json!({"capabilities": {"alwaysMatch": {}}})),
        )?;
        created["value"]["sessionId"]
            .as_str()
            .or_else(|| created["sessionId"].as_str())
            .map(str::to_owned)
            .ok_or_else(|| self.unavailable("no session id in response"))
    }

    fn value_string(&self, v: Value, what: &str) -> Result<String, EvidenceError> {
        v["value"]
            .as_str()
            .map(str::to_owned)
            .ok_or_else(|| self.unavailable(format!("{what} missing from response")))
    }

    /// Navigate, settle, and read back (final URL, serialized DOM).
    fn render(&self, url: &str) -> Result<(String, String), EvidenceError> {
        let session = self.start_session()?;
        let base = format!("/session/{session}");
        let result = (|| {
            self.call(reqwest::Method::POST, &format!("{base}/url"), Some(json!({ "url": url })))?;

            let deadline = Instant::now() + self.settle_max;
            loop {
                let state = self.call(
                    reqwest::Method::POST,
                    &format!("{base}/execute/sync"),
                    Some(json!({"script": "return document.readyState", "args": []})),
                )?;
                if state["value"].as_str() == Some("complete") || Instant::now() >= deadline {
                    break;
                }
                std::thread::sleep(self.poll_interval);
            }
            let quiet = self.settle_quiet.min(deadline.saturating_duration_since(Instant::now()));
            std::thread::sleep(quiet);

            let final_url = self.value_string(
                self.call(reqwest::Method::GET, &format!("{base}/url"), None)?,
                "final url",
            )?;
            let dom = self.value_string(
                self.call(reqwest::Method::GET, &format!("{base}/source"), None)?,
                "page source",
            )?;
            Ok((final_url, dom))
        })();
        // Session teardown is best-effort; the snapshot matters more.
        let _ = self.call(reqwest::Method::DELETE, &base, None);
        result
    }
}

/// Fetch the raw initial body, then render. The initial fetch follows
/// HTTP-level redirects (its body is what a crawler sees pre-scripts); the
/// renderer observes script-driven redirects on top, and its final location
/// is what `url_final` reports.
pub fn fetch_snapshot(
    url: &str,
    renderer: &RendererClient,
    timeout: Duration,
) -> Result<PageSnapshot, EvidenceError> {
    netguard::record_network_op();
    let initial_client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| EvidenceError::FetchTimeout {
            url: url.to_owned(),
            detail: e.to_string(),
        })?;
    let resp = initial_client
        .get(url)
        .send()
        .map_err(|e| EvidenceError::FetchTimeout {
            url: url.to_owned(),
            detail: e.to_string(),
        })?;
    let status = resp.status().as_u16();
    if !(200..400).contains(&status) {
        // Recorded with empty bodies so the failure itself is analyzable.
        let snapshot = PageSnapshot {
            url_initial: url.to_owned(),
            url_final: url.to_owned(),
            http_status: status,
            html_initial: String::new(),
            html_rendered: None,
            fetched_at: Utc::now(),
        };
        return Err(EvidenceError::HttpError {
            url: url.to_owned(),
            status,
            snapshot: Box::new(snapshot),
        });
    }
    let html_initial = resp.text().map_err(|e| EvidenceError::FetchTimeout {
        url: url.to_owned(),
        detail: format!("body read: {e}"),
    })?;

    let (url_final, html_rendered) = renderer.render(url)?;
    Ok(PageSnapshot {
        url_initial: url.to_owned(),
        url_final,
        http_status: status,
        html_initial,
        html_rendered: Some(html_rendered),
        fetched_at: Utc::now(),
    })
}
