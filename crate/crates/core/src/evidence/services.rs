//! Search-rank and reputation lookups, and the orchestrator that assembles
//! whole evidence bundles from live services.
//!
//! Both HTTP services authenticate with API keys taken from environment
//! variables ([`RANK_API_KEY_VAR`], [`REPUTATION_API_KEY_VAR`]). Keys ride
//! only in request query strings; every error message that could end up
//! persisted in a bundle's absence map is scrubbed of request URLs so a key
//! can never leak into recorded fixtures.

use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use super::render::{fetch_snapshot, RendererClient};
use super::store::ReplayStore;
use super::whois::{query_whois, DEFAULT_TAG_ALIASES};
use super::{netguard, EvidenceBundle, EvidenceError, Label, PageSnapshot, RankInfo, ReputationVerdict};
use crate::urlkit::{parse_url, SuffixRules};

/// Environment variable holding the search-index API key.
pub const RANK_API_KEY_VAR: &str = "RANK_API_KEY";
/// Environment variable holding the reputation-service API key.
pub const REPUTATION_API_KEY_VAR: &str = "REPUTATION_API_KEY";

pub trait RankProvider: Send + Sync {
    /// Where `domain` places among the top search results for itself.
    fn query_rank(&self, domain: &str) -> Result<RankInfo, EvidenceError>;
}

pub trait ReputationProvider: Send + Sync {
    /// Whether a denylist service flags `url`.
    fn query_reputation(&self, url: &str) -> Result<ReputationVerdict, EvidenceError>;
}

/// reqwest errors render with the full request URL, query string included.
/// Strip that before the text can reach a persisted absence reason.
fn scrub(e: reqwest::Error) -> String {
    e.without_url().to_string()
}

/// Minimum spacing between calls, shared across threads. The lock is held
/// through the sleep on purpose: that is what serializes concurrent callers
/// into a paced line.
pub struct RateLimiter {
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration) -> RateLimiter {
        RateLimiter {
            min_interval,
            last: Mutex::new(None),
        }
    }

    /// Block until at least `min_interval` has passed since the previous call.
    pub fn pace(&self) {
        if self.min_interval.is_zero() {
            return;
        }
        let mut last = self.last.lock().unwrap();
        if let Some(prev) = *last {
            let elapsed = prev.elapsed();
            if elapsed < self.min_interval {
                std::thread::sleep(self.min_interval - elapsed);
            }
        }
        *last = Some(Instant::now());
    }
}

/// Interpret ranked result links against the domain that was queried: a
/// result counts when its registrable domain is the queried one (so any
/// subdomain of it matches). Only the first ten results are considered.
pub fn rank_from_links(links: &[String], domain: &str, rules: &SuffixRules) -> RankInfo {
    let want = domain.trim().trim_end_matches('.').to_ascii_lowercase();
    let mut top_rank = None;
    let mut match_count = 0u32;
    for (i, link) in links.iter().take(10).enumerate() {
        let got = parse_url(link, rules).ok().map(|p| {
            if p.registrable_domain.is_empty() {
                p.host
            } else {
                p.registrable_domain
            }
        });
        if got.as_deref() == Some(want.as_str()) {
            match_count += 1;
            if top_rank.is_none() {
                top_rank = Some(i as u32 + 1);
            }
        }
    }
    RankInfo {
        present_in_index: top_rank.is_some(),
        top_rank,
        match_count,
    }
}

/// Search-index client: GET `{endpoint}?q={domain}&key={key}`, response
/// `{"items":[{"link": "..."}]}` ordered best-first.
pub struct HttpRankClient {
    endpoint: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    rules: SuffixRules,
    pace: RateLimiter,
}

impl HttpRankClient {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
        rules: SuffixRules,
    ) -> Result<HttpRankClient, EvidenceError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(20))
            .build()
            .map_err(|e| EvidenceError::RankServiceUnavailable(scrub(e)))?;
        Ok(HttpRankClient {
            endpoint: endpoint.into(),
            api_key,
            http,
            rules,
            pace: RateLimiter::new(Duration::from_millis(200)),
        })
    }

    /// Key from [`RANK_API_KEY_VAR`]; unset means unauthenticated requests.
    pub fn from_env(
        endpoint: impl Into<String>,
        rules: SuffixRules,
    ) -> Result<HttpRankClient, EvidenceError> {
        HttpRankClient::new(endpoint, std::env::var(RANK_API_KEY_VAR).ok(), rules)
    }

    pub fn paced(mut self, min_interval: Duration) -> HttpRankClient {
        self.pace = RateLimiter::new(min_interval);
        self
    }
}

impl RankProvider for HttpRankClient {
    fn query_rank(&self, domain: &str) -> Result<RankInfo, EvidenceError> {
        self.pace.pace();
        netguard::record_network_op();
        let mut req = self.http.get(&self.endpoint).query(&[("q", domain)]);
        if let Some(k) = &self.api_key {
            req = req.query(&[("key", k.as_str())]);
        }
        let resp = req
            .send()
            .map_err(|e| EvidenceError::RankServiceUnavailable(scrub(e)))?;
        let status = resp.status().as_u16();
        if status == 429 {
            return Err(EvidenceError::QuotaExceeded);
        }
        if !(200..300).contains(&status) {
            return Err(EvidenceError::RankServiceUnavailable(format!("HTTP {status}")));
        }
        let body: Value = resp
            .json()
            .map_err(|e| EvidenceError::RankServiceUnavailable(format!("malformed response: {}", scrub(e))))?;
        let links: Vec<String> = body["items"]
            .as_array()
            .map(|items| {
                items
                    .iter()
                    .filter_map(|item| item["link"].as_str().map(str::to_owned))
                    .collect()
            })
            .unwrap_or_default();
        Ok(rank_from_links(&links, domain, &self.rules))
    }
}

/// Denylist client: POST `{endpoint}?key={key}` with `{"url": "..."}`,
/// response `{"matches":[{"threatType": "..."}]}`; any match flags the URL.
pub struct HttpReputationClient {
    endpoint: String,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
    /// Recorded in verdicts; the endpoint's host.
    source: String,
}

impl HttpReputationClient {
    pub fn new(
        endpoint: impl Into<String>,
        api_key: Option<String>,
    ) -> Result<HttpReputationClient, EvidenceError> {
        let endpoint = endpoint.into();
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(20))
            .build()
            .map_err(|e| EvidenceError::ReputationServiceUnavailable(scrub(e)))?;
        let source = url::Url::parse(&endpoint)
            .ok()
            .and_then(|u| u.host_str().map(str::to_owned))
            .unwrap_or_else(|| endpoint.clone());
        Ok(HttpReputationClient {
            endpoint,
            api_key,
            http,
            source,
        })
    }

    /// Key from [`REPUTATION_API_KEY_VAR`]; unset means unauthenticated.
    pub fn from_env(endpoint: impl Into<String>) -> Result<HttpReputationClient, EvidenceError> {
        HttpReputationClient::new(endpoint, std::env::var(REPUTATION_API_KEY_VAR).ok())
    }
}

impl ReputationProvider for HttpReputationClient {
    fn query_reputation(&self, url: &str) -> Result<ReputationVerdict, EvidenceError> {
        netguard::record_network_op();
        let mut req = self.http.post(&self.endpoint);
        if let Some(k) = &self.api_key {
            req = req.query(&[("key", k.as_str())]);
        }
        let resp = req
            .json(&json!({ "url": url }))
            .send()
            .map_err(|e| EvidenceError::ReputationServiceUnavailable(scrub(e)))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(EvidenceError::ReputationServiceUnavailable(format!("HTTP {status}")));
        }
        let body: Value = resp
            .json()
            .map_err(|e| {
                EvidenceError::ReputationServiceUnavailable(format!("malformed response: {}", scrub(e)))
            })?;
        let matches = body["matches"].as_array().cloned().unwrap_or_default();
        let detail = matches
            .first()
            .and_then(|m| m["threatType"].as_str().map(str::to_owned));
        Ok(ReputationVerdict {
            flagged: !matches.is_empty(),
            source: self.source.clone(),
            detail,
        })
    }
}

/// One-shot rank lookup with the key taken from the environment.
pub fn query_rank(
    domain: &str,
    endpoint: &str,
    rules: &SuffixRules,
) -> Result<RankInfo, EvidenceError> {
    HttpRankClient::from_env(endpoint, rules.clone())?.query_rank(domain)
}

/// One-shot reputation lookup with the key taken from the environment.
pub fn query_reputation(url: &str, endpoint: &str) -> Result<ReputationVerdict, EvidenceError> {
    HttpReputationClient::from_env(endpoint)?.query_reputation(url)
}

/// Outcome of collecting one URL: the store key on success.
#[derive(Debug)]
pub struct CollectOutcome {
    pub url: String,
    pub result: Result<String, EvidenceError>,
}

/// Assembles evidence bundles from live services. Page retrieval failure is
/// fatal for the URL (nothing to analyze); any single evidence service
/// failing merely records an absence reason, because downstream imputation
/// handles missing evidence.
pub struct LiveFetcher {
    renderer: RendererClient,
    whois_endpoint: String,
    rank: Option<Box<dyn RankProvider>>,
    reputation: Option<Box<dyn ReputationProvider>>,
    timeout: Duration,
    suffix_rules: SuffixRules,
    tag_aliases: Vec<String>,
    whois_pace: RateLimiter,
}

impl LiveFetcher {
    pub fn new(renderer: RendererClient, whois_endpoint: impl Into<String>) -> LiveFetcher {
        LiveFetcher {
            renderer,
            whois_endpoint: whois_endpoint.into(),
            rank: None,
            reputation: None,
            timeout: Duration::from_secs(10),
            suffix_rules: SuffixRules::default(),
            tag_aliases: DEFAULT_TAG_ALIASES.iter().map(|s| s.to_string()).collect(),
            whois_pace: RateLimiter::new(Duration::from_millis(250)),
        }
    }

    pub fn with_rank(mut self, provider: Box<dyn RankProvider>) -> LiveFetcher {
        self.rank = Some(provider);
        self
    }

    pub fn with_reputation(mut self, provider: Box<dyn ReputationProvider>) -> LiveFetcher {
        self.reputation = Some(provider);
        self
    }

    pub fn with_timeout(mut self, timeout: Duration) -> LiveFetcher {
        self.timeout = timeout;
        self
    }

    pub fn with_suffix_rules(mut self, rules: SuffixRules) -> LiveFetcher {
        self.suffix_rules = rules;
        self
    }

    pub fn with_whois_pace(mut self, min_interval: Duration) -> LiveFetcher {
        self.whois_pace = RateLimiter::new(min_interval);
        self
    }

    fn registrable(&self, url: &str) -> Option<String> {
        parse_url(url, &self.suffix_rules)
            .ok()
            .filter(|p| !p.registrable_domain.is_empty())
            .map(|p| p.registrable_domain)
    }

    /// Fetch the page and all evidence for one URL. An HTTP error status is
    /// not fatal: the status itself is evidence, so the empty-body snapshot
    /// is kept and the remaining lookups still run.
    pub fn collect(&self, url: &str, label: Option<Label>) -> Result<EvidenceBundle, EvidenceError> {
        let snapshot = match fetch_snapshot(url, &self.renderer, self.timeout) {
            Ok(s) => s,
            Err(EvidenceError::HttpError { snapshot, .. }) => *snapshot,
            Err(other) => return Err(other),
        };
        Ok(self.collect_from_snapshot(snapshot, label))
    }

    /// Run the evidence lookups for a page that is already snapshotted.
    /// Never fails: each service that cannot answer leaves an absence reason.
    pub fn collect_from_snapshot(&self, snapshot: PageSnapshot, label: Option<Label>) -> EvidenceBundle {
        let mut absences = BTreeMap::new();
        let registrable_initial = self.registrable(&snapshot.url_initial);

        let whois = match &registrable_initial {
            Some(domain) => {
                self.whois_pace.pace();
                match query_whois(domain, &self.whois_endpoint, self.timeout, &self.tag_aliases) {
                    Ok(record) => Some(record),
                    Err(e) => {
                        absences.insert("whois".to_owned(), e.to_string());
                        None
                    }
                }
            }
            None => {
                absences.insert("whois".to_owned(), "host has no registrable domain".to_owned());
                None
            }
        };

        let rank = match (&self.rank, &registrable_initial) {
            (Some(provider), Some(domain)) => match provider.query_rank(domain) {
                Ok(info) => Some(info),
                Err(e) => {
                    absences.insert("rank".to_owned(), e.to_string());
                    None
                }
            },
            (None, _) => {
                absences.insert("rank".to_owned(), "rank provider not configured".to_owned());
                None
            }
            (_, None) => {
                absences.insert("rank".to_owned(), "host has no registrable domain".to_owned());
                None
            }
        };

        // Reputation is asked about the final URL: that is the page the
        // victim actually lands on after any redirect chain.
        let reputation = match &self.reputation {
            Some(provider) => match provider.query_reputation(&snapshot.url_final) {
                Ok(verdict) => Some(verdict),
                Err(e) => {
                    absences.insert("reputation".to_owned(), e.to_string());
                    None
                }
            },
            None => {
                absences.insert(
                    "reputation".to_owned(),
                    "reputation provider not configured".to_owned(),
                );
                None
            }
        };

        EvidenceBundle {
            snapshot,
            whois,
            rank,
            reputation,
            label,
            absences,
        }
    }

    /// Collect a batch with a small worker pool and record each successful
    /// bundle. Results come back in input order.
    pub fn collect_many(
        &self,
        jobs: &[(String, Option<Label>)],
        store: &ReplayStore,
        threads: usize,
    ) -> Vec<CollectOutcome> {
        let workers = threads.clamp(1, jobs.len().max(1));
        let next = AtomicUsize::new(0);
        let collected: Mutex<Vec<(usize, CollectOutcome)>> =
            Mutex::new(Vec::with_capacity(jobs.len()));
        let store_gate = Mutex::new(());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= jobs.len() {
                        break;
                    }
                    let (url, label) = &jobs[i];
                    let result = self.collect(url, *label).and_then(|bundle| {
                        let _serialized = store_gate.lock().unwrap();
                        store.store(&bundle)
                    });
                    collected.lock().unwrap().push((
                        i,
                        CollectOutcome {
                            url: url.clone(),
                            result,
                        },
                    ));
                });
            }
        });
        let mut outcomes = collected.into_inner().unwrap();
        outcomes.sort_by_key(|(i, _)| *i);
        outcomes.into_iter().map(|(_, o)| o).collect()
    }
}
