//! Evidence retrieval and the record/replay store.
//!
//! Four external sources feed a page's evidence bundle: a WHOIS lookup for
//! domain age, a search-index query for rank, a rendering endpoint for the
//! post-script DOM and final URL, and a reputation service. Live retrieval is
//! opt-in; the normal path replays recorded bundles from disk, which is what
//! keeps the rest of the pipeline deterministic and network-free.

pub mod render;
pub mod services;
pub mod store;
pub mod whois;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub use render::{fetch_snapshot, RendererClient};
pub use services::{
    query_rank, query_reputation, CollectOutcome, HttpRankClient, HttpReputationClient,
    LiveFetcher, RankProvider, ReputationProvider, RANK_API_KEY_VAR, REPUTATION_API_KEY_VAR,
};
pub use store::{bundle_key, ReplayStore};
pub use whois::{parse_creation_date, query_whois, CreationDateScan, DEFAULT_TAG_ALIASES};

/// Whether retrieval may touch the network. Replay is the default everywhere;
/// live mode must be requested explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Live,
    Replay,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Live => "live",
            Mode::Replay => "replay",
        })
    }
}

#[derive(Debug, Error)]
pub enum EvidenceError {
    #[error("fetch of {url} timed out or failed to connect: {detail}")]
    FetchTimeout { url: String, detail: String },
    #[error("renderer endpoint unavailable: {0}")]
    RendererUnavailable(String),
    #[error("initial fetch of {url} returned HTTP {status}")]
    HttpError {
        url: String,
        status: u16,
        /// The recordable snapshot (empty bodies) so the page still enters
        /// the store for analysis.
        snapshot: Box<PageSnapshot>,
    },
    #[error("whois service unavailable: {0}")]
    WhoisUnavailable(String),
    #[error("whois has no record for {0}")]
    NoRecord(String),
    #[error("rank service unavailable: {0}")]
    RankServiceUnavailable(String),
    #[error("rank service quota exceeded")]
    QuotaExceeded,
    #[error("reputation service unavailable: {0}")]
    ReputationServiceUnavailable(String),
    #[error("nothing recorded for {0}")]
    NotRecorded(String),
    #[error("recorded bundle at {path} is corrupt: {reason}")]
    StoreCorrupt { path: String, reason: String },
    #[error("store I/O failure at {path}: {source}")]
    StoreIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Ground-truth or predicted class of a page.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Benign,
    Phishing,
}

impl Label {
    pub fn as_f64(self) -> f64 {
        match self {
            Label::Benign => 0.0,
            Label::Phishing => 1.0,
        }
    }

    pub fn from_binary(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::Benign),
            1 => Some(Label::Phishing),
            _ => None,
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Label::Benign => "benign",
            Label::Phishing => "phishing",
        })
    }
}

/// The page itself, before and after rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSnapshot {
    pub url_initial: String,
    /// Final location after every HTTP- and script-driven redirect.
    pub url_final: String,
    pub http_status: u16,
    /// Raw HTTP body, before any script runs.
    pub html_initial: String,
    /// Serialized DOM after the renderer executed scripts and settled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub html_rendered: Option<String>,
    pub fetched_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhoisRecord {
    /// Full response text as received.
    pub raw: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub creation_date: Option<NaiveDate>,
    /// Which tag alias yielded the date.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub matched_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankInfo {
    pub present_in_index: bool,
    /// 1 = best. Absent when the domain is not among the top results.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub top_rank: Option<u32>,
    /// How many of the top ten results share the registrable domain.
    pub match_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReputationVerdict {
    pub flagged: bool,
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

/// Everything known about one URL; the unit that flows from retrieval into
/// feature extraction. Optional evidence is absent only with a recorded
/// reason, so downstream imputation stays auditable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBundle {
    pub snapshot: PageSnapshot,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub whois: Option<WhoisRecord>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rank: Option<RankInfo>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reputation: Option<ReputationVerdict>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub label: Option<Label>,
    /// Evidence kind → reason it is absent ("whois" → "service timeout").
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub absences: BTreeMap<String, String>,
}

impl EvidenceBundle {
    /// Check every structural invariant; returns all violations, not just the
    /// first, so corpus generators can assert cleanly.
    pub fn validate(&self) -> Result<(), Vec<String>> {
        let mut problems = Vec::new();
        let s = &self.snapshot;
        if s.url_initial.trim().is_empty() {
            problems.push("snapshot.url_initial is empty".to_owned());
        } else if crate::urlkit::parse_url(&s.url_initial, &crate::urlkit::SuffixRules::default())
            .is_err()
        {
            problems.push(format!("snapshot.url_initial not parseable: {:?}", s.url_initial));
        }
        if s.html_rendered.is_none() && s.url_final != s.url_initial {
            problems.push("html_rendered absent but url_final differs from url_initial".to_owned());
        }
        if let Some(w) = &self.whois {
            if let Some(d) = w.creation_date {
                match &w.matched_tag {
                    None => problems.push(format!(
                        "whois.creation_date {d} present without matched_tag"
                    )),
                    Some(tag) => {
                        let found = w
                            .raw
                            .to_lowercase()
                            .contains(&tag.to_lowercase());
                        if !found {
                            problems.push(format!("whois.matched_tag {tag:?} not found in raw"));
                        }
                    }
                }
            }
        }
        if let Some(r) = &self.rank {
            if !r.present_in_index && (r.top_rank.is_some() || r.match_count != 0) {
                problems.push("rank absent from index but top_rank/match_count set".to_owned());
            }
            if r.match_count > 10 {
                problems.push(format!("rank.match_count {} exceeds 10", r.match_count));
            }
            if r.top_rank == Some(0) {
                problems.push("rank.top_rank must be >= 1".to_owned());
            }
        }
        if let Some(rep) = &self.reputation {
            if rep.source.is_empty() {
                problems.push("reputation.source is empty".to_owned());
            }
        }
        for (kind, present) in [
            ("whois", self.whois.is_some()),
            ("rank", self.rank.is_some()),
            ("reputation", self.reputation.is_some()),
        ] {
            if !present && !self.absences.contains_key(kind) {
                problems.push(format!("{kind} absent without a recorded reason"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(problems)
        }
    }
}

/// Global accounting of outbound network operations, so tests can prove that
/// replay paths never reach a socket. Every live client calls
/// [`netguard::record_network_op`] immediately before connecting.
pub mod netguard {
    use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

    static OPS: AtomicU64 = AtomicU64::new(0);
    static FORBIDDEN: AtomicBool = AtomicBool::new(false);

    pub fn record_network_op() {
        if FORBIDDEN.load(Ordering::SeqCst) {
            panic!("network operation attempted while networking is forbidden; replay paths must stay offline");
        }
        OPS.fetch_add(1, Ordering::SeqCst);
    }

    /// Total network operations since process start.
    pub fn network_ops() -> u64 {
        OPS.load(Ordering::SeqCst)
    }

    /// Make any subsequent network operation a hard failure. Process-global;
    /// meant for offline test binaries.
    pub fn forbid_network(forbid: bool) {
        FORBIDDEN.store(forbid, Ordering::SeqCst);
    }
}

#[cfg(test)]
pub(crate) mod mockhttp;

#[cfg(test)]
pub(crate) fn sample_bundle(url: &str) -> EvidenceBundle {
    use chrono::TimeZone;
    EvidenceBundle {
        snapshot: PageSnapshot {
            url_initial: url.to_owned(),
            url_final: url.to_owned(),
            http_status: 200,
            html_initial: "<html><body><p>hello</p></body></html>".to_owned(),
            html_rendered: Some("<html><body><p>hello</p></body></html>".to_owned()),
            fetched_at: Utc.with_ymd_and_hms(2024, 1, 15, 0, 0, 0).unwrap(),
        },
        whois: Some(WhoisRecord {
            raw: "Creation Date: 2015-06-01T00:00:00Z\n".to_owned(),
            creation_date: NaiveDate::from_ymd_opt(2015, 6, 1),
            matched_tag: Some("Creation Date".to_owned()),
        }),
        rank: Some(RankInfo {
            present_in_index: true,
            top_rank: Some(1),
            match_count: 3,
        }),
        reputation: Some(ReputationVerdict {
            flagged: false,
            source: "reputation-service".to_owned(),
            detail: None,
        }),
        label: Some(Label::Benign),
        absences: BTreeMap::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_bundle_passes_validation() {
        assert_eq!(sample_bundle("https://example.com/").validate(), Ok(()));
    }

    #[test]
    fn absent_evidence_requires_a_reason() {
        let mut b = sample_bundle("https://example.com/");
        b.whois = None;
        let problems = b.validate().unwrap_err();
        assert!(problems.iter().any(|p| p.contains("whois absent")));

        b.absences.insert("whois".to_owned(), "service timeout".to_owned());
        assert_eq!(b.validate(), Ok(()));
    }

    #[test]
    fn rendered_absent_forces_equal_urls() {
        let mut b = sample_bundle("https://example.com/");
        b.snapshot.html_rendered = None;
        assert_eq!(b.validate(), Ok(()));
        b.snapshot.url_final = "https://elsewhere.example.com/".to_owned();
        assert!(b.validate().is_err());
    }

    #[test]
    fn whois_date_requires_matching_tag() {
        let mut b = sample_bundle("https://example.com/");
        b.whois.as_mut().unwrap().matched_tag = None;
        assert!(b.validate().is_err());
        b.whois.as_mut().unwrap().matched_tag = Some("Never In Raw".to_owned());
        assert!(b.validate().is_err());
    }

    #[test]
    fn rank_consistency_is_enforced() {
        let mut b = sample_bundle("https://example.com/");
        b.rank = Some(RankInfo {
            present_in_index: false,
            top_rank: Some(2),
            match_count: 0,
        });
        assert!(b.validate().is_err());
    }

    #[test]
    fn labels_encode_as_binary() {
        assert_eq!(Label::Benign.as_f64(), 0.0);
        assert_eq!(Label::Phishing.as_f64(), 1.0);
        assert_eq!(Label::from_binary(1), Some(Label::Phishing));
        assert_eq!(Label::from_binary(7), None);
        assert_eq!(serde_json::to_string(&Label::Phishing).unwrap(), "\"phishing\"");
    }
}
