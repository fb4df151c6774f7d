//! Deterministic generator of labeled synthetic evidence bundles.
//!
//! The corpus stands in for data that cannot be redistributed: benign pages
//! get stable domains, old WHOIS records, and a search-rank presence, while
//! phishing pages embody one of five observed evasion patterns:
//!
//! - T1 `benign-service-hosting`: credential forms parked on legitimate
//!   hosting services, inheriting the service's domain age and rank — the
//!   case age-based detection alone cannot separate.
//! - T2 `skeleton-clone`: a storefront cloned node-for-node from a benign
//!   template (DOM-skeleton similarity ≥ 0.95) with a credential form added.
//! - T3 `hidden-final-page`: a near-empty body that script-redirects far
//!   away, so only the rendered final page shows the credential form and the
//!   initial/final URL distance is large (> 30).
//! - T4 `document-harvest`: identity-document upload forms, occasionally on
//!   bare IP hosts.
//! - T5 `fake-invalid-shell`: live pages that claim to be errors or hide
//!   behind a captcha with no form at all.
//!
//! Everything is drawn from one seeded stream, so a config generates a
//! byte-identical corpus every time. Bundles are regular evidence bundles:
//! the whole pipeline (store → extract → train → evaluate) runs on them
//! unmodified.

mod templates;

use chrono::{DateTime, Days, NaiveDate, TimeZone, Utc};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::evidence::store::{bundle_key, ReplayStore};
use crate::evidence::{
    EvidenceBundle, EvidenceError, Label, PageSnapshot, RankInfo, ReputationVerdict, WhoisRecord,
};
use templates::*;

/// All generated snapshots carry the same capture instant, so repeated runs
/// and derived ages are reproducible.
fn corpus_instant() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 1, 15, 0, 0, 0).unwrap()
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{side} count must be at least 1")]
    InvalidCount { side: &'static str },
    #[error("invalid trend mix: {0}")]
    InvalidMix(String),
    #[error("{name} must lie in [0, 1], got {value}")]
    InvalidFraction { name: &'static str, value: f64 },
}

/// The five phishing deployment patterns the generator reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Trend {
    BenignServiceHosting,
    SkeletonClone,
    HiddenFinalPage,
    DocumentHarvest,
    FakeInvalidShell,
}

impl Trend {
    pub const ALL: [Trend; 5] = [
        Trend::BenignServiceHosting,
        Trend::SkeletonClone,
        Trend::HiddenFinalPage,
        Trend::DocumentHarvest,
        Trend::FakeInvalidShell,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Trend::BenignServiceHosting => "benign-service-hosting",
            Trend::SkeletonClone => "skeleton-clone",
            Trend::HiddenFinalPage => "hidden-final-page",
            Trend::DocumentHarvest => "document-harvest",
            Trend::FakeInvalidShell => "fake-invalid-shell",
        }
    }
}

impl std::fmt::Display for Trend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub seed: u64,
    pub benign_count: usize,
    pub phish_count: usize,
    /// Proportions of the phishing side assigned to T1–T5. Must be
    /// nonnegative and sum to 1 (±1e-9); apportioned by largest remainder.
    pub trend_mix: [f64; 5],
    /// Fraction of *benign* pages parked on the same hosting services T1
    /// abuses, so a benign-host flag alone cannot separate the classes.
    pub benign_host_fraction: f64,
    /// Fraction of benign pages that are ordinary member-login forms, so
    /// input-seeking alone cannot separate the classes either.
    pub benign_login_fraction: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 42,
            benign_count: 100,
            phish_count: 100,
            trend_mix: [0.2; 5],
            benign_host_fraction: 0.2,
            benign_login_fraction: 0.1,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.benign_count == 0 {
            return Err(CorpusError::InvalidCount { side: "benign" });
        }
        if self.phish_count == 0 {
            return Err(CorpusError::InvalidCount { side: "phishing" });
        }
        if let Some(bad) = self.trend_mix.iter().find(|p| **p < 0.0 || !p.is_finite()) {
            return Err(CorpusError::InvalidMix(format!(
                "proportion {bad} is not a nonnegative number"
            )));
        }
        let sum: f64 = self.trend_mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(CorpusError::InvalidMix(format!("proportions sum to {sum}, want 1")));
        }
        for (name, value) in [
            ("benign_host_fraction", self.benign_host_fraction),
            ("benign_login_fraction", self.benign_login_fraction),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(CorpusError::InvalidFraction { name, value });
            }
        }
        Ok(())
    }
}

/// Where a generated bundle came from, for inspection and per-trend checks.
/// `origins[i]` describes `bundles[i]`; benign pages carry no trend.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Origin {
    pub key: String,
    pub url: String,
    pub trend: Option<Trend>,
}

/// Per-corpus tallies echoed into the generation manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Breakdown {
    pub benign: usize,
    pub phishing: usize,
    pub trend_counts: BTreeMap<String, usize>,
    pub benign_on_hosting_services: usize,
    pub benign_with_login: usize,
    pub flagged_phishing: usize,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub bundles: Vec<EvidenceBundle>,
    pub origins: Vec<Origin>,
    pub breakdown: Breakdown,
}

impl Corpus {
    /// Write every bundle into a replay store; returns the stored keys in
    /// generation order.
    pub fn write_to_store(&self, store: &ReplayStore) -> Result<Vec<String>, EvidenceError> {
        let mut keys = Vec::with_capacity(self.bundles.len());
        for bundle in &self.bundles {
            keys.push(store.store(bundle)?);
        }
        Ok(keys)
    }
}

/// Largest-remainder apportionment of `total` across the mix. Ties go to
/// the earlier trend, so the result is deterministic.
fn apportion(mix: &[f64; 5], total: usize) -> [usize; 5] {
    let mut counts = [0usize; 5];
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(5);
    let mut assigned = 0;
    for (i, share) in mix.iter().enumerate() {
        let exact = share * total as f64;
        counts[i] = exact.floor() as usize;
        assigned += counts[i];
        remainders.push((i, exact - exact.floor()));
    }
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    let leftover = total - assigned;
    assert!(leftover <= remainders.len(), "apportionment drift");
    for (idx, _) in remainders.iter().take(leftover) {
        counts[*idx] += 1;
    }
    counts
}

/// A hosting service T1 abuses and some benign users legitimately use.
/// Ages and ranks are fixed per service so every bundle that touches the
/// service reports identical evidence, the way a recorded corpus would.
struct HostingService {
    /// Builds a URL for a user slug on this service.
    url_for: fn(&str) -> String,
    registrable: &'static str,
    created: NaiveDate,
    rank: u32,
    /// Appended to benign titles; contains the registrable label so hosted
    /// benign pages stay url/content-consistent.
    title_token: &'static str,
}

fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

fn services() -> [HostingService; 4] {
    [
        HostingService {
            url_for: |slug| format!("https://sites.google.com/view/{slug}"),
            registrable: "google.com",
            created: date(1997, 9, 15),
            rank: 1,
            title_token: "Google Sites",
        },
        HostingService {
            url_for: |slug| format!("https://{slug}.000webhostapp.com/home"),
            registrable: "000webhostapp.com",
            created: date(2007, 3, 22),
            rank: 7,
            title_token: "000webhostapp.com",
        },
        HostingService {
            url_for: |slug| format!("https://{slug}.ddns.net/home"),
            registrable: "ddns.net",
            created: date(1999, 6, 21),
            rank: 4,
            title_token: "ddns.net home server",
        },
        HostingService {
            url_for: |slug| format!("https://{slug}.vercel.app/home"),
            registrable: "vercel.app",
            created: date(2015, 11, 10),
            rank: 6,
            title_token: "Vercel",
        },
    ]
}

/// WHOIS text in one of three registry house styles; the date is the same,
/// the tag wording differs.
fn whois_record(domain: &str, created: NaiveDate, style: usize) -> WhoisRecord {
    let upper = domain.to_uppercase();
    let (raw, tag) = match style % 3 {
        0 => (
            format!(
                "Domain Name: {upper}\nRegistrar: Synthetic Registry Services\n\
Creation Date: {created}T00:00:00Z\nStatus: active\n"
            ),
            "Creation Date",
        ),
        1 => (
            format!(
                "domain: {domain}\ncreated: {created}\n\
registrar: Synthetic Registry Services\nsource: SYNTH\n"
            ),
            "created",
        ),
        _ => (
            format!(
                "Domain : {domain}\nRegistered on: {created}\n\
Registry Status: ok\n"
            ),
            "Registered on",
        ),
    };
    WhoisRecord {
        raw,
        creation_date: Some(created),
        matched_tag: Some(tag.to_owned()),
    }
}

fn rank_present(top_rank: u32, match_count: u32) -> RankInfo {
    RankInfo {
        present_in_index: true,
        top_rank: Some(top_rank),
        match_count,
    }
}

fn rank_absent() -> RankInfo {
    RankInfo {
        present_in_index: false,
        top_rank: None,
        match_count: 0,
    }
}

fn reputation(flagged: bool) -> ReputationVerdict {
    ReputationVerdict {
        flagged,
        source: "repcheck".to_owned(),
        detail: flagged.then(|| "SOCIAL_ENGINEERING".to_owned()),
    }
}

fn hex_token(rng: &mut ChaCha8Rng, len: usize) -> String {
    const HEX: &[u8] = b"0123456789abcdef";
    (0..len)
        .map(|_| HEX[rng.gen_range(0..HEX.len())] as char)
        .collect()
}

/// Session-token suffix a phishing kit tacks on while loading.
fn with_session_suffix(url: &str, rng: &mut ChaCha8Rng) -> String {
    let sep = if url.contains('?') { '&' } else { '?' };
    format!("{url}{sep}sid={}", hex_token(rng, 8))
}

fn snapshot(url_initial: String, url_final: String, html_initial: String, html_rendered: String) -> PageSnapshot {
    PageSnapshot {
        url_initial,
        url_final,
        http_status: 200,
        html_initial,
        html_rendered: Some(html_rendered),
        fetched_at: corpus_instant(),
    }
}

fn young_creation(rng: &mut ChaCha8Rng) -> NaiveDate {
    let days = rng.gen_range(0..=90);
    corpus_instant().date_naive() - Days::new(days)
}

pub fn generate(config: &CorpusConfig) -> Result<Corpus, CorpusError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let services = services();
    let fetched = corpus_instant().date_naive();

    let mut bundles: Vec<EvidenceBundle> = Vec::new();
    let mut origins: Vec<Origin> = Vec::new();
    let mut counter = 0usize;
    let mut flagged_phishing = 0usize;

    let push = |bundle: EvidenceBundle, trend: Option<Trend>, origins: &mut Vec<Origin>, bundles: &mut Vec<EvidenceBundle>| {
        origins.push(Origin {
            key: bundle_key(&bundle.snapshot.url_initial),
            url: bundle.snapshot.url_initial.clone(),
            trend,
        });
        bundles.push(bundle);
    };

    // ---- benign side -------------------------------------------------
    let hosted_count = ((config.benign_host_fraction * config.benign_count as f64).round()
        as usize)
        .min(config.benign_count);
    let login_count = ((config.benign_login_fraction * config.benign_count as f64).round()
        as usize)
        .min(config.benign_count - hosted_count);

    for i in 0..config.benign_count {
        counter += 1;
        let n = counter;
        let bundle = if i < hosted_count {
            // a personal page legitimately parked on a hosting service
            let service = &services[i % services.len()];
            let user = pick(&mut rng, &HOSTED_USER_WORDS);
            let slug = format!("{user}{n}");
            let url = (service.url_for)(&slug);
            let title = format!("{}{n} · {}", capitalize(user), service.title_token);
            let html = article_page(&title, &mut rng);
            EvidenceBundle {
                snapshot: snapshot(url.clone(), url, html.clone(), html),
                whois: Some(whois_record(service.registrable, service.created, n)),
                rank: Some(rank_present(service.rank, 9)),
                reputation: Some(reputation(false)),
                label: Some(Label::Benign),
                absences: BTreeMap::new(),
            }
        } else {
            let word = pick(&mut rng, &BENIGN_SITE_WORDS);
            let label = format!("{word}{n}");
            let age_days = rng.gen_range(730..=7300);
            let created = fetched - Days::new(age_days);
            let top_rank = rng.gen_range(1..=10);
            let match_count = rng.gen_range(1..=8);
            let (url, html) = if i < hosted_count + login_count {
                let title = format!("{} — member sign in", capitalize(&label));
                (
                    format!("https://www.{label}.com/members/login"),
                    login_page(&title, "Welcome back", &mut rng),
                )
            } else {
                let (path, tagline) = [
                    ("", "handmade goods"),
                    ("shop", "weekly specials"),
                    ("notes/today", "field notes"),
                    ("about", "workshop diary"),
                ][i % 4];
                let title = format!("{} — {tagline}", capitalize(&label));
                let html = if i % 2 == 0 {
                    shop_page(&title, &mut rng)
                } else {
                    article_page(&title, &mut rng)
                };
                (format!("https://www.{label}.com/{path}"), html)
            };
            EvidenceBundle {
                snapshot: snapshot(url.clone(), url, html.clone(), html),
                whois: Some(whois_record(&format!("{label}.com"), created, n)),
                rank: Some(rank_present(top_rank, match_count)),
                reputation: Some(reputation(false)),
                label: Some(Label::Benign),
                absences: BTreeMap::new(),
            }
        };
        push(bundle, None, &mut origins, &mut bundles);
    }

    // ---- phishing side, trend by trend -------------------------------
    let trend_counts = apportion(&config.trend_mix, config.phish_count);

    let flag = |rng: &mut ChaCha8Rng, flagged_phishing: &mut usize| {
        let flagged = rng.gen_bool(0.15);
        if flagged {
            *flagged_phishing += 1;
        }
        reputation(flagged)
    };

    // T1: credential form on a hosting service, inheriting its age/rank.
    for j in 0..trend_counts[0] {
        counter += 1;
        let n = counter;
        let brand = pick(&mut rng, &LURE_BRANDS);
        let (url, service) = match j % 3 {
            0 => (
                format!("https://{brand}-account-verify{n}.ddns.net/login"),
                &services[2],
            ),
            1 => (
                format!("https://sites.google.com/view/{brand}-secure{n}"),
                &services[0],
            ),
            _ => (
                format!("https://{brand}{n}.000webhostapp.com/account"),
                &services[1],
            ),
        };
        let title = format!("Account verification — {}", capitalize(brand));
        let html = login_page(&title, "Confirm your identity", &mut rng);
        let rep = flag(&mut rng, &mut flagged_phishing);
        let url_final = if rng.gen_bool(0.7) {
            with_session_suffix(&url, &mut rng)
        } else {
            url.clone()
        };
        let bundle = EvidenceBundle {
            snapshot: snapshot(url, url_final, html.clone(), html),
            whois: Some(whois_record(service.registrable, service.created, n)),
            rank: Some(rank_present(service.rank, 9)),
            reputation: Some(rep),
            label: Some(Label::Phishing),
            absences: BTreeMap::new(),
        };
        push(bundle, Some(Trend::BenignServiceHosting), &mut origins, &mut bundles);
    }

    // T2: benign storefront skeleton, cloned, with a credential form.
    for _ in 0..trend_counts[1] {
        counter += 1;
        let n = counter;
        let target = pick(&mut rng, &BENIGN_SITE_WORDS);
        let word = pick(&mut rng, &DOMAIN_WORDS);
        let tld = pick(&mut rng, &CHEAP_TLDS);
        let url = format!("https://{target}-{word}{n}.{tld}/shop");
        let title = format!("{} Clearance Outlet", capitalize(target));
        let html = shop_page_cloned(&title, &mut rng);
        let rep = flag(&mut rng, &mut flagged_phishing);
        let url_final = if rng.gen_bool(0.7) {
            with_session_suffix(&url, &mut rng)
        } else {
            url.clone()
        };
        let bundle = EvidenceBundle {
            snapshot: snapshot(url, url_final, html.clone(), html),
            whois: Some(whois_record(
                &format!("{target}-{word}{n}.{tld}"),
                young_creation(&mut rng),
                n,
            )),
            rank: Some(rank_absent()),
            reputation: Some(rep),
            label: Some(Label::Phishing),
            absences: BTreeMap::new(),
        };
        push(bundle, Some(Trend::SkeletonClone), &mut origins, &mut bundles);
    }

    // T3: stub that script-redirects to a far-away host; credentials only
    // on the rendered page. Length difference alone guarantees the URL
    // distance exceeds 30.
    for _ in 0..trend_counts[2] {
        counter += 1;
        let n = counter;
        let word = pick(&mut rng, &DOMAIN_WORDS);
        let word2 = pick(&mut rng, &DOMAIN_WORDS);
        let brand = pick(&mut rng, &LURE_BRANDS);
        let url_initial = format!("http://{word}{n}.link/r");
        let mut url_final = format!(
            "https://{brand}-video-gate{n}.{word2}stream.icu/watch/s/{}",
            hex_token(&mut rng, 16)
        );
        while url_final.chars().count() < url_initial.chars().count() + 31 {
            url_final.push('0');
        }
        let html_initial = redirect_stub(&mut rng);
        let html_rendered = video_login_page("Now playing — sign in to continue", &mut rng);
        let rep = flag(&mut rng, &mut flagged_phishing);
        let bundle = EvidenceBundle {
            snapshot: snapshot(url_initial, url_final, html_initial, html_rendered),
            whois: Some(whois_record(
                &format!("{word}{n}.link"),
                young_creation(&mut rng),
                n,
            )),
            rank: Some(rank_absent()),
            reputation: Some(rep),
            label: Some(Label::Phishing),
            absences: BTreeMap::new(),
        };
        push(bundle, Some(Trend::HiddenFinalPage), &mut origins, &mut bundles);
    }

    // T4: identity-document upload, sometimes on a bare IP host.
    for j in 0..trend_counts[3] {
        counter += 1;
        let n = counter;
        let title = "Document verification required";
        let html = doc_upload_page(title, &mut rng);
        let rep = flag(&mut rng, &mut flagged_phishing);
        let bundle = if j % 3 == 2 {
            let url = format!("http://198.51.100.{}/docs/upload{n}", 1 + (n % 200));
            let url_final = if rng.gen_bool(0.7) {
                with_session_suffix(&url, &mut rng)
            } else {
                url.clone()
            };
            let mut absences = BTreeMap::new();
            // mirrors live collection: nothing to ask WHOIS or the rank
            // index about when the host is a bare address
            absences.insert("whois".to_owned(), "host has no registrable domain".to_owned());
            absences.insert("rank".to_owned(), "host has no registrable domain".to_owned());
            EvidenceBundle {
                snapshot: snapshot(url, url_final, html.clone(), html),
                whois: None,
                rank: None,
                reputation: Some(rep),
                label: Some(Label::Phishing),
                absences,
            }
        } else {
            let word = pick(&mut rng, &DOMAIN_WORDS);
            let tld = pick(&mut rng, &CHEAP_TLDS);
            let url = format!("https://secure-docs{n}.{word}.{tld}/upload");
            let url_final = if rng.gen_bool(0.7) {
                with_session_suffix(&url, &mut rng)
            } else {
                url.clone()
            };
            EvidenceBundle {
                snapshot: snapshot(url, url_final, html.clone(), html),
                whois: Some(whois_record(
                    &format!("{word}.{tld}"),
                    young_creation(&mut rng),
                    n,
                )),
                rank: Some(rank_absent()),
                reputation: Some(rep),
                label: Some(Label::Phishing),
                absences: BTreeMap::new(),
            }
        };
        push(bundle, Some(Trend::DocumentHarvest), &mut origins, &mut bundles);
    }

    // T5: live pages pretending not to exist — error text or a bare captcha.
    for j in 0..trend_counts[4] {
        counter += 1;
        let n = counter;
        let word = pick(&mut rng, &DOMAIN_WORDS);
        let tld = pick(&mut rng, &CHEAP_TLDS);
        let url = format!("https://{word}{n}.{tld}/promo");
        let html = if j % 2 == 0 {
            let hidden_form = rng.gen_bool(0.5);
            fake_404_page("Page not found", hidden_form, &mut rng)
        } else {
            captcha_page("Just a moment…", &mut rng)
        };
        let rep = flag(&mut rng, &mut flagged_phishing);
        let url_final = if rng.gen_bool(0.7) {
            with_session_suffix(&url, &mut rng)
        } else {
            url.clone()
        };
        let bundle = EvidenceBundle {
            snapshot: snapshot(url, url_final, html.clone(), html),
            whois: Some(whois_record(
                &format!("{word}{n}.{tld}"),
                young_creation(&mut rng),
                n,
            )),
            rank: Some(rank_absent()),
            reputation: Some(rep),
            label: Some(Label::Phishing),
            absences: BTreeMap::new(),
        };
        push(bundle, Some(Trend::FakeInvalidShell), &mut origins, &mut bundles);
    }

    let mut trend_map = BTreeMap::new();
    for (trend, count) in Trend::ALL.iter().zip(trend_counts) {
        trend_map.insert(trend.name().to_owned(), count);
    }
    Ok(Corpus {
        bundles,
        origins,
        breakdown: Breakdown {
            benign: config.benign_count,
            phishing: config.phish_count,
            trend_counts: trend_map,
            benign_on_hosting_services: hosted_count,
            benign_with_login: login_count,
            flagged_phishing,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domkit::{extract_skeleton, inspect_content, skeleton_similarity};
    use crate::featurizer::{extract_features, FeatureConfig, FeatureVector};
    use crate::textmetrics::pearson;

    fn small(seed: u64, benign: usize, phish: usize) -> CorpusConfig {
        CorpusConfig {
            seed,
            benign_count: benign,
            phish_count: phish,
            ..CorpusConfig::default()
        }
    }

    fn features(corpus: &Corpus) -> Vec<FeatureVector> {
        let cfg = FeatureConfig::default();
        corpus
            .bundles
            .iter()
            .map(|b| extract_features(b, &cfg).expect("synthetic bundles featurize"))
            .collect()
    }

    fn trend_rows<'c>(corpus: &'c Corpus, trend: Trend) -> Vec<&'c EvidenceBundle> {
        corpus
            .origins
            .iter()
            .zip(&corpus.bundles)
            .filter(|(o, _)| o.trend == Some(trend))
            .map(|(_, b)| b)
            .collect()
    }

    #[test]
    fn generation_is_byte_identical_across_runs() {
        let config = small(9, 30, 30);
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(
            serde_json::to_string(&a.bundles).unwrap(),
            serde_json::to_string(&b.bundles).unwrap()
        );
        let c = generate(&small(10, 30, 30)).unwrap();
        assert_ne!(
            serde_json::to_string(&a.bundles).unwrap(),
            serde_json::to_string(&c.bundles).unwrap()
        );
    }

    #[test]
    fn label_balance_and_apportionment_are_exact() {
        let config = CorpusConfig {
            trend_mix: [0.5, 0.2, 0.1, 0.1, 0.1],
            ..small(1, 40, 37)
        };
        let corpus = generate(&config).unwrap();
        let benign = corpus
            .bundles
            .iter()
            .filter(|b| b.label == Some(Label::Benign))
            .count();
        assert_eq!(benign, 40);
        assert_eq!(corpus.bundles.len(), 77);
        // 37 × [.5 .2 .1 .1 .1] → floors [18 7 3 3 3], three leftovers go to
        // the largest remainders (the three .7s)
        let counts: Vec<usize> = Trend::ALL
            .iter()
            .map(|t| corpus.breakdown.trend_counts[t.name()])
            .collect();
        assert_eq!(counts, vec![18, 7, 4, 4, 4]);
        assert_eq!(counts.iter().sum::<usize>(), 37);
        assert_eq!(corpus.origins.len(), corpus.bundles.len());
    }

    #[test]
    fn every_bundle_validates_and_round_trips_the_store() {
        let corpus = generate(&small(3, 20, 20)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = ReplayStore::open(dir.path());
        let keys = corpus.write_to_store(&store).unwrap();
        assert_eq!(keys.len(), 40);
        for (bundle, key) in corpus.bundles.iter().zip(&keys) {
            bundle
                .validate()
                .unwrap_or_else(|p| panic!("{} invalid: {p:?}", bundle.snapshot.url_initial));
            let back = store.load_by_key(key).unwrap();
            assert_eq!(&back, bundle);
        }
    }

    #[test]
    fn hidden_final_pages_always_travel_far() {
        let corpus = generate(&small(4, 5, 25)).unwrap();
        let cfg = FeatureConfig::default();
        let rows = trend_rows(&corpus, Trend::HiddenFinalPage);
        assert!(!rows.is_empty());
        for bundle in rows {
            let v = extract_features(bundle, &cfg).unwrap();
            assert!(v.values[5] > 30.0, "redirect distance {}", v.values[5]);
            let s = &bundle.snapshot;
            assert_ne!(s.url_initial, s.url_final);
            // the rendered page, not the stub, carries the credential form
            assert!(v.values[4] >= 2.0, "input seeking {}", v.values[4]);
        }
    }

    #[test]
    fn fake_invalid_shells_read_as_gone_or_gated() {
        let corpus = generate(&small(5, 5, 25)).unwrap();
        let rows = trend_rows(&corpus, Trend::FakeInvalidShell);
        assert!(rows.len() >= 4);
        let mut saw_invalid = false;
        let mut saw_gated = false;
        for bundle in rows {
            let html = bundle.snapshot.html_rendered.as_deref().unwrap();
            let profile = inspect_content(html, bundle.snapshot.http_status);
            assert!(
                profile.fake_invalid || profile.captcha_gated,
                "{} is neither fake-invalid nor captcha-gated",
                bundle.snapshot.url_initial
            );
            saw_invalid |= profile.fake_invalid;
            saw_gated |= profile.captcha_gated;
        }
        assert!(saw_invalid && saw_gated, "both shell styles appear");
    }

    #[test]
    fn cloned_pages_match_the_storefront_template_skeleton() {
        let corpus = generate(&small(6, 5, 25)).unwrap();
        let mut reference_rng = ChaCha8Rng::seed_from_u64(999);
        let reference =
            extract_skeleton(&templates::shop_page("Reference", &mut reference_rng)).unwrap();
        let rows = trend_rows(&corpus, Trend::SkeletonClone);
        assert!(!rows.is_empty());
        for bundle in rows {
            let skel =
                extract_skeleton(bundle.snapshot.html_rendered.as_deref().unwrap()).unwrap();
            let s = skeleton_similarity(&skel, &reference);
            assert!(s >= 0.95, "clone similarity {s}");
        }
    }

    #[test]
    fn benign_pages_are_stable_and_self_consistent() {
        let corpus = generate(&small(7, 40, 5)).unwrap();
        let vectors = features(&corpus);
        let mut hosted = 0;
        for (v, bundle) in vectors.iter().zip(&corpus.bundles) {
            if bundle.label != Some(Label::Benign) {
                continue;
            }
            assert_eq!(v.values[5], 0.0, "{}: benign never redirects", v.key);
            assert_eq!(v.values[6], 1.0, "{}: benign content names its domain", v.key);
            assert!(v.values[2] > 0.0, "{}: benign is rank-present", v.key);
            assert!(v.values[1] >= 730.0, "{}: benign domains are years old", v.key);
            assert_eq!(v.values[3], 0.0, "{}: benign is never flagged", v.key);
            hosted += (v.values[7] == 1.0) as usize;
        }
        assert_eq!(hosted, corpus.breakdown.benign_on_hosting_services);
        assert_eq!(hosted, 8, "0.2 × 40 hosted benign pages");
        assert_eq!(corpus.breakdown.benign_with_login, 4, "0.1 × 40 logins");
    }

    #[test]
    fn phishing_pages_never_mention_their_final_domain() {
        let corpus = generate(&small(8, 5, 40)).unwrap();
        for (v, bundle) in features(&corpus).iter().zip(&corpus.bundles) {
            if bundle.label == Some(Label::Phishing) {
                assert_eq!(v.values[6], 0.0, "{}: consistency must fail", v.key);
            }
        }
    }

    #[test]
    fn service_hosted_phishing_inherits_age_and_rank() {
        let corpus = generate(&small(12, 5, 30)).unwrap();
        let cfg = FeatureConfig::default();
        let rows = trend_rows(&corpus, Trend::BenignServiceHosting);
        assert!(rows.len() >= 6);
        for bundle in rows {
            let v = extract_features(bundle, &cfg).unwrap();
            assert_eq!(v.values[7], 1.0, "{}: hosted on a benign service", v.key);
            assert!(v.values[1] > 2900.0, "{}: inherited service age", v.key);
            assert!(v.values[2] > 0.0, "{}: inherited service rank", v.key);
            assert!(v.values[4] >= 2.0, "{}: seeks credentials", v.key);
        }
    }

    #[test]
    fn document_harvesters_ask_for_documents_and_sometimes_sit_on_ips() {
        let corpus = generate(&small(13, 5, 25)).unwrap();
        let cfg = FeatureConfig::default();
        let rows = trend_rows(&corpus, Trend::DocumentHarvest);
        assert!(rows.len() >= 3);
        let mut ip_hosted = 0;
        for bundle in rows {
            let v = extract_features(bundle, &cfg).unwrap();
            assert!(v.values[4] >= 2.0, "{}: email + document upload", v.key);
            if v.values[8] == 1.0 {
                ip_hosted += 1;
                assert!(bundle.whois.is_none());
                assert_eq!(
                    bundle.absences.get("whois").map(String::as_str),
                    Some("host has no registrable domain")
                );
            }
        }
        assert!(ip_hosted >= 1, "every third harvester sits on an IP");
    }

    #[test]
    fn class_separations_hold_by_construction() {
        let corpus = generate(&small(11, 60, 60)).unwrap();
        let vectors = features(&corpus);
        let labels: Vec<f64> = corpus
            .bundles
            .iter()
            .map(|b| b.label.unwrap().as_f64())
            .collect();

        let mean = |rows: Vec<f64>| -> f64 {
            let n = rows.len() as f64;
            rows.iter().sum::<f64>() / n
        };
        let f6_phish = mean(
            vectors
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == 1.0)
                .map(|(v, _)| v.values[5])
                .collect(),
        );
        let f6_benign = mean(
            vectors
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == 0.0)
                .map(|(v, _)| v.values[5])
                .collect(),
        );
        assert!(f6_phish > f6_benign, "{f6_phish} vs {f6_benign}");

        // age separates everywhere except the service-hosting trend, which
        // inherits its age on purpose
        let f2_benign = mean(
            vectors
                .iter()
                .zip(&labels)
                .filter(|(_, l)| **l == 0.0)
                .map(|(v, _)| v.values[1])
                .collect(),
        );
        let f2_phish_rest = mean(
            vectors
                .iter()
                .zip(&corpus.origins)
                .filter(|(_, o)| {
                    o.trend.is_some() && o.trend != Some(Trend::BenignServiceHosting)
                })
                .map(|(v, _)| v.values[1])
                .collect(),
        );
        assert!(f2_benign > f2_phish_rest, "{f2_benign} vs {f2_phish_rest}");

        let f6: Vec<f64> = vectors.iter().map(|v| v.values[5]).collect();
        let r = pearson(&f6, &labels).unwrap().coefficient;
        assert!(r > 0.5, "redirect distance correlates with the label: {r}");
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut c = small(1, 0, 10);
        assert!(matches!(generate(&c), Err(CorpusError::InvalidCount { side: "benign" })));
        c = small(1, 10, 0);
        assert!(matches!(
            generate(&c),
            Err(CorpusError::InvalidCount { side: "phishing" })
        ));
        c = small(1, 10, 10);
        c.trend_mix = [0.5, 0.2, 0.1, 0.1, 0.0];
        assert!(matches!(generate(&c), Err(CorpusError::InvalidMix(_))));
        c = small(1, 10, 10);
        c.trend_mix = [0.6, 0.2, 0.1, 0.2, -0.1];
        assert!(matches!(generate(&c), Err(CorpusError::InvalidMix(_))));
        c = small(1, 10, 10);
        c.benign_host_fraction = 1.5;
        assert!(matches!(
            generate(&c),
            Err(CorpusError::InvalidFraction { name: "benign_host_fraction", .. })
        ));
        c = small(1, 10, 10);
        c.benign_login_fraction = -0.1;
        assert!(matches!(
            generate(&c),
            Err(CorpusError::InvalidFraction { name: "benign_login_fraction", .. })
        ));
    }
}
