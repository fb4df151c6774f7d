//! The 13-dimension feature representation of an evidence bundle.
//!
//! Features fall into four categories: reputation (is the page known-good or
//! known-bad), goal (what it asks of the visitor), consistency (does content
//! match the URL), and URL analytics (shape of the address itself). Missing
//! evidence never fails extraction — each absent part has a fixed imputation
//! and leaves a note on the vector, keeping extraction total and auditable.
//!
//! The CSV layout is the interchange contract between pipeline stages, and
//! its header line doubles as the schema version: a file whose header differs
//! from [`csv_header`] was written by an incompatible build.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

use crate::domkit::{inspect_content_with, visible_text, ContentConfig};
use crate::evidence::{store, EvidenceBundle, Label};
use crate::textmetrics::{levenshtein, pearson};
use crate::urlkit::{is_benign_host, parse_url, url_analytics, BenignHosts, SuffixRules};

/// Identifies the feature layout; bumped when features are added, removed,
/// or change meaning.
pub const FEATURE_SCHEMA_VERSION: &str = "fv1";

pub const FEATURE_COUNT: usize = 13;

/// Feature names, in vector order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "fake_invalid",
    "domain_age_days",
    "rank_score",
    "reputation_flagged",
    "seeks_input",
    "redirect_distance",
    "url_content_consistency",
    "benign_host",
    "has_ip_host",
    "suspicious_symbol_count",
    "subdomain_count",
    "url_length",
    "registrable_label_length",
];

/// Indices of the non-binary features, the only ones z-scoring touches.
/// Binary features already live on a comparable scale.
pub const NORMALIZED_FEATURES: [usize; 7] = [1, 4, 5, 9, 10, 11, 12];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureCategory {
    Reputation,
    Goal,
    Consistency,
    Analytics,
}

impl FeatureCategory {
    /// Category of the feature at `index`, or `None` out of range.
    pub fn of(index: usize) -> Option<FeatureCategory> {
        Some(match index {
            0..=3 => FeatureCategory::Reputation,
            4..=5 => FeatureCategory::Goal,
            6..=7 => FeatureCategory::Consistency,
            8..=12 => FeatureCategory::Analytics,
            _ => return None,
        })
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("bundle {key} cannot be featurized: {reason}")]
    MalformedBundle { key: String, reason: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("normalization needs at least 2 vectors, got {0}")]
    TooFewVectors(usize),
    #[error("vectors are already normalized")]
    AlreadyNormalized,
    #[error("normalized vectors cannot be exported; csv carries raw features")]
    NormalizedExport,
    #[error("vector {key} has no label")]
    UnlabeledVector { key: String },
    #[error("malformed csv at line {line}: {reason}")]
    MalformedCsv { line: usize, reason: String },
    #[error("feature schema mismatch: file header {found:?}, expected {expected:?}")]
    SchemaVersionMismatch { found: String, expected: String },
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One bundle reduced to numbers. `key` is the bundle's store key, so a row
/// in any downstream file can be traced back to its recorded evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub key: String,
    pub values: [f64; FEATURE_COUNT],
    pub label: Option<Label>,
    /// Set once z-scoring has been applied; normalized vectors must not be
    /// re-normalized or exported.
    pub normalized: bool,
    /// Imputations and fallbacks applied during extraction.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

/// Tunables for extraction. Defaults work offline with the built-in lists.
#[derive(Debug, Clone)]
pub struct FeatureConfig {
    pub suffix_rules: SuffixRules,
    pub benign_hosts: BenignHosts,
    pub content: ContentConfig,
    /// When false, the reputation verdict is ignored and its feature pinned
    /// to 0 — for measuring how the classifier does without a denylist feed.
    pub include_reputation: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            suffix_rules: SuffixRules::default(),
            benign_hosts: BenignHosts::default(),
            content: ContentConfig::default(),
            include_reputation: true,
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Reduce one bundle to its feature vector. Only a snapshot whose initial
/// URL cannot be parsed fails; absent evidence is imputed with a note.
pub fn extract_features(
    bundle: &EvidenceBundle,
    cfg: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    let snap = &bundle.snapshot;
    let key = store::bundle_key(&snap.url_initial);

    let initial = parse_url(&snap.url_initial, &cfg.suffix_rules).map_err(|e| {
        FeatureError::MalformedBundle {
            key: key.clone(),
            reason: e.to_string(),
        }
    })?;
    let mut notes = Vec::new();

    // The rendered DOM is what the visitor faces; fall back to the raw body
    // when rendering was unavailable.
    let html = match &snap.html_rendered {
        Some(r) => r.as_str(),
        None => {
            notes.push("no rendered dom; using initial body".to_owned());
            snap.html_initial.as_str()
        }
    };
    if html.trim().is_empty() {
        notes.push("page body empty".to_owned());
    }
    let profile = inspect_content_with(html, snap.http_status, &cfg.content);
    let text = visible_text(html);

    let domain_age_days = match bundle.whois.as_ref().and_then(|w| w.creation_date) {
        Some(created) => {
            let days = (snap.fetched_at.date_naive() - created).num_days();
            if days < 0 {
                notes.push("creation date after fetch; clamped to 0 days".to_owned());
            }
            days.max(0) as f64
        }
        None => {
            notes.push("domain age unknown; imputed 0 days".to_owned());
            0.0
        }
    };

    if bundle.rank.is_none() {
        notes.push("rank evidence absent; score 0".to_owned());
    }
    let rank_score = match bundle.rank.as_ref().and_then(|r| r.top_rank) {
        Some(rank) => 1.0 / rank as f64,
        None => 0.0,
    };

    let reputation_flagged = if !cfg.include_reputation {
        notes.push("reputation feature disabled by config".to_owned());
        false
    } else {
        match &bundle.reputation {
            Some(v) => v.flagged,
            None => {
                notes.push("reputation evidence absent; treated unflagged".to_owned());
                false
            }
        }
    };

    let seeks_input = profile.password_inputs
        + profile.email_inputs
        + profile.card_inputs
        + profile.document_upload_inputs;

    let redirect_distance = levenshtein(&snap.url_initial, &snap.url_final) as f64;

    // Consistency asks whether the page talks about the domain it finally
    // lives on — the landing URL, not the address the victim clicked.
    let consistent = match parse_url(&snap.url_final, &cfg.suffix_rules) {
        Ok(parts) if !parts.registrable_label.is_empty() => {
            let want = parts.registrable_label.to_lowercase();
            profile.title.to_lowercase().contains(&want) || text.contains(&want)
        }
        _ => {
            notes.push("final url has no registrable label; consistency 0".to_owned());
            false
        }
    };

    let shape = url_analytics(&initial);

    let values = [
        flag(profile.fake_invalid),
        domain_age_days,
        rank_score,
        flag(reputation_flagged),
        seeks_input as f64,
        redirect_distance,
        flag(consistent),
        flag(is_benign_host(&initial, &cfg.benign_hosts)),
        flag(shape.has_ip_host),
        shape.suspicious_symbol_count as f64,
        shape.subdomain_count as f64,
        shape.url_length as f64,
        shape.registrable_label_length as f64,
    ];

    Ok(FeatureVector {
        key,
        values,
        label: bundle.label,
        normalized: false,
        notes,
    })
}

/// Per-feature location and scale fitted on a training set. Binary features
/// carry the identity transform (mean 0, std 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: [f64; FEATURE_COUNT],
    pub std: [f64; FEATURE_COUNT],
    /// Features whose training variance was zero; their std is clamped to 1
    /// so applying the stats maps every value to 0 instead of dividing by 0.
    pub degenerate: Vec<String>,
}

/// Fit z-score statistics (population standard deviation) over the
/// non-binary features of a raw training set.
pub fn fit_norm_stats(vectors: &[FeatureVector]) -> Result<NormStats, FeatureError> {
    if vectors.len() < 2 {
        return Err(FeatureError::TooFewVectors(vectors.len()));
    }
    if vectors.iter().any(|v| v.normalized) {
        return Err(FeatureError::AlreadyNormalized);
    }
    let n = vectors.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    let mut std = [1.0; FEATURE_COUNT];
    let mut degenerate = Vec::new();
    for idx in NORMALIZED_FEATURES {
        let m = vectors.iter().map(|v| v.values[idx]).sum::<f64>() / n;
        let var = vectors
            .iter()
            .map(|v| (v.values[idx] - m).powi(2))
            .sum::<f64>()
            / n;
        let sigma = var.sqrt();
        mean[idx] = m;
        if sigma > 0.0 {
            std[idx] = sigma;
        } else {
            // constant feature: warn, don't fail — a small or synthetic
            // training set can legitimately produce one
            degenerate.push(FEATURE_NAMES[idx].to_owned());
            std[idx] = 1.0;
        }
    }
    Ok(NormStats {
        mean,
        std,
        degenerate,
    })
}

/// Apply fitted statistics in place, marking the vectors normalized.
pub fn apply_norm(vectors: &mut [FeatureVector], stats: &NormStats) -> Result<(), FeatureError> {
    if vectors.iter().any(|v| v.normalized) {
        return Err(FeatureError::AlreadyNormalized);
    }
    for v in vectors {
        for idx in NORMALIZED_FEATURES {
            v.values[idx] = (v.values[idx] - stats.mean[idx]) / stats.std[idx];
        }
        v.normalized = true;
    }
    Ok(())
}

/// The exact header line; also the schema handshake between writer and
/// reader ([`FEATURE_SCHEMA_VERSION`] names the layout this header encodes).
pub fn csv_header() -> String {
    let mut h = String::from("key");
    for i in 1..=FEATURE_COUNT {
        write!(h, ",f{i}").unwrap();
    }
    h.push_str(",label");
    h
}

fn csv_row(v: &FeatureVector) -> String {
    let mut row = v.key.clone();
    for value in v.values {
        write!(row, ",{value}").unwrap();
    }
    row.push(',');
    if let Some(label) = v.label {
        write!(row, "{}", label.as_f64() as u8).unwrap();
    }
    row
}

/// Serialize raw vectors to CSV. Deterministic: the same vectors always
/// yield the same bytes. Refuses normalized vectors — files carry raw
/// features, scaling travels with the model that was fitted on them.
pub fn write_csv(vectors: &[FeatureVector]) -> Result<String, FeatureError> {
    if vectors.iter().any(|v| v.normalized) {
        return Err(FeatureError::NormalizedExport);
    }
    let mut out = csv_header();
    out.push('\n');
    for v in vectors {
        out.push_str(&csv_row(v));
        out.push('\n');
    }
    Ok(out)
}

pub fn write_csv_file(path: &Path, vectors: &[FeatureVector]) -> Result<(), FeatureError> {
    let text = write_csv(vectors)?;
    std::fs::write(path, text).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a feature CSV. Blank lines and `#` comments are tolerated; the
/// first content line must be the exact current header.
pub fn read_csv(text: &str) -> Result<Vec<FeatureVector>, FeatureError> {
    let expected = csv_header();
    let mut vectors = Vec::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed == expected {
                saw_header = true;
                continue;
            }
            // A recognizable header that isn't ours means a schema from a
            // different build; anything else is just not a feature csv.
            if trimmed.starts_with("key,") && trimmed.ends_with(",label") {
                return Err(FeatureError::SchemaVersionMismatch {
                    found: trimmed.to_owned(),
                    expected,
                });
            }
            return Err(FeatureError::MalformedCsv {
                line: line_no,
                reason: "expected header line".to_owned(),
            });
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != FEATURE_COUNT + 2 {
            return Err(FeatureError::MalformedCsv {
                line: line_no,
                reason: format!("expected {} fields, got {}", FEATURE_COUNT + 2, fields.len()),
            });
        }
        let key = fields[0].to_owned();
        if key.is_empty() {
            return Err(FeatureError::MalformedCsv {
                line: line_no,
                reason: "empty key".to_owned(),
            });
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (j, slot) in values.iter_mut().enumerate() {
            let field = fields[j + 1];
            *slot = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| FeatureError::MalformedCsv {
                    line: line_no,
                    reason: format!("bad value {field:?} for f{}", j + 1),
                })?;
        }
        let label = match fields[FEATURE_COUNT + 1] {
            "" => None,
            "0" => Some(Label::Benign),
            "1" => Some(Label::Phishing),
            other => {
                return Err(FeatureError::MalformedCsv {
                    line: line_no,
                    reason: format!("bad label {other:?} (want 0, 1, or empty)"),
                })
            }
        };
        vectors.push(FeatureVector {
            key,
            values,
            label,
            normalized: false,
            notes: Vec::new(),
        });
    }
    if !saw_header {
        return Err(FeatureError::MalformedCsv {
            line: text.lines().count().max(1),
            reason: "missing header".to_owned(),
        });
    }
    Ok(vectors)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<FeatureVector>, FeatureError> {
    let text = std::fs::read_to_string(path).map_err(|source| FeatureError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_csv(&text)
}

/// Content hash of a dataset: the digest of its canonical CSV rows (header
/// included). Two datasets digest equal exactly when their serialized forms
/// are byte-identical.
pub fn dataset_digest(vectors: &[FeatureVector]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(csv_header().as_bytes());
    hasher.update(b"\n");
    for v in vectors {
        hasher.update(csv_row(v).as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Pairwise linear correlation over 13 features plus the label, for the
/// analysis command. Cells are `None` where correlation is undefined
/// (constant column, or fewer than two rows).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Row/column order: the 13 feature names, then "label".
    pub names: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl CorrelationReport {
    pub const LABEL_INDEX: usize = FEATURE_COUNT;

    pub fn pair(&self, a: usize, b: usize) -> Option<f64> {
        self.cells[a][b]
    }
}

/// Correlate every feature with every other and with the label. All vectors
/// must be labeled — an unlabeled row has nothing to correlate against.
pub fn correlation_report(vectors: &[FeatureVector]) -> Result<CorrelationReport, FeatureError> {
    if vectors.is_empty() {
        return Err(FeatureError::EmptyDataset);
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(vectors.len()); FEATURE_COUNT + 1];
    for v in vectors {
        let label = v.label.ok_or_else(|| FeatureError::UnlabeledVector {
            key: v.key.clone(),
        })?;
        for (i, column) in columns.iter_mut().enumerate().take(FEATURE_COUNT) {
            column.push(v.values[i]);
        }
        columns[FEATURE_COUNT].push(label.as_f64());
    }
    let names: Vec<String> = FEATURE_NAMES
        .iter()
        .map(|s| s.to_string())
        .chain(std::iter::once("label".to_owned()))
        .collect();
    let cells = columns
        .iter()
        .map(|a| {
            columns
                .iter()
                .map(|b| pearson(a, b).ok().map(|r| r.coefficient))
                .collect()
        })
        .collect();
    Ok(CorrelationReport { names, cells })
}
