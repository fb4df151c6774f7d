//! Evaluation: confusion counts, the derived rates, deterministic
//! train/eval splitting, and comparison against externally produced
//! predictions.
//!
//! Phishing is the positive class throughout. The false-acceptance rate is
//! the share of phishing that slipped through (missed positives) and the
//! false-rejection rate the share of benign pages wrongly blocked. FAR is
//! computed as `100 - recall`, which is algebraically `100*fn/(tp+fn)` but
//! keeps `far + recall == 100` exact in floating point — the two quantities
//! are reported side by side and must not drift apart in the last ulp.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

use crate::evidence::Label;
use crate::featurizer::{dataset_digest, FeatureVector};
use crate::lrmodel::{LrError, LrModel};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("vector {key} has no label")]
    Unlabeled { key: String },
    #[error("train fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("cannot split: class {label} has only {count} examples (need at least 2)")]
    TooSmall { label: Label, count: usize },
    #[error("malformed label file at line {line}: {reason}")]
    MalformedLabelFile { line: usize, reason: String },
    #[error("duplicate key {key} in label file at line {line}")]
    DuplicateKey { key: String, line: usize },
    #[error("no prediction for key {0}")]
    MissingPrediction(String),
    #[error("prediction for unknown key {0}")]
    UnmatchedPrediction(String),
    #[error(transparent)]
    Model(#[from] LrError),
    #[error("i/o failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Binary confusion counts with phishing as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_neg: u64,
    pub false_pos: u64,
    pub true_neg: u64,
}

impl ConfusionMatrix {
    pub fn record(&mut self, predicted: Label, actual: Label) {
        match (predicted, actual) {
            (Label::Phishing, Label::Phishing) => self.true_pos += 1,
            (Label::Benign, Label::Phishing) => self.false_neg += 1,
            (Label::Phishing, Label::Benign) => self.false_pos += 1,
            (Label::Benign, Label::Benign) => self.true_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_neg + self.false_pos + self.true_neg
    }
}

/// Metrics in percent. A rate whose denominator is zero is reported absent
/// rather than as NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub samples: u64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub precision: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub recall: Option<f64>,
    /// False-acceptance rate: phishing classified benign, over all phishing.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub far: Option<f64>,
    /// False-rejection rate: benign classified phishing, over all benign.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub frr: Option<f64>,
    /// Digest of what was evaluated (feature dataset or truth label file).
    pub dataset_digest: String,
}

impl EvalReport {
    pub fn from_confusion(
        confusion: ConfusionMatrix,
        dataset_digest: String,
    ) -> Result<EvalReport, EvalError> {
        let total = confusion.total();
        if total == 0 {
            return Err(EvalError::EmptyDataset);
        }
        let pct = |num: u64, den: u64| -> Option<f64> {
            (den != 0).then(|| 100.0 * num as f64 / den as f64)
        };
        let accuracy = 100.0 * (confusion.true_pos + confusion.true_neg) as f64 / total as f64;
        let precision = pct(confusion.true_pos, confusion.true_pos + confusion.false_pos);
        let recall = pct(confusion.true_pos, confusion.true_pos + confusion.false_neg);
        // complement of recall rather than fn/(tp+fn): same value on paper,
        // but this form makes far + recall == 100 hold bit-exactly
        let far = recall.map(|r| 100.0 - r);
        let frr = pct(confusion.false_pos, confusion.false_pos + confusion.true_neg);
        Ok(EvalReport {
            samples: total,
            confusion,
            accuracy,
            precision,
            recall,
            far,
            frr,
            dataset_digest,
        })
    }

    /// Canonical content hash of the report (over its compact JSON form).
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("report serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text table, one decimal, with the complement column for
    /// precision and recall spelled out.
    pub fn render_text(&self) -> String {
        fn cell(v: Option<f64>) -> String {
            v.map_or_else(|| "n/a".to_owned(), |x| format!("{x:.1}"))
        }
        let c = &self.confusion;
        let mut out = String::new();
        writeln!(
            out,
            "samples: {} (tp {}, fn {}, fp {}, tn {})",
            self.samples, c.true_pos, c.false_neg, c.false_pos, c.true_neg
        )
        .unwrap();
        writeln!(out, "{:<12}{:>8}{:>12}", "metric", "%", "100-%").unwrap();
        writeln!(out, "{:<12}{:>8.1}{:>12}", "accuracy", self.accuracy, "").unwrap();
        writeln!(
            out,
            "{:<12}{:>8}{:>12}",
            "precision",
            cell(self.precision),
            cell(self.precision.map(|p| 100.0 - p))
        )
        .unwrap();
        writeln!(
            out,
            "{:<12}{:>8}{:>12}",
            "recall",
            cell(self.recall),
            cell(self.recall.map(|r| 100.0 - r))
        )
        .unwrap();
        writeln!(out, "{:<12}{:>8}{:>12}", "far", cell(self.far), "").unwrap();
        writeln!(out, "{:<12}{:>8}{:>12}", "frr", cell(self.frr), "").unwrap();
        writeln!(out, "dataset: {}", self.dataset_digest).unwrap();
        out
    }
}

/// Score every vector with the model and tally the confusion against the
/// ground-truth labels.
pub fn evaluate(model: &LrModel, data: &[FeatureVector]) -> Result<EvalReport, EvalError> {
    if data.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut confusion = ConfusionMatrix::default();
    for v in data {
        let actual = v.label.ok_or_else(|| EvalError::Unlabeled { key: v.key.clone() })?;
        let predicted = model.predict(v)?.label;
        confusion.record(predicted, actual);
    }
    EvalReport::from_confusion(confusion, dataset_digest(data))
}

/// Compare externally produced predictions against ground truth. Both sides
/// are `(key, label)` lists; every truth key needs exactly one prediction
/// and stray predictions are an error, so a silently misaligned file cannot
/// produce a plausible-looking score.
pub fn evaluate_external(
    predictions: &[(String, Label)],
    truth: &[(String, Label)],
) -> Result<EvalReport, EvalError> {
    if truth.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut by_key: BTreeMap<&str, Label> = BTreeMap::new();
    for (i, (key, label)) in predictions.iter().enumerate() {
        if by_key.insert(key, *label).is_some() {
            return Err(EvalError::DuplicateKey {
                key: key.clone(),
                line: i + 2, // 1-based, after the header
            });
        }
    }
    let mut confusion = ConfusionMatrix::default();
    let mut seen = std::collections::BTreeSet::new();
    for (key, actual) in truth {
        let predicted = by_key
            .get(key.as_str())
            .ok_or_else(|| EvalError::MissingPrediction(key.clone()))?;
        confusion.record(*predicted, *actual);
        seen.insert(key.as_str());
    }
    if let Some((stray, _)) = by_key.iter().find(|(k, _)| !seen.contains(*k)) {
        return Err(EvalError::UnmatchedPrediction((*stray).to_owned()));
    }
    EvalReport::from_confusion(confusion, label_pairs_digest(truth))
}

/// Canonical digest of a `(key, label)` list — the hash of its serialized
/// label-file form.
pub fn label_pairs_digest(pairs: &[(String, Label)]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"key,label\n");
    for (key, label) in pairs {
        hasher.update(key.as_bytes());
        hasher.update(if *label == Label::Phishing { b",1\n" } else { b",0\n" });
    }
    hex::encode(hasher.finalize())
}

/// Serialize `(key, label)` pairs as a two-column label file.
pub fn write_label_file(pairs: &[(String, Label)]) -> String {
    let mut out = String::from("key,label\n");
    for (key, label) in pairs {
        writeln!(out, "{key},{}", label.as_f64() as u8).unwrap();
    }
    out
}

/// Parse a two-column `key,label` file; labels are 0 (benign) or 1
/// (phishing). Blank lines and `#` comments are tolerated. Duplicate keys
/// are rejected here, not downstream.
pub fn parse_label_file(text: &str) -> Result<Vec<(String, Label)>, EvalError> {
    let mut pairs: Vec<(String, Label)> = Vec::new();
    let mut lines_of: BTreeMap<String, usize> = BTreeMap::new();
    let mut saw_header = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "key,label" {
                return Err(EvalError::MalformedLabelFile {
                    line: line_no,
                    reason: format!("expected header \"key,label\", got {trimmed:?}"),
                });
            }
            saw_header = true;
            continue;
        }
        let Some((key, label)) = trimmed.split_once(',') else {
            return Err(EvalError::MalformedLabelFile {
                line: line_no,
                reason: "expected two comma-separated fields".to_owned(),
            });
        };
        let label = match label {
            "0" => Label::Benign,
            "1" => Label::Phishing,
            other => {
                return Err(EvalError::MalformedLabelFile {
                    line: line_no,
                    reason: format!("bad label {other:?} (want 0 or 1)"),
                })
            }
        };
        if key.is_empty() {
            return Err(EvalError::MalformedLabelFile {
                line: line_no,
                reason: "empty key".to_owned(),
            });
        }
        match lines_of.entry(key.to_owned()) {
            Entry::Occupied(_) => {
                return Err(EvalError::DuplicateKey {
                    key: key.to_owned(),
                    line: line_no,
                })
            }
            Entry::Vacant(slot) => {
                slot.insert(line_no);
            }
        }
        pairs.push((key.to_owned(), label));
    }
    if !saw_header {
        return Err(EvalError::MalformedLabelFile {
            line: text.lines().count().max(1),
            reason: "missing header".to_owned(),
        });
    }
    Ok(pairs)
}

pub fn load_label_file(path: &Path) -> Result<Vec<(String, Label)>, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_label_file(&text)
}

/// Split a labeled dataset into train and eval parts, stratified by class:
/// each class is shuffled with its own deterministic order (seeded ChaCha8)
/// and cut so the per-class train share deviates from `train_fraction` by
/// less than one example. Both sides always keep at least one example of
/// each class.
pub fn split(
    data: &[FeatureVector],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::InvalidFraction(train_fraction));
    }
    if data.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut benign: Vec<FeatureVector> = Vec::new();
    let mut phishing: Vec<FeatureVector> = Vec::new();
    for v in data {
        match v.label {
            Some(Label::Benign) => benign.push(v.clone()),
            Some(Label::Phishing) => phishing.push(v.clone()),
            None => return Err(EvalError::Unlabeled { key: v.key.clone() }),
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut eval = Vec::new();
    for (label, class) in [(Label::Benign, &mut benign), (Label::Phishing, &mut phishing)] {
        if class.len() < 2 {
            return Err(EvalError::TooSmall {
                label,
                count: class.len(),
            });
        }
        class.shuffle(&mut rng);
        let want = (train_fraction * class.len() as f64).round() as usize;
        let take = want.clamp(1, class.len() - 1);
        train.extend_from_slice(&class[..take]);
        eval.extend_from_slice(&class[take..]);
    }
    Ok((train, eval))
}
