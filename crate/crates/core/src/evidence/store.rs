//! On-disk record/replay store: one directory per URL, keyed by a digest of
//! the canonicalized initial URL, holding `bundle.json` (the evidence, with
//! deterministic serialization) and `meta.json` (recorder version, timestamp,
//! checksum). Append-only and diff-friendly; checksums catch tampering.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

use super::{EvidenceBundle, EvidenceError};

/// Reduce a URL to a stable identity: default scheme, lowercased scheme/host,
/// default ports elided, fragment dropped. Unparseable input (which a valid
/// bundle never has) falls back to the trimmed raw string.
fn canonicalize_url(raw: &str) -> String {
    let trimmed = raw.trim();
    let parsed = match url::Url::parse(trimmed) {
        Ok(u) if u.host_str().is_some() => Some(u),
        _ if !trimmed.contains("://") => url::Url::parse(&format!("http://{trimmed}")).ok(),
        _ => None,
    };
    let Some(u) = parsed.filter(|u| u.host_str().is_some()) else {
        return trimmed.to_owned();
    };
    let mut out = format!("{}://{}", u.scheme(), u.host_str().unwrap_or_default());
    if let Some(port) = u.port() {
        out.push_str(&format!(":{port}"));
    }
    out.push_str(u.path());
    if let Some(q) = u.query() {
        out.push('?');
        out.push_str(q);
    }
    out
}

/// Content-independent store key: hex digest of the canonicalized URL.
pub fn bundle_key(url_initial: &str) -> String {
    hex::encode(Sha256::digest(canonicalize_url(url_initial).as_bytes()))
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreMeta {
    recorder_version: String,
    stored_at: DateTime<Utc>,
    /// Hex SHA-256 of the exact bytes of bundle.json.
    sha256: String,
}

/// Handle to a store root. Opening performs no I/O; directories are created
/// on first write. Reads may run concurrently; writes are serialized by the
/// caller (one writer at a time).
#[derive(Debug, Clone)]
pub struct ReplayStore {
    root: PathBuf,
}

impl ReplayStore {
    pub fn open(root: impl Into<PathBuf>) -> ReplayStore {
        ReplayStore { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn io_err(path: &Path, source: std::io::Error) -> EvidenceError {
        EvidenceError::StoreIo {
            path: path.display().to_string(),
            source,
        }
    }

    /// Persist a bundle; returns its key. Overwrites any previous recording
    /// of the same URL.
    pub fn store(&self, bundle: &EvidenceBundle) -> Result<String, EvidenceError> {
        let key = bundle_key(&bundle.snapshot.url_initial);
        let dir = self.root.join(&key);
        std::fs::create_dir_all(&dir).map_err(|e| Self::io_err(&dir, e))?;
        let bytes = serde_json::to_vec_pretty(bundle).expect("bundle serialization is infallible");
        let bundle_path = dir.join("bundle.json");
        std::fs::write(&bundle_path, &bytes).map_err(|e| Self::io_err(&bundle_path, e))?;
        let meta = StoreMeta {
            recorder_version: env!("CARGO_PKG_VERSION").to_owned(),
            stored_at: Utc::now(),
            sha256: hex::encode(Sha256::digest(&bytes)),
        };
        let meta_path = dir.join("meta.json");
        let meta_bytes = serde_json::to_vec_pretty(&meta).expect("meta serialization");
        std::fs::write(&meta_path, meta_bytes).map_err(|e| Self::io_err(&meta_path, e))?;
        Ok(key)
    }

    pub fn load(&self, url: &str) -> Result<EvidenceBundle, EvidenceError> {
        self.load_by_key(&bundle_key(url))
    }

    pub fn load_by_key(&self, key: &str) -> Result<EvidenceBundle, EvidenceError> {
        let dir = self.root.join(key);
        let bundle_path = dir.join("bundle.json");
        let bytes = match std::fs::read(&bundle_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(EvidenceError::NotRecorded(key.to_owned()))
            }
            Err(e) => return Err(Self::io_err(&bundle_path, e)),
        };
        let corrupt = |reason: String| EvidenceError::StoreCorrupt {
            path: bundle_path.display().to_string(),
            reason,
        };
        let meta_path = dir.join("meta.json");
        let meta_bytes = match std::fs::read(&meta_path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(corrupt("meta.json missing".to_owned()))
            }
            Err(e) => return Err(Self::io_err(&meta_path, e)),
        };
        let meta: StoreMeta = serde_json::from_slice(&meta_bytes)
            .map_err(|e| corrupt(format!("meta.json unreadable: {e}")))?;
        let actual = hex::encode(Sha256::digest(&bytes));
        if actual != meta.sha256 {
            return Err(corrupt(format!(
                "checksum mismatch (recorded {}, actual {actual})",
                meta.sha256
            )));
        }
        serde_json::from_slice(&bytes).map_err(|e| corrupt(format!("bundle.json unreadable: {e}")))
    }

    pub fn contains(&self, url: &str) -> bool {
        self.root.join(bundle_key(url)).join("bundle.json").is_file()
    }

    /// All recorded keys, sorted, so iteration order is reproducible.
    pub fn keys(&self) -> Result<Vec<String>, EvidenceError> {
        let entries = match std::fs::read_dir(&self.root) {
            Ok(e) => e,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(Self::io_err(&self.root, e)),
        };
        let mut keys = Vec::new();
        for entry in entries {
            let entry = entry.map_err(|e| Self::io_err(&self.root, e))?;
            let name = entry.file_name().to_string_lossy().to_string();
            if entry.path().join("bundle.json").is_file() {
                keys.push(name);
            }
        }
        keys.sort();
        Ok(keys)
    }
}
