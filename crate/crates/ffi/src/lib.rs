//! C ABI over the detection library: load a trained model, score evidence
//! bundles (as JSON or straight out of a replay store), extract feature
//! vectors, and compute the text and DOM-skeleton distances.
//!
//! Conventions, mirrored in the generated `include/phishcorr.h`:
//! - Every fallible function returns a [`PcStatus`]; results travel through
//!   out-pointers that are written only on success.
//! - On failure the calling thread's error message is replaced; fetch it
//!   with `pc_last_error_message` and release it with `pc_string_free`.
//! - [`PcModel`] is an opaque handle owned by the caller; release it with
//!   `pc_model_free`. A handle may be shared across threads for prediction.
//! - All strings cross the boundary as NUL-terminated UTF-8. Strings the
//!   library allocates must be released with `pc_string_free`, never free().
//! - Labels cross as an int: 0 benign, 1 phishing.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use phishcorr::domkit::{extract_skeleton, skeleton_similarity};
use phishcorr::evidence::store::ReplayStore;
use phishcorr::evidence::{EvidenceBundle, Label};
use phishcorr::featurizer::{extract_features, FeatureConfig};
use phishcorr::lrmodel::LrModel;
use phishcorr::textmetrics::{levenshtein, normalized_similarity};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    /// Success; out-pointers are filled in.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input could not be parsed or failed validation.
    BadInput = 3,
    /// A file or store could not be read.
    IoError = 4,
    /// The model rejected the input (schema mismatch or similar).
    ModelError = 5,
    /// The library panicked; the process state is still sound.
    InternalError = 6,
}

/// A loaded classifier plus the feature-extraction configuration it is
/// applied with. Opaque to C.
pub struct PcModel {
    model: LrModel,
    config: FeatureConfig,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    let stored = CString::new(message.clone())
        .unwrap_or_else(|_| CString::new(message.replace('\0', "?")).expect("NULs replaced"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(stored));
}

fn guarded(body: impl FnOnce() -> PcStatus) -> PcStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic; see stderr for the panic message");
            PcStatus::InternalError
        }
    }
}

/// Read a required string argument; records the error on failure.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated buffer.
unsafe fn required_str<'a>(name: &str, ptr: *const c_char) -> Result<&'a str, PcStatus> {
    if ptr.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(PcStatus::NullArgument);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        PcStatus::InvalidUtf8
    })
}

fn require_out<T>(name: &str, ptr: *mut T) -> Result<(), PcStatus> {
    if ptr.is_null() {
        set_error(format!("{name} must not be null"));
        return Err(PcStatus::NullArgument);
    }
    Ok(())
}

fn label_code(label: Label) -> i32 {
    match label {
        Label::Benign => 0,
        Label::Phishing => 1,
    }
}

/// Library version as a static NUL-terminated string; never freed.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the calling thread's most recent failure, or null if none.
/// The caller owns the returned string; release it with `pc_string_free`.
#[no_mangle]
pub extern "C" fn pc_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Release a string allocated by this library. Null is a no-op.
///
/// # Safety
/// `s` must be a pointer previously returned by this library and not yet
/// freed.
#[no_mangle]
pub unsafe extern "C" fn pc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Edit distance between two UTF-8 strings, counted in Unicode scalars.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out_distance` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_levenshtein(
    a: *const c_char,
    b: *const c_char,
    out_distance: *mut usize,
) -> PcStatus {
    guarded(|| {
        let (a, b) = match (required_str("a", a), required_str("b", b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if let Err(s) = require_out("out_distance", out_distance) {
            return s;
        }
        *out_distance = levenshtein(a, b);
        PcStatus::Ok
    })
}

/// Length-normalized string similarity in [0, 1]; 1.0 means equal.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out_similarity` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_normalized_similarity(
    a: *const c_char,
    b: *const c_char,
    out_similarity: *mut f64,
) -> PcStatus {
    guarded(|| {
        let (a, b) = match (required_str("a", a), required_str("b", b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if let Err(s) = require_out("out_similarity", out_similarity) {
            return s;
        }
        *out_similarity = normalized_similarity(a, b);
        PcStatus::Ok
    })
}

/// Structural similarity of two HTML documents in [0, 1], compared on
/// their element-tag skeletons (text, attributes, and comments ignored).
///
/// # Safety
/// `html_a` and `html_b` must be NUL-terminated; `out_similarity` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn pc_skeleton_similarity(
    html_a: *const c_char,
    html_b: *const c_char,
    out_similarity: *mut f64,
) -> PcStatus {
    guarded(|| {
        let (a, b) = match (required_str("html_a", html_a), required_str("html_b", html_b)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if let Err(s) = require_out("out_similarity", out_similarity) {
            return s;
        }
        let (skel_a, skel_b) = match (extract_skeleton(a), extract_skeleton(b)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => {
                set_error(format!("cannot derive a document skeleton: {e}"));
                return PcStatus::BadInput;
            }
        };
        *out_similarity = skeleton_similarity(&skel_a, &skel_b);
        PcStatus::Ok
    })
}

/// Extract the 13-value feature vector from an evidence bundle given as
/// JSON. On success `*out_vector_json` holds a JSON object (release with
/// `pc_string_free`).
///
/// # Safety
/// `bundle_json` must be NUL-terminated; `out_vector_json` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_extract_features_json(
    bundle_json: *const c_char,
    out_vector_json: *mut *mut c_char,
) -> PcStatus {
    guarded(|| {
        let json = match required_str("bundle_json", bundle_json) {
            Ok(j) => j,
            Err(s) => return s,
        };
        if let Err(s) = require_out("out_vector_json", out_vector_json) {
            return s;
        }
        let bundle: EvidenceBundle = match serde_json::from_str(json) {
            Ok(b) => b,
            Err(e) => {
                set_error(format!("bundle JSON does not parse: {e}"));
                return PcStatus::BadInput;
            }
        };
        let vector = match extract_features(&bundle, &FeatureConfig::default()) {
            Ok(v) => v,
            Err(e) => {
                set_error(format!("feature extraction failed: {e}"));
                return PcStatus::BadInput;
            }
        };
        let body = serde_json::to_string(&vector).expect("vectors serialize");
        *out_vector_json = CString::new(body).expect("JSON has no NULs").into_raw();
        PcStatus::Ok
    })
}

/// Load a trained model from a model file written by the `train` command.
/// On success `*out_model` owns the handle; release with `pc_model_free`.
///
/// # Safety
/// `path` must be NUL-terminated; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_model_load(
    path: *const c_char,
    out_model: *mut *mut PcModel,
) -> PcStatus {
    guarded(|| {
        let path = match required_str("path", path) {
            Ok(p) => p,
            Err(s) => return s,
        };
        if let Err(s) = require_out("out_model", out_model) {
            return s;
        }
        match LrModel::load(std::path::Path::new(path)) {
            Ok(model) => {
                let handle = Box::new(PcModel {
                    model,
                    config: FeatureConfig::default(),
                });
                *out_model = Box::into_raw(handle);
                PcStatus::Ok
            }
            Err(e) => {
                set_error(format!("cannot load model from {path}: {e}"));
                PcStatus::IoError
            }
        }
    })
}

/// Release a model handle. Null is a no-op.
///
/// # Safety
/// `model` must be a handle from `pc_model_load` and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_model_free(model: *mut PcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn predict_into(
    handle: &PcModel,
    bundle: &EvidenceBundle,
    out_probability: *mut f64,
    out_label: *mut i32,
) -> PcStatus {
    let vector = match extract_features(bundle, &handle.config) {
        Ok(v) => v,
        Err(e) => {
            set_error(format!("feature extraction failed: {e}"));
            return PcStatus::BadInput;
        }
    };
    match handle.model.predict(&vector) {
        Ok(prediction) => {
            *out_probability = prediction.probability;
            *out_label = label_code(prediction.label);
            PcStatus::Ok
        }
        Err(e) => {
            set_error(format!("prediction failed: {e}"));
            PcStatus::ModelError
        }
    }
}

/// Score an evidence bundle given as JSON. Writes the phishing probability
/// and the decided label (0 benign, 1 phishing).
///
/// # Safety
/// `model` must be a live handle; `bundle_json` must be NUL-terminated;
/// both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_model_predict_bundle_json(
    model: *const PcModel,
    bundle_json: *const c_char,
    out_probability: *mut f64,
    out_label: *mut i32,
) -> PcStatus {
    guarded(|| {
        if model.is_null() {
            set_error("model must not be null");
            return PcStatus::NullArgument;
        }
        let json = match required_str("bundle_json", bundle_json) {
            Ok(j) => j,
            Err(s) => return s,
        };
        if let Err(s) =
            require_out("out_probability", out_probability).and_then(|()| require_out("out_label", out_label))
        {
            return s;
        }
        let bundle: EvidenceBundle = match serde_json::from_str(json) {
            Ok(b) => b,
            Err(e) => {
                set_error(format!("bundle JSON does not parse: {e}"));
                return PcStatus::BadInput;
            }
        };
        predict_into(&*model, &bundle, out_probability, out_label)
    })
}

/// Score a bundle recorded in a replay store, addressed by its store key.
///
/// # Safety
/// `model` must be a live handle; `store_root` and `key` must be
/// NUL-terminated; both out-pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_model_predict_stored(
    model: *const PcModel,
    store_root: *const c_char,
    key: *const c_char,
    out_probability: *mut f64,
    out_label: *mut i32,
) -> PcStatus {
    guarded(|| {
        if model.is_null() {
            set_error("model must not be null");
            return PcStatus::NullArgument;
        }
        let (root, key) = match (required_str("store_root", store_root), required_str("key", key)) {
            (Ok(r), Ok(k)) => (r, k),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        if let Err(s) =
            require_out("out_probability", out_probability).and_then(|()| require_out("out_label", out_label))
        {
            return s;
        }
        let bundle = match ReplayStore::open(root).load_by_key(key) {
            Ok(b) => b,
            Err(e) => {
                set_error(format!("cannot load bundle {key} from {root}: {e}"));
                return PcStatus::IoError;
            }
        };
        predict_into(&*model, &bundle, out_probability, out_label)
    })
}
