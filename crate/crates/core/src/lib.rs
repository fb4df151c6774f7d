//! Detection pipeline for web phishing pages that try to look unremarkable:
//! evidence retrieval (WHOIS, search rank, rendered DOM, reputation) with a
//! record/replay store, a fixed 13-feature schema, a from-scratch logistic
//! classifier, and evaluation tooling. Everything after retrieval is
//! deterministic so recorded corpora re-score byte-identically.

pub mod cli;
pub mod domkit;
pub mod evalkit;
pub mod evidence;
pub mod featurizer;
pub mod lrmodel;
mod listfile;
pub mod synthcorpus;
pub mod textmetrics;
pub mod urlkit;
