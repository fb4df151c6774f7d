//! Command-line frontend wiring the pipeline stages end to end:
//! `fetch` evidence into a replay store (live or replayed), `extract` a
//! feature CSV from it, `train` a model, `predict` single pages, `evaluate`
//! a labeled set, `analyze` feature correlations, `domsim` two HTML files,
//! and `synth` a synthetic corpus.
//!
//! Conventions:
//! - Replay is the default everywhere; network use requires an explicit
//!   `--live`, so nothing in a test or script talks to the outside world by
//!   accident.
//! - Exit codes: 0 success, 1 usage error, 2 data error (bad or missing
//!   input), 3 service error (live dependency unreachable or throttled).
//! - Every command that writes a file output also writes one run manifest
//!   next to it (`<output>.manifest.json`, or `manifest.json` inside an
//!   output directory) recording command, config digest, paths, mode, and
//!   timestamps. Stdout-only commands write none.
//! - All randomness flows from explicit `--seed`/`--split-seed` flags;
//!   rerunning any replay-mode command reproduces its primary outputs
//!   byte for byte (manifests differ only in timestamps).
//! - Service API keys come only from the environment (`RANK_API_KEY`,
//!   `REPUTATION_API_KEY`); a missing key degrades to a recorded absence.

use chrono::{DateTime, Utc};
use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use crate::domkit::{self, extract_skeleton, skeleton_similarity};
use crate::evalkit::{self, EvalError};
use crate::evidence::store::ReplayStore;
use crate::evidence::{
    EvidenceError, HttpRankClient, HttpReputationClient, Label, LiveFetcher, RendererClient,
};
use crate::featurizer::{self, FeatureConfig, FeatureError};
use crate::lrmodel::{self, LrError, LrModel, TrainConfig};
use crate::synthcorpus::{self, CorpusConfig, CorpusError};
use crate::urlkit::{BenignHosts, SuffixRules};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_SERVICE: i32 = 3;

/// A command failure carrying the originating module and the exit class.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure {
        module: &'static str,
        message: String,
        code: i32,
    },
}

impl CliError {
    fn data(module: &'static str, message: impl Into<String>) -> CliError {
        CliError::Failure {
            module,
            message: message.into(),
            code: EXIT_DATA,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Failure { code, .. } => *code,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Failure { module, message, .. } => write!(f, "{module}: {message}"),
        }
    }
}

impl From<EvidenceError> for CliError {
    fn from(e: EvidenceError) -> CliError {
        let code = match &e {
            // the remote side is down, slow, or throttling us
            EvidenceError::FetchTimeout { .. }
            | EvidenceError::RendererUnavailable(_)
            | EvidenceError::HttpError { .. }
            | EvidenceError::WhoisUnavailable(_)
            | EvidenceError::RankServiceUnavailable(_)
            | EvidenceError::QuotaExceeded
            | EvidenceError::ReputationServiceUnavailable(_) => EXIT_SERVICE,
            // the inputs or recordings are wrong
            EvidenceError::NoRecord(_)
            | EvidenceError::NotRecorded(_)
            | EvidenceError::StoreCorrupt { .. }
            | EvidenceError::StoreIo { .. } => EXIT_DATA,
        };
        CliError::Failure {
            module: "evidence",
            message: e.to_string(),
            code,
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> CliError {
        CliError::data("featurizer", e.to_string())
    }
}

impl From<LrError> for CliError {
    fn from(e: LrError) -> CliError {
        CliError::data("lrmodel", e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> CliError {
        CliError::data("evalkit", e.to_string())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> CliError {
        CliError::data("synthcorpus", e.to_string())
    }
}

/// Record of one command run, written next to the command's output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub mode: String,
    pub tool_version: String,
    /// Digest of the `config` value, so runs are comparable at a glance.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// Command-specific summary (counts, digests, training stats).
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    pub detail: serde_json::Value,
}

/// Manifests sit beside their output: `<file>.manifest.json` for file
/// outputs, `manifest.json` inside directory outputs.
fn manifest_path_for(output: &Path) -> PathBuf {
    if output.is_dir() {
        output.join("manifest.json")
    } else {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

fn write_manifest(
    command: &str,
    mode: &str,
    config: serde_json::Value,
    inputs: Vec<String>,
    outputs: Vec<String>,
    primary_output: &Path,
    started_at: DateTime<Utc>,
    detail: serde_json::Value,
) -> Result<PathBuf, CliError> {
    let config_text = serde_json::to_string(&config).expect("config serializes");
    let manifest = RunManifest {
        command: command.to_owned(),
        mode: mode.to_owned(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        config_digest: hex::encode(Sha256::digest(config_text.as_bytes())),
        config,
        inputs,
        outputs,
        started_at,
        finished_at: Utc::now(),
        detail,
    };
    let path = manifest_path_for(primary_output);
    let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, body + "\n")
        .map_err(|e| CliError::data("cli", format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

/// One URL per line; optional `\t0`/`\t1` (or `\tbenign`/`\tphishing`)
/// label suffix; `#` comments and blank lines ignored.
fn parse_url_list(text: &str) -> Result<Vec<(String, Option<Label>)>, CliError> {
    let mut jobs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (url, label) = match trimmed.split_once('\t') {
            None => (trimmed, None),
            Some((url, tag)) => {
                let label = match tag.trim().to_ascii_lowercase().as_str() {
                    "0" | "benign" => Label::Benign,
                    "1" | "phishing" => Label::Phishing,
                    other => {
                        return Err(CliError::data(
                            "cli",
                            format!("line {}: bad label {other:?} (want 0/1 or benign/phishing)", i + 1),
                        ))
                    }
                };
                (url, Some(label))
            }
        };
        jobs.push((url.to_owned(), label));
    }
    Ok(jobs)
}

/// Five comma-separated trend proportions, e.g. `0.2,0.2,0.2,0.2,0.2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendMix(pub [f64; 5]);

impl FromStr for TrendMix {
    type Err = String;

    fn from_str(s: &str) -> Result<TrendMix, String> {
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 5 {
            return Err(format!("expected 5 comma-separated proportions, got {}", parts.len()));
        }
        let mut mix = [0.0; 5];
        for (slot, part) in mix.iter_mut().zip(parts) {
            *slot = part
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("bad proportion {part:?}: {e}"))?;
        }
        Ok(TrendMix(mix))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "phishcorr",
    version,
    about = "Phishing page detection from correlated page, WHOIS, rank, and reputation evidence",
    subcommand_required = true,
    arg_required_else_help = true
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gather evidence bundles for URLs into a replay store
    Fetch(FetchArgs),
    /// Turn a replay store into a feature CSV
    Extract(ExtractArgs),
    /// Fit the classifier on a feature CSV and save the model
    Train(TrainArgs),
    /// Score one recorded page with a trained model
    Predict(PredictArgs),
    /// Score a labeled feature CSV and report the error rates
    Evaluate(EvaluateArgs),
    /// Pairwise feature/label correlation report for a feature CSV
    Analyze(AnalyzeArgs),
    /// DOM-skeleton similarity of two HTML files
    Domsim(DomsimArgs),
    /// Generate a deterministic synthetic corpus into a replay store
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct FetchArgs {
    /// Replay store directory
    #[arg(long)]
    store: PathBuf,
    /// URLs to fetch (alternative or in addition to --urls)
    urls: Vec<String>,
    /// File with one URL per line (optional tab-separated 0/1 label)
    #[arg(long = "urls", value_name = "FILE")]
    url_file: Option<PathBuf>,
    /// Fetch from the network and record into the store
    #[arg(long)]
    live: bool,
    /// Serve everything from the store; fail on unrecorded URLs (default)
    #[arg(long, conflicts_with = "live")]
    replay: bool,
    /// Parallel fetch workers in live mode
    #[arg(long, default_value_t = 4)]
    workers: usize,
    /// Renderer endpoint (required with --live)
    #[arg(long, value_name = "URL")]
    renderer: Option<String>,
    /// WHOIS server as host:port
    #[arg(long, default_value = "whois.iana.org:43")]
    whois: String,
    /// Search-rank service endpoint (key via RANK_API_KEY)
    #[arg(long, value_name = "URL")]
    rank_endpoint: Option<String>,
    /// Reputation service endpoint (key via REPUTATION_API_KEY)
    #[arg(long, value_name = "URL")]
    reputation_endpoint: Option<String>,
    /// Per-request timeout in seconds (live mode)
    #[arg(long, default_value_t = 10)]
    timeout_secs: u64,
}

/// Flags shared by every command that extracts features.
#[derive(Args, Debug)]
struct FeatureFlags {
    /// Ignore reputation evidence (the feature stays 0)
    #[arg(long)]
    no_reputation: bool,
    /// Multi-label public-suffix entries, one per line
    #[arg(long, value_name = "FILE")]
    suffixes: Option<PathBuf>,
    /// Benign hosting services, one host per line
    #[arg(long, value_name = "FILE")]
    benign_hosts: Option<PathBuf>,
    /// Fake-error phrases, one per line
    #[arg(long, value_name = "FILE")]
    validity_keywords: Option<PathBuf>,
    /// Captcha class/id/script markers, one per line
    #[arg(long, value_name = "FILE")]
    captcha_markers: Option<PathBuf>,
}

impl FeatureFlags {
    fn to_config(&self) -> Result<FeatureConfig, CliError> {
        let mut cfg = FeatureConfig::default();
        cfg.include_reputation = !self.no_reputation;
        let file_err = |path: &Path, e: std::io::Error| {
            CliError::data("cli", format!("cannot read {}: {e}", path.display()))
        };
        if let Some(path) = &self.suffixes {
            cfg.suffix_rules = SuffixRules::load(path).map_err(|e| file_err(path, e))?;
        }
        if let Some(path) = &self.benign_hosts {
            cfg.benign_hosts = BenignHosts::load(path).map_err(|e| file_err(path, e))?;
        }
        if let Some(path) = &self.validity_keywords {
            cfg.content
                .load_validity_keywords(path)
                .map_err(|e| file_err(path, e))?;
        }
        if let Some(path) = &self.captcha_markers {
            cfg.content
                .load_captcha_markers(path)
                .map_err(|e| file_err(path, e))?;
        }
        Ok(cfg)
    }

    fn echo(&self) -> serde_json::Value {
        serde_json::json!({
            "no_reputation": self.no_reputation,
            "suffixes": self.suffixes.as_ref().map(|p| p.display().to_string()),
            "benign_hosts": self.benign_hosts.as_ref().map(|p| p.display().to_string()),
            "validity_keywords": self.validity_keywords.as_ref().map(|p| p.display().to_string()),
            "captcha_markers": self.captcha_markers.as_ref().map(|p| p.display().to_string()),
        })
    }
}

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Replay store directory to read
    #[arg(long)]
    store: PathBuf,
    /// Feature CSV to write
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    features: FeatureFlags,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Labeled feature CSV
    #[arg(long)]
    data: PathBuf,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
    /// Gradient-descent step size
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    /// Epoch cap
    #[arg(long, default_value_t = 5000)]
    epochs: usize,
    /// Stop when the loss improves by less than this
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
    /// Ridge penalty strength (0 disables)
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    /// Decision threshold stored with the model
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Run seed recorded in the model for provenance
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Train on this stratified fraction and write the rest to --holdout-out
    #[arg(long, requires = "holdout_out")]
    train_fraction: Option<f64>,
    /// Seed for the stratified split shuffle
    #[arg(long, default_value_t = 7)]
    split_seed: u64,
    /// Where to write the holdout rows (with --train-fraction)
    #[arg(long, requires = "train_fraction")]
    holdout_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("subject").required(true).args(["url", "key"])))]
struct PredictArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Replay store holding the page's evidence bundle
    #[arg(long)]
    store: PathBuf,
    /// Look the page up by its recorded URL
    #[arg(long)]
    url: Option<String>,
    /// Look the page up by its store key
    #[arg(long)]
    key: Option<String>,
    #[command(flatten)]
    features: FeatureFlags,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Trained model file
    #[arg(long)]
    model: PathBuf,
    /// Labeled feature CSV
    #[arg(long)]
    data: PathBuf,
    /// Also write the report as JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    /// Feature CSV (labels required only for the label column)
    #[arg(long)]
    data: PathBuf,
    /// Also write the correlation matrix as JSON here
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DomsimArgs {
    /// First HTML file
    html_a: PathBuf,
    /// Second HTML file
    html_b: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Replay store directory to write
    #[arg(long)]
    store: PathBuf,
    /// Corpus seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Benign page count
    #[arg(long, default_value_t = 100)]
    benign: usize,
    /// Phishing page count
    #[arg(long, default_value_t = 100)]
    phish: usize,
    /// Phishing share per trend T1..T5, comma separated
    #[arg(long, default_value = "0.2,0.2,0.2,0.2,0.2")]
    trend_mix: TrendMix,
    /// Fraction of benign pages parked on hosting services
    #[arg(long, default_value_t = 0.2)]
    benign_host_fraction: f64,
    /// Fraction of benign pages that are ordinary login forms
    #[arg(long, default_value_t = 0.1)]
    benign_login_fraction: f64,
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            // clap routes help to stdout and errors to stderr by itself
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fetch(args) => cmd_fetch(args),
        Command::Extract(args) => cmd_extract(args),
        Command::Train(args) => cmd_train(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Domsim(args) => cmd_domsim(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::data("cli", format!("cannot read {}: {e}", path.display())))
}

fn fetch_jobs(args: &FetchArgs) -> Result<Vec<(String, Option<Label>)>, CliError> {
    let mut jobs: Vec<(String, Option<Label>)> =
        args.urls.iter().map(|u| (u.clone(), None)).collect();
    if let Some(path) = &args.url_file {
        jobs.extend(parse_url_list(&read_text(path)?)?);
    }
    if jobs.is_empty() {
        return Err(CliError::Usage(
            "fetch needs URLs, either positional or via --urls".to_owned(),
        ));
    }
    Ok(jobs)
}

fn cmd_fetch(args: FetchArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let jobs = fetch_jobs(&args)?;
    let store = ReplayStore::open(&args.store);

    if !args.live {
        // replay: every URL must already be recorded
        for (url, _) in &jobs {
            let bundle = store.load(url)?;
            println!(
                "recorded {} {} ({})",
                crate::evidence::store::bundle_key(url),
                url,
                bundle.snapshot.fetched_at.format("%Y-%m-%d")
            );
        }
        return Ok(());
    }

    let Some(renderer_endpoint) = &args.renderer else {
        return Err(CliError::Usage("--live requires --renderer".to_owned()));
    };
    let renderer = RendererClient::new(renderer_endpoint)?;
    let mut fetcher = LiveFetcher::new(renderer, args.whois.clone())
        .with_timeout(Duration::from_secs(args.timeout_secs));
    if let Some(endpoint) = &args.rank_endpoint {
        let client = HttpRankClient::from_env(endpoint.clone(), SuffixRules::default())?;
        fetcher = fetcher.with_rank(Box::new(client));
    }
    if let Some(endpoint) = &args.reputation_endpoint {
        let client = HttpReputationClient::from_env(endpoint.clone())?;
        fetcher = fetcher.with_reputation(Box::new(client));
    }

    std::fs::create_dir_all(&args.store)
        .map_err(|e| CliError::data("cli", format!("cannot create store: {e}")))?;
    let outcomes = fetcher.collect_many(&jobs, &store, args.workers);
    let mut stored = Vec::new();
    let mut first_failure: Option<CliError> = None;
    for outcome in outcomes {
        match outcome.result {
            Ok(key) => {
                println!("stored {key} {}", outcome.url);
                stored.push(outcome.url);
            }
            Err(e) => {
                eprintln!("failed {}: {e}", outcome.url);
                if first_failure.is_none() {
                    first_failure = Some(e.into());
                }
            }
        }
    }
    write_manifest(
        "fetch",
        "live",
        serde_json::json!({
            "workers": args.workers,
            "renderer": renderer_endpoint,
            "whois": args.whois,
            "rank_endpoint": args.rank_endpoint,
            "reputation_endpoint": args.reputation_endpoint,
            "timeout_secs": args.timeout_secs,
        }),
        jobs.iter().map(|(u, _)| u.clone()).collect(),
        vec![args.store.display().to_string()],
        &args.store,
        started,
        serde_json::json!({ "stored": stored.len() }),
    )?;
    match first_failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn cmd_extract(args: ExtractArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let cfg = args.features.to_config()?;
    let store = ReplayStore::open(&args.store);
    let keys = store.keys()?;
    if keys.is_empty() {
        return Err(CliError::data(
            "evidence",
            format!("store {} holds no bundles", args.store.display()),
        ));
    }
    let mut vectors = Vec::with_capacity(keys.len());
    for key in &keys {
        let bundle = store.load_by_key(key)?;
        vectors.push(featurizer::extract_features(&bundle, &cfg)?);
    }
    featurizer::write_csv_file(&args.out, &vectors)?;
    let digest = featurizer::dataset_digest(&vectors);
    write_manifest(
        "extract",
        "replay",
        args.features.echo(),
        vec![args.store.display().to_string()],
        vec![args.out.display().to_string()],
        &args.out,
        started,
        serde_json::json!({ "rows": vectors.len(), "dataset_digest": digest }),
    )?;
    println!("extracted {} rows -> {} (dataset {digest})", vectors.len(), args.out.display());
    Ok(())
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let all = featurizer::read_csv_file(&args.data)?;
    let config = TrainConfig {
        learning_rate: args.learning_rate,
        max_epochs: args.epochs,
        tolerance: args.tolerance,
        l2: args.l2,
        threshold: args.threshold,
        seed: args.seed,
    };

    let (train_rows, holdout_path) = match args.train_fraction {
        None => (all, None),
        Some(fraction) => {
            let holdout_out = args.holdout_out.as_ref().expect("clap enforces the pair");
            let (train_rows, holdout) = evalkit::split(&all, fraction, args.split_seed)?;
            featurizer::write_csv_file(holdout_out, &holdout)?;
            println!(
                "split {} train / {} holdout -> {}",
                train_rows.len(),
                holdout.len(),
                holdout_out.display()
            );
            (train_rows, Some(holdout_out.clone()))
        }
    };

    let model = lrmodel::train(&train_rows, &config)?;
    model.save(&args.out)?;
    println!(
        "trained on {} rows: {} epochs, final loss {:.6} -> {}",
        train_rows.len(),
        model.trained_epochs,
        model.final_loss,
        args.out.display()
    );
    let mut outputs = vec![args.out.display().to_string()];
    if let Some(p) = &holdout_path {
        outputs.push(p.display().to_string());
    }
    write_manifest(
        "train",
        "replay",
        serde_json::json!({
            "learning_rate": args.learning_rate,
            "epochs": args.epochs,
            "tolerance": args.tolerance,
            "l2": args.l2,
            "threshold": args.threshold,
            "seed": args.seed,
            "train_fraction": args.train_fraction,
            "split_seed": args.split_seed,
        }),
        vec![args.data.display().to_string()],
        outputs,
        &args.out,
        started,
        serde_json::json!({
            "rows": train_rows.len(),
            "trained_epochs": model.trained_epochs,
            "final_loss": model.final_loss,
        }),
    )?;
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<(), CliError> {
    let cfg = args.features.to_config()?;
    let model = LrModel::load(&args.model)?;
    let store = ReplayStore::open(&args.store);
    let bundle = match (&args.url, &args.key) {
        (Some(url), _) => store.load(url)?,
        (_, Some(key)) => store.load_by_key(key)?,
        _ => unreachable!("clap enforces the group"),
    };
    let vector = featurizer::extract_features(&bundle, &cfg)?;
    let prediction = model.predict(&vector)?;
    println!("{} p={:.2}", prediction.label, prediction.probability);
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let model = LrModel::load(&args.model)?;
    let data = featurizer::read_csv_file(&args.data)?;
    let report = evalkit::evaluate(&model, &data)?;
    print!("{}", report.render_text());
    println!("report: {}", report.digest());
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_json() + "\n")
            .map_err(|e| CliError::data("cli", format!("cannot write {}: {e}", out.display())))?;
        write_manifest(
            "evaluate",
            "replay",
            serde_json::json!({ "model": args.model.display().to_string() }),
            vec![
                args.model.display().to_string(),
                args.data.display().to_string(),
            ],
            vec![out.display().to_string()],
            out,
            started,
            serde_json::json!({ "report_digest": report.digest() }),
        )?;
    }
    Ok(())
}

/// Correlation matrix as fixed-width text; absent cells (constant columns)
/// print as a dash.
fn render_correlation(report: &featurizer::CorrelationReport) -> String {
    let mut out = String::new();
    let width = report.names.iter().map(|n| n.len()).max().unwrap_or(8) + 2;
    write!(out, "{:>width$}", "").unwrap();
    for name in &report.names {
        write!(out, " {name:>7.7}").unwrap();
    }
    out.push('\n');
    for (i, name) in report.names.iter().enumerate() {
        write!(out, "{name:>width$}").unwrap();
        for j in 0..report.names.len() {
            match report.cells[i][j] {
                Some(r) => write!(out, " {r:>7.2}").unwrap(),
                None => write!(out, " {:>7}", "-").unwrap(),
            }
        }
        out.push('\n');
    }
    let label_row = featurizer::CorrelationReport::LABEL_INDEX;
    let mut ranked: Vec<(usize, f64)> = (0..label_row)
        .filter_map(|i| report.cells[label_row][i].map(|r| (i, r)))
        .collect();
    ranked.sort_by(|a, b| b.1.abs().partial_cmp(&a.1.abs()).unwrap());
    out.push_str("strongest label correlates:\n");
    for (i, r) in ranked.iter().take(5) {
        writeln!(out, "  {:<26} {r:+.3}", report.names[*i]).unwrap();
    }
    out
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let data = featurizer::read_csv_file(&args.data)?;
    let report = featurizer::correlation_report(&data)?;
    print!("{}", render_correlation(&report));
    if let Some(out) = &args.out {
        let body = serde_json::to_string_pretty(&report).expect("report serializes");
        std::fs::write(out, body + "\n")
            .map_err(|e| CliError::data("cli", format!("cannot write {}: {e}", out.display())))?;
        write_manifest(
            "analyze",
            "replay",
            serde_json::json!({}),
            vec![args.data.display().to_string()],
            vec![out.display().to_string()],
            out,
            started,
            serde_json::json!({ "rows": data.len() }),
        )?;
    }
    Ok(())
}

fn cmd_domsim(args: DomsimArgs) -> Result<(), CliError> {
    let parse = |path: &Path| -> Result<domkit::DomSkeleton, CliError> {
        extract_skeleton(&read_text(path)?)
            .map_err(|e| CliError::data("domkit", format!("{}: {e}", path.display())))
    };
    let a = parse(&args.html_a)?;
    let b = parse(&args.html_b)?;
    println!("{:.4}", skeleton_similarity(&a, &b));
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let config = CorpusConfig {
        seed: args.seed,
        benign_count: args.benign,
        phish_count: args.phish,
        trend_mix: args.trend_mix.0,
        benign_host_fraction: args.benign_host_fraction,
        benign_login_fraction: args.benign_login_fraction,
    };
    let corpus = synthcorpus::generate(&config)?;
    std::fs::create_dir_all(&args.store)
        .map_err(|e| CliError::data("cli", format!("cannot create store: {e}")))?;
    let store = ReplayStore::open(&args.store);
    let keys = corpus.write_to_store(&store)?;
    println!(
        "generated {} bundles ({} benign, {} phishing) -> {}",
        keys.len(),
        corpus.breakdown.benign,
        corpus.breakdown.phishing,
        args.store.display()
    );
    for (trend, count) in &corpus.breakdown.trend_counts {
        println!("  {trend}: {count}");
    }
    write_manifest(
        "synth",
        "replay",
        serde_json::to_value(&config).expect("config serializes"),
        Vec::new(),
        vec![args.store.display().to_string()],
        &args.store,
        started,
        serde_json::to_value(&corpus.breakdown).expect("breakdown serializes"),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        run(args.iter().map(|s| s.to_string()))
    }

    fn tmp() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn url_lists_accept_labels_and_comments() {
        let text = "# corpus\nhttps://a.example/\nhttps://b.example/\t1\nhttps://c.example/\tbenign\n\n";
        let jobs = parse_url_list(text).unwrap();
        assert_eq!(
            jobs,
            vec![
                ("https://a.example/".to_owned(), None),
                ("https://b.example/".to_owned(), Some(Label::Phishing)),
                ("https://c.example/".to_owned(), Some(Label::Benign)),
            ]
        );
        let err = parse_url_list("https://a.example/\tmaybe\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn trend_mix_parses_five_proportions() {
        assert_eq!(
            "0.5,0.2,0.1,0.1,0.1".parse::<TrendMix>().unwrap(),
            TrendMix([0.5, 0.2, 0.1, 0.1, 0.1])
        );
        assert!("0.5,0.5".parse::<TrendMix>().is_err());
        assert!("a,b,c,d,e".parse::<TrendMix>().is_err());
    }

    #[test]
    fn usage_problems_exit_one_even_though_clap_prefers_two() {
        assert_eq!(run_args(&["phishcorr", "no-such-command"]), EXIT_USAGE);
        assert_eq!(run_args(&["phishcorr", "extract"]), EXIT_USAGE); // missing args
        assert_eq!(run_args(&["phishcorr"]), EXIT_USAGE);
        assert_eq!(run_args(&["phishcorr", "--help"]), EXIT_OK);
        assert_eq!(run_args(&["phishcorr", "fetch", "--help"]), EXIT_OK);
    }

    #[test]
    fn replay_fetch_of_unrecorded_urls_is_a_data_error() {
        let dir = tmp();
        let store = dir.path().join("store");
        let code = run_args(&[
            "phishcorr",
            "fetch",
            "--store",
            store.to_str().unwrap(),
            "https://never-recorded.example/",
        ]);
        assert_eq!(code, EXIT_DATA);
    }

    #[test]
    fn live_fetch_without_renderer_is_a_usage_error() {
        let dir = tmp();
        let code = run_args(&[
            "phishcorr",
            "fetch",
            "--live",
            "--store",
            dir.path().to_str().unwrap(),
            "https://x.example/",
        ]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn errors_are_prefixed_with_the_module_name() {
        let e = CliError::from(EvidenceError::NotRecorded("abc".to_owned()));
        assert_eq!(e.to_string(), "evidence: nothing recorded for abc");
        assert_eq!(e.exit_code(), EXIT_DATA);
        let e = CliError::from(EvidenceError::QuotaExceeded);
        assert_eq!(e.exit_code(), EXIT_SERVICE);
    }

    /// The whole pipeline, in process: synth → extract → train (with a
    /// holdout) → evaluate → predict → analyze → domsim.
    #[test]
    fn pipeline_round_trip_through_the_cli() {
        let dir = tmp();
        let store = dir.path().join("store");
        let csv = dir.path().join("features.csv");
        let holdout = dir.path().join("holdout.csv");
        let model = dir.path().join("model.json");
        let report = dir.path().join("report.json");
        let s = |p: &PathBuf| p.to_str().unwrap().to_owned();

        assert_eq!(
            run_args(&[
                "phishcorr", "synth", "--store", &s(&store), "--seed", "5", "--benign", "30",
                "--phish", "30",
            ]),
            EXIT_OK
        );
        assert!(store.join("manifest.json").is_file());

        assert_eq!(
            run_args(&["phishcorr", "extract", "--store", &s(&store), "--out", &s(&csv)]),
            EXIT_OK
        );
        assert!(csv.is_file());
        assert!(dir.path().join("features.csv.manifest.json").is_file());

        assert_eq!(
            run_args(&[
                "phishcorr", "train", "--data", &s(&csv), "--out", &s(&model),
                "--train-fraction", "0.8", "--holdout-out", &s(&holdout),
            ]),
            EXIT_OK
        );
        assert!(model.is_file());
        assert!(holdout.is_file());

        assert_eq!(
            run_args(&[
                "phishcorr", "evaluate", "--model", &s(&model), "--data", &s(&holdout), "--out",
                &s(&report),
            ]),
            EXIT_OK
        );
        let report_json = std::fs::read_to_string(&report).unwrap();
        assert!(report_json.contains("\"accuracy\""));

        // predict a recorded page by URL (first key in the store)
        let store_handle = ReplayStore::open(&store);
        let key = store_handle.keys().unwrap().into_iter().next().unwrap();
        assert_eq!(
            run_args(&[
                "phishcorr", "predict", "--model", &s(&model), "--store", &s(&store), "--key",
                &key,
            ]),
            EXIT_OK
        );

        assert_eq!(run_args(&["phishcorr", "analyze", "--data", &s(&csv)]), EXIT_OK);

        let a = dir.path().join("a.html");
        let b = dir.path().join("b.html");
        std::fs::write(&a, "<html><body><p>x</p></body></html>").unwrap();
        std::fs::write(&b, "<html><body><p>y</p></body></html>").unwrap();
        assert_eq!(run_args(&["phishcorr", "domsim", s(&a).as_str(), s(&b).as_str()]), EXIT_OK);
    }

    #[test]
    fn extract_reruns_are_byte_identical() {
        let dir = tmp();
        let store = dir.path().join("store");
        let csv1 = dir.path().join("one.csv");
        let csv2 = dir.path().join("two.csv");
        let s = |p: &PathBuf| p.to_str().unwrap().to_owned();
        assert_eq!(
            run_args(&[
                "phishcorr", "synth", "--store", &s(&store), "--seed", "3", "--benign", "10",
                "--phish", "10",
            ]),
            EXIT_OK
        );
        assert_eq!(
            run_args(&["phishcorr", "extract", "--store", &s(&store), "--out", &s(&csv1)]),
            EXIT_OK
        );
        assert_eq!(
            run_args(&["phishcorr", "extract", "--store", &s(&store), "--out", &s(&csv2)]),
            EXIT_OK
        );
        assert_eq!(
            std::fs::read(&csv1).unwrap(),
            std::fs::read(&csv2).unwrap(),
            "feature CSVs must reproduce byte for byte"
        );
    }

    #[test]
    fn manifests_record_command_and_config_digest() {
        let dir = tmp();
        let store = dir.path().join("store");
        let s = |p: &PathBuf| p.to_str().unwrap().to_owned();
        assert_eq!(
            run_args(&[
                "phishcorr", "synth", "--store", &s(&store), "--seed", "8", "--benign", "5",
                "--phish", "5",
            ]),
            EXIT_OK
        );
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(store.join("manifest.json")).unwrap())
                .unwrap();
        assert_eq!(manifest["command"], "synth");
        assert_eq!(manifest["mode"], "replay");
        assert_eq!(manifest["config"]["seed"], 8);
        assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
        assert!(manifest["detail"]["trend_counts"].is_object());
    }
}
