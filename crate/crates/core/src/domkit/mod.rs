//! DOM structure and content signals.
//!
//! Two views of a page matter here. The *skeleton* — the tag tree with text
//! and attributes stripped — captures the layout a phishing kit clones from
//! its benign template, and is compared via edit distance over a preorder
//! serialization. The *content profile* captures what the page asks of the
//! visitor: credential inputs, document uploads, fake "page not found" shells
//! served with a 200, and captcha-only gates that hide everything else.

mod parser;

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::listfile;
use crate::textmetrics;
use parser::{Element, Node};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DomError {
    #[error("document contains no recoverable elements")]
    EmptyDocument,
}

/// Tag-only tree. Equal skeletons mean structurally identical pages no matter
/// what text, styling, or attribute noise was layered on top.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkeletonNode {
    pub tag: String,
    pub children: Vec<SkeletonNode>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomSkeleton {
    pub root: SkeletonNode,
}

/// One entry of the preorder serialization: a tag is one symbol, and a
/// descend/ascend marker pair brackets every non-empty child list so nesting
/// differences cost edits even when the tag multiset matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SkelToken<'a> {
    Descend,
    Ascend,
    Tag(&'a str),
}

impl DomSkeleton {
    pub fn node_count(&self) -> usize {
        fn count(n: &SkeletonNode) -> usize {
            1 + n.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }

    fn token_seq(&self) -> Vec<SkelToken<'_>> {
        fn walk<'a>(n: &'a SkeletonNode, out: &mut Vec<SkelToken<'a>>) {
            out.push(SkelToken::Tag(&n.tag));
            if !n.children.is_empty() {
                out.push(SkelToken::Descend);
                for c in &n.children {
                    walk(c, out);
                }
                out.push(SkelToken::Ascend);
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut out);
        out
    }

    /// The serialization as display strings ("(", ")", tag names); useful for
    /// debugging and tested against the similarity metric.
    pub fn serialized(&self) -> Vec<String> {
        self.token_seq()
            .iter()
            .map(|t| match t {
                SkelToken::Descend => "(".to_owned(),
                SkelToken::Ascend => ")".to_owned(),
                SkelToken::Tag(tag) => (*tag).to_owned(),
            })
            .collect()
    }

    /// Minimal HTML that parses back to this same skeleton.
    pub fn to_html(&self) -> String {
        fn render(n: &SkeletonNode, out: &mut String) {
            out.push('<');
            out.push_str(&n.tag);
            out.push('>');
            for c in &n.children {
                render(c, out);
            }
            if !parser::is_void(&n.tag) {
                out.push_str("</");
                out.push_str(&n.tag);
                out.push('>');
            }
        }
        let mut out = String::new();
        render(&self.root, &mut out);
        out
    }
}

fn strip_to_skeleton(e: &Element) -> SkeletonNode {
    SkeletonNode {
        tag: e.tag.clone(),
        children: e
            .children
            .iter()
            .filter_map(|n| match n {
                Node::Element(el) => Some(strip_to_skeleton(el)),
                Node::Text(_) => None,
            })
            .collect(),
    }
}

/// Parse (error-tolerantly) and reduce to the tag tree. The root is always
/// `html` with `head`/`body` synthesized the way a browser would.
pub fn extract_skeleton(html: &str) -> Result<DomSkeleton, DomError> {
    let doc = parser::parse_document(html);
    let root = parser::normalize(doc).ok_or(DomError::EmptyDocument)?;
    Ok(DomSkeleton {
        root: strip_to_skeleton(&root),
    })
}

/// Normalized structural similarity in [0, 1]: 1.0 for identical skeletons,
/// approaching 0 as the serialized tag sequences diverge.
pub fn skeleton_similarity(a: &DomSkeleton, b: &DomSkeleton) -> f64 {
    textmetrics::normalized_similarity_seq(&a.token_seq(), &b.token_seq())
}

/// What a page asks of its visitor, plus the two cloaking verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentProfile {
    /// Text of the first `<title>` element, whitespace-collapsed.
    pub title: String,
    pub form_count: u32,
    pub password_inputs: u32,
    pub email_inputs: u32,
    pub card_inputs: u32,
    /// File inputs, or 1 when identity-document wording accompanies a form.
    pub document_upload_inputs: u32,
    pub script_count: u32,
    /// Served 200 while the visible text claims the page is gone.
    pub fake_invalid: bool,
    /// Captcha present and nothing else to interact with.
    pub captcha_gated: bool,
}

impl ContentProfile {
    fn empty() -> ContentProfile {
        ContentProfile {
            title: String::new(),
            form_count: 0,
            password_inputs: 0,
            email_inputs: 0,
            card_inputs: 0,
            document_upload_inputs: 0,
            script_count: 0,
            fake_invalid: false,
            captcha_gated: false,
        }
    }
}

/// Keyword sets driving the verdicts. All matching is case-insensitive on
/// whitespace-collapsed text; each list can be replaced from a line-oriented
/// config file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentConfig {
    /// Phrases a fake "this page is gone" shell shows while serving 200.
    pub validity_keywords: Vec<String>,
    /// Substrings of class/id attributes or script URLs that mark a captcha.
    pub captcha_markers: Vec<String>,
    /// Markers for payment-card inputs, matched against name/id/autocomplete.
    pub card_markers: Vec<String>,
    /// Identity-document wording that makes a form an upload solicitation.
    pub document_keywords: Vec<String>,
}

impl Default for ContentConfig {
    fn default() -> Self {
        let own = |items: &[&str]| items.iter().map(|s| s.to_string()).collect();
        ContentConfig {
            validity_keywords: own(&[
                "no longer available",
                "not found",
                "unpublished",
                "does not exist",
                "404",
                "access forbidden",
                "page not found",
                "oops! page not exist",
            ]),
            captcha_markers: own(&["recaptcha", "captcha", "hcaptcha"]),
            card_markers: own(&["card", "cc-number", "cvv"]),
            document_keywords: own(&["passport", "driver licence", "driver license", "id card"]),
        }
    }
}

impl ContentConfig {
    pub fn load_validity_keywords(&mut self, path: &Path) -> std::io::Result<()> {
        self.validity_keywords = listfile::load_list(path)?;
        Ok(())
    }

    pub fn load_captcha_markers(&mut self, path: &Path) -> std::io::Result<()> {
        self.captcha_markers = listfile::load_list(path)?;
        Ok(())
    }
}

/// Lowercase and collapse all whitespace runs to single spaces.
fn normalize_text(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Phrase search with word boundaries on both ends, so "404" does not match
/// inside "13404" and "id card" does not match inside "valid cardholder"...
/// which it would as a plain substring ("val*id card*holder").
fn contains_phrase(haystack: &str, phrase: &str) -> bool {
    if phrase.is_empty() {
        return false;
    }
    for (at, m) in haystack.match_indices(phrase) {
        let before_ok = haystack[..at]
            .chars()
            .next_back()
            .map_or(true, |c| !c.is_alphanumeric());
        let after_ok = haystack[at + m.len()..]
            .chars()
            .next()
            .map_or(true, |c| !c.is_alphanumeric());
        if before_ok && after_ok {
            return true;
        }
    }
    false
}

fn element_text(e: &Element, out: &mut String) {
    for child in &e.children {
        match child {
            Node::Text(t) => {
                out.push_str(t);
                out.push(' ');
            }
            Node::Element(el) => element_text(el, out),
        }
    }
}

/// Accumulator for one walk over the tree.
struct Scan<'a> {
    cfg: &'a ContentConfig,
    title: Option<String>,
    visible_text: String,
    form_count: u32,
    password_inputs: u32,
    email_inputs: u32,
    card_inputs: u32,
    file_inputs: u32,
    script_count: u32,
    captcha_marker_seen: bool,
}

/// Elements whose text a visitor never sees.
const INVISIBLE_TEXT: [&str; 5] = ["script", "style", "noscript", "template", "title"];

impl<'a> Scan<'a> {
    fn walk(&mut self, e: &Element) {
        match e.tag.as_str() {
            "title" => {
                if self.title.is_none() {
                    let mut t = String::new();
                    element_text(e, &mut t);
                    self.title = Some(t.split_whitespace().collect::<Vec<_>>().join(" "));
                }
            }
            "form" => self.form_count += 1,
            "script" => {
                self.script_count += 1;
                if let Some(src) = e.attr("src") {
                    let src = src.to_lowercase();
                    if self.cfg.captcha_markers.iter().any(|m| src.contains(m)) {
                        self.captcha_marker_seen = true;
                    }
                }
            }
            "input" => self.classify_input(e),
            _ => {}
        }
        for key in ["class", "id"] {
            if let Some(v) = e.attr(key) {
                let v = v.to_lowercase();
                if self.cfg.captcha_markers.iter().any(|m| v.contains(m)) {
                    self.captcha_marker_seen = true;
                }
            }
        }
        for child in &e.children {
            match child {
                Node::Text(t) => {
                    if !INVISIBLE_TEXT.contains(&e.tag.as_str()) {
                        self.visible_text.push_str(t);
                        self.visible_text.push(' ');
                    }
                }
                Node::Element(el) => self.walk(el),
            }
        }
    }

    fn classify_input(&mut self, e: &Element) {
        let ty = e.attr("type").unwrap_or("text").to_lowercase();
        let name_id = format!(
            "{} {}",
            e.attr("name").unwrap_or(""),
            e.attr("id").unwrap_or("")
        )
        .to_lowercase();
        match ty.as_str() {
            "password" => self.password_inputs += 1,
            "email" => self.email_inputs += 1,
            "file" => self.file_inputs += 1,
            _ => {
                if name_id.contains("email") {
                    self.email_inputs += 1;
                }
            }
        }
        let card_fields = format!("{name_id} {}", e.attr("autocomplete").unwrap_or("")).to_lowercase();
        let is_card = self.cfg.card_markers.iter().any(|marker| {
            if marker.chars().any(|c| !c.is_alphanumeric()) {
                // hyphenated markers like "cc-number" match as substrings
                card_fields.contains(marker.as_str())
            } else {
                contains_phrase(&card_fields, marker)
            }
        });
        if is_card {
            self.card_inputs += 1;
        }
    }
}

/// Text a visitor can see, lowercased with whitespace collapsed. Title text
/// and script/style/noscript/template bodies are excluded, matching the
/// visibility rule the content inspection itself applies.
pub fn visible_text(html: &str) -> String {
    let doc = parser::parse_document(html);
    let Some(root) = parser::normalize(doc) else {
        return String::new();
    };
    fn collect(e: &Element, out: &mut String) {
        for child in &e.children {
            match child {
                Node::Text(t) => {
                    if !INVISIBLE_TEXT.contains(&e.tag.as_str()) {
                        out.push_str(t);
                        out.push(' ');
                    }
                }
                Node::Element(el) => collect(el, out),
            }
        }
    }
    let mut out = String::new();
    collect(&root, &mut out);
    normalize_text(&out)
}

/// Inspect a rendered (or initial) document together with the HTTP status it
/// was served under, using the default keyword sets.
pub fn inspect_content(html: &str, http_status: u16) -> ContentProfile {
    inspect_content_with(html, http_status, &ContentConfig::default())
}

pub fn inspect_content_with(html: &str, http_status: u16, cfg: &ContentConfig) -> ContentProfile {
    let doc = parser::parse_document(html);
    let Some(root) = parser::normalize(doc) else {
        return ContentProfile::empty();
    };
    let mut scan = Scan {
        cfg,
        title: None,
        visible_text: String::new(),
        form_count: 0,
        password_inputs: 0,
        email_inputs: 0,
        card_inputs: 0,
        file_inputs: 0,
        script_count: 0,
        captcha_marker_seen: false,
    };
    scan.walk(&root);

    let text = normalize_text(&scan.visible_text);
    let fake_invalid = http_status == 200
        && cfg
            .validity_keywords
            .iter()
            .any(|k| contains_phrase(&text, &normalize_text(k)));

    let mut document_upload_inputs = scan.file_inputs;
    if document_upload_inputs == 0
        && scan.form_count > 0
        && cfg
            .document_keywords
            .iter()
            .any(|k| contains_phrase(&text, &normalize_text(k)))
    {
        document_upload_inputs = 1;
    }

    // A captcha that gates *nothing else* — no form, no credential field —
    // exists to keep scanners out, not users safe.
    let captcha_gated =
        scan.captcha_marker_seen && scan.password_inputs == 0 && scan.form_count == 0;

    ContentProfile {
        title: scan.title.unwrap_or_default(),
        form_count: scan.form_count,
        password_inputs: scan.password_inputs,
        email_inputs: scan.email_inputs,
        card_inputs: scan.card_inputs,
        document_upload_inputs,
        script_count: scan.script_count,
        fake_invalid,
        captcha_gated,
    }
}
