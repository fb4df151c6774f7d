//! Line-oriented config lists (benign hosts, suffix rules, keyword sets):
//! UTF-8, one entry per line, `#` starts a comment, blank lines ignored.
//! Entries are lowercased because every consumer matches case-insensitively.

use std::path::Path;

pub(crate) fn parse_list(text: &str) -> Vec<String> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| line.to_lowercase())
        .collect()
}

pub(crate) fn load_list(path: &Path) -> std::io::Result<Vec<String>> {
    Ok(parse_list(&std::fs::read_to_string(path)?))
}
