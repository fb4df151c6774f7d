//! URL decomposition and the URL-shape signals derived from it.
//!
//! Splitting a host into subdomains / registrable domain needs a public-suffix
//! notion. The full public-suffix list is overkill here: the default rule is
//! "last two labels", plus a small built-in set of multi-label suffixes that
//! actually show up in phishing-hosting TLDs. Both the suffix set and the
//! benign-host list are swappable via line-oriented config files.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;
use url::Url;

use crate::listfile;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum UrlError {
    #[error("no usable host could be parsed from {0:?}")]
    MalformedUrl(String),
}

/// Multi-label public suffixes; any host not matching one of these falls back
/// to the "last label is the suffix" rule, i.e. the registrable domain is the
/// last two labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuffixRules {
    /// Each entry stored as its labels, e.g. ["co", "uk"].
    entries: Vec<Vec<String>>,
}

impl SuffixRules {
    pub fn new(entries: impl IntoIterator<Item = String>) -> Self {
        let mut entries: Vec<Vec<String>> = entries
            .into_iter()
            .map(|e| e.split('.').map(|l| l.to_lowercase()).collect())
            .collect();
        // Longest-first so the most specific suffix wins a shared tail.
        entries.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        entries.dedup();
        SuffixRules { entries }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(listfile::load_list(path)?))
    }

    /// How many labels of `host_labels` belong to the public suffix.
    fn suffix_label_count(&self, host_labels: &[String]) -> usize {
        for entry in &self.entries {
            if entry.len() < host_labels.len()
                && host_labels[host_labels.len() - entry.len()..] == entry[..]
            {
                return entry.len();
            }
        }
        1
    }
}

impl Default for SuffixRules {
    fn default() -> Self {
        SuffixRules::new(
            ["co.uk", "com.au", "co.nz", "co.vu", "com.br", "co.jp"]
                .into_iter()
                .map(str::to_owned),
        )
    }
}

/// A URL broken into the pieces the feature extractor cares about. `raw` is
/// the input exactly as given; length and symbol counts are taken from it,
/// not from any normalized form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainParts {
    pub raw: String,
    pub scheme: String,
    /// Lowercased host. IPv6 hosts keep their brackets.
    pub host: String,
    pub host_labels: Vec<String>,
    /// Empty for IP hosts.
    pub registrable_domain: String,
    /// First label of the registrable domain ("example" in "example.co.uk").
    pub registrable_label: String,
    pub subdomain_labels: Vec<String>,
    pub path_and_query: String,
}

/// URL-shape counters; all defined on the raw string or the host split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlAnalytics {
    pub has_ip_host: bool,
    /// Occurrences of '@' and '-' anywhere in the raw URL.
    pub suspicious_symbol_count: u32,
    pub subdomain_count: u32,
    /// Length of the raw URL in characters.
    pub url_length: u32,
    pub registrable_label_length: u32,
}

/// Parse a URL, defaulting the scheme to `http` when none is present.
pub fn parse_url(raw: &str, rules: &SuffixRules) -> Result<DomainParts, UrlError> {
    let malformed = || UrlError::MalformedUrl(raw.to_owned());
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(malformed());
    }
    let parsed = match Url::parse(trimmed) {
        Ok(u) if u.host_str().is_some() => u,
        // Scheme-less input: retry as plain http. Inputs that already declare
        // an authority ("http://") but failed are genuinely malformed, and
        // prefixing them would manufacture a bogus host out of the scheme.
        _ if !trimmed.contains("://") => {
            Url::parse(&format!("http://{trimmed}")).map_err(|_| malformed())?
        }
        _ => return Err(malformed()),
    };
    let host = parsed.host_str().ok_or_else(malformed)?.to_lowercase();
    // A single trailing dot is the fully-qualified form of the same host.
    let host = host.strip_suffix('.').unwrap_or(&host).to_owned();
    if host.is_empty() {
        return Err(malformed());
    }

    let host_labels: Vec<String> = if host.starts_with('[') {
        vec![host.clone()] // bracketed IPv6: one opaque label
    } else {
        host.split('.').map(str::to_owned).collect()
    };
    if host_labels.iter().any(|l| l.is_empty()) {
        return Err(malformed());
    }

    let (registrable_domain, registrable_label, subdomain_labels) = if is_ip_host(&host) {
        (String::new(), String::new(), Vec::new())
    } else {
        let suffix_len = rules.suffix_label_count(&host_labels);
        let registrable_len = (suffix_len + 1).min(host_labels.len());
        let split = host_labels.len() - registrable_len;
        let registrable = host_labels[split..].join(".");
        let label = host_labels[split].clone();
        (registrable, label, host_labels[..split].to_vec())
    };

    let mut path_and_query = parsed.path().to_owned();
    if let Some(q) = parsed.query() {
        path_and_query.push('?');
        path_and_query.push_str(q);
    }

    Ok(DomainParts {
        raw: raw.to_owned(),
        scheme: parsed.scheme().to_owned(),
        host,
        host_labels,
        registrable_domain,
        registrable_label,
        subdomain_labels,
        path_and_query,
    })
}

/// True for dotted-quad IPv4 hosts and bracketed IPv6 hosts.
pub(crate) fn is_ip_host(host: &str) -> bool {
    if host.starts_with('[') {
        return true;
    }
    let octets: Vec<&str> = host.split('.').collect();
    octets.len() == 4
        && octets.iter().all(|o| {
            !o.is_empty()
                && o.len() <= 3
                && o.bytes().all(|b| b.is_ascii_digit())
                && o.parse::<u16>().map(|v| v <= 255).unwrap_or(false)
        })
}

pub fn url_analytics(parts: &DomainParts) -> UrlAnalytics {
    UrlAnalytics {
        has_ip_host: is_ip_host(&parts.host),
        suspicious_symbol_count: parts
            .raw
            .chars()
            .filter(|c| *c == '@' || *c == '-')
            .count() as u32,
        subdomain_count: parts.subdomain_labels.len() as u32,
        url_length: parts.raw.chars().count() as u32,
        registrable_label_length: parts.registrable_label.chars().count() as u32,
    }
}

/// Hosting services whose pages are frequently abused; a match means the host
/// itself carries no reputation signal about the page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenignHosts {
    entries: Vec<String>,
}

impl BenignHosts {
    pub fn new(entries: impl IntoIterator<Item = String>) -> Self {
        BenignHosts {
            entries: entries.into_iter().map(|e| e.to_lowercase()).collect(),
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        Ok(Self::new(listfile::load_list(path)?))
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }
}

impl Default for BenignHosts {
    fn default() -> Self {
        BenignHosts::new(
            [
                "sites.google.com",
                "000webhostapp.com",
                "ddns.net",
                "co.vu",
                "branch.io",
                "vercel.app",
            ]
            .into_iter()
            .map(str::to_owned),
        )
    }
}

/// Whether the host is, or sits under, one of the listed benign services.
/// Matching respects label boundaries: `phishfb.ddns.net` matches `ddns.net`,
/// `ddns.net.evil.com` and `xddns.net` do not.
pub fn is_benign_host(parts: &DomainParts, hosts: &BenignHosts) -> bool {
    hosts.entries.iter().any(|entry| {
        parts.host == *entry
            || (parts.host.len() > entry.len()
                && parts.host.ends_with(entry)
                && parts.host.as_bytes()[parts.host.len() - entry.len() - 1] == b'.')
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn parts(raw: &str) -> DomainParts {
        parse_url(raw, &SuffixRules::default()).unwrap()
    }

    #[test]
    fn splits_subdomains_and_registrable() {
        let p = parts("https://a.b.example.com/login?x=1");
        assert_eq!(p.scheme, "https");
        assert_eq!(p.host, "a.b.example.com");
        assert_eq!(p.registrable_domain, "example.com");
        assert_eq!(p.registrable_label, "example");
        assert_eq!(p.subdomain_labels, vec!["a", "b"]);
        assert_eq!(p.path_and_query, "/login?x=1");
    }

    #[test]
    fn dynamic_dns_service_is_an_ordinary_registrable_domain() {
        let p = parts("http://phishfb.ddns.net");
        assert_eq!(p.registrable_domain, "ddns.net");
        assert_eq!(p.registrable_label, "ddns");
        assert_eq!(p.subdomain_labels, vec!["phishfb"]);
    }

    #[test]
    fn multi_label_suffixes_extend_the_registrable_domain() {
        let p = parts("http://shop.example.co.uk/cart");
        assert_eq!(p.registrable_domain, "example.co.uk");
        assert_eq!(p.registrable_label, "example");
        assert_eq!(p.subdomain_labels, vec!["shop"]);

        let p = parts("http://deals.megastore.com.au");
        assert_eq!(p.registrable_domain, "megastore.com.au");
        assert_eq!(p.registrable_label, "megastore");
    }

    #[test]
    fn host_equal_to_a_suffix_degrades_gracefully() {
        let p = parts("http://co.uk");
        assert_eq!(p.registrable_domain, "co.uk");
        assert_eq!(p.registrable_label, "co");
        assert!(p.subdomain_labels.is_empty());
    }

    #[test]
    fn single_label_hosts_work() {
        let p = parts("http://localhost:8080/admin");
        assert_eq!(p.registrable_domain, "localhost");
        assert_eq!(p.registrable_label, "localhost");
        assert!(p.subdomain_labels.is_empty());
    }

    #[test]
    fn scheme_defaults_to_http() {
        let p = parts("example.com/path");
        assert_eq!(p.scheme, "http");
        assert_eq!(p.host, "example.com");
        assert_eq!(p.raw, "example.com/path");
    }

    #[test]
    fn host_casing_is_normalized_but_raw_is_preserved() {
        let p = parts("HTTP://PhishFB.DDNS.net/Login");
        assert_eq!(p.host, "phishfb.ddns.net");
        assert_eq!(p.raw, "HTTP://PhishFB.DDNS.net/Login");
    }

    #[test]
    fn rejects_unparsable_input() {
        for bad in ["not a url ::", "", "   ", "http://", "."] {
            let got = parse_url(bad, &SuffixRules::default());
            assert!(
                matches!(got, Err(UrlError::MalformedUrl(_))),
                "{bad:?} should be rejected, got {got:?}"
            );
        }
    }

    #[test]
    fn non_http_schemes_with_a_real_authority_parse() {
        let p = parts("ftp://files.example.com/pub");
        assert_eq!(p.scheme, "ftp");
        assert_eq!(p.host, "files.example.com");
    }

    #[test]
    fn trailing_dot_host_is_normalized() {
        let p = parts("http://example.com./x");
        assert_eq!(p.host, "example.com");
        assert_eq!(p.registrable_domain, "example.com");
    }

    #[test]
    fn ip_hosts_have_no_registrable_domain() {
        let p = parts("192.168.1.1/login");
        assert_eq!(p.scheme, "http");
        assert!(is_ip_host(&p.host));
        assert_eq!(p.registrable_domain, "");
        assert_eq!(p.registrable_label, "");
        assert!(p.subdomain_labels.is_empty());
        assert_eq!(p.host_labels.join("."), p.host);

        let a = url_analytics(&p);
        assert!(a.has_ip_host);
        assert_eq!(a.subdomain_count, 0);
        assert_eq!(a.registrable_label_length, 0);
    }

    #[test]
    fn bracketed_ipv6_counts_as_ip() {
        let p = parts("http://[::1]:8080/x");
        assert!(is_ip_host(&p.host));
        assert_eq!(p.host_labels.join("."), p.host);
        assert_eq!(p.registrable_domain, "");
    }

    #[test]
    fn dotted_names_that_are_not_ipv4_stay_domains() {
        for host in ["12.34.56.com", "300.example.com", "v1.2.app.net"] {
            let p = parts(&format!("http://{host}/"));
            assert!(!is_ip_host(&p.host), "{host} misread as IP");
        }
    }

    #[test]
    fn numeric_hosts_follow_url_standard_ipv4_canonicalization() {
        // A trailing numeric label makes the whole host an IPv4 candidate:
        // shorthand forms expand, invalid octet counts are parse errors.
        let p = parts("http://1.2.3");
        assert_eq!(p.host, "1.2.0.3");
        assert!(is_ip_host(&p.host));
        for bad in ["http://256.1.1.1", "http://1.2.3.4.5"] {
            assert!(parse_url(bad, &SuffixRules::default()).is_err());
        }
    }

    #[test]
    fn analytics_count_over_the_raw_string() {
        let raw = "http://login-secure-update.example.com/a@b?q=-";
        let a = url_analytics(&parts(raw));
        assert_eq!(a.url_length, raw.chars().count() as u32);
        assert_eq!(a.suspicious_symbol_count, 4); // three '-' plus one '@'
        assert_eq!(a.subdomain_count, 1);
        assert_eq!(a.registrable_label_length, "example".len() as u32);
        assert!(!a.has_ip_host);
    }

    #[test]
    fn benign_host_matching_is_case_insensitive_and_boundary_aware() {
        let hosts = BenignHosts::default();
        assert!(is_benign_host(&parts("http://phisheBay.ddns.net"), &hosts));
        assert!(is_benign_host(&parts("https://sites.google.com/site/x"), &hosts));
        assert!(is_benign_host(&parts("http://deep.sub.vercel.app"), &hosts));
        assert!(is_benign_host(&parts("http://ddns.net"), &hosts));
        assert!(!is_benign_host(&parts("http://ddns.net.evil.com"), &hosts));
        assert!(!is_benign_host(&parts("http://xddns.net"), &hosts));
        assert!(!is_benign_host(&parts("http://example.com"), &hosts));
    }

    #[test]
    fn custom_lists_replace_the_defaults() {
        let hosts = BenignHosts::new(vec!["pages.dev".to_owned()]);
        assert!(is_benign_host(&parts("http://x.pages.dev"), &hosts));
        assert!(!is_benign_host(&parts("http://x.ddns.net"), &hosts));
    }

    proptest! {
        #[test]
        fn host_labels_rejoin_to_host(label_a in "[a-z]{1,8}", label_b in "[a-z]{1,8}") {
            let raw = format!("http://{label_a}.{label_b}.example.com/p");
            let p = parts(&raw);
            prop_assert_eq!(p.host_labels.join("."), p.host);
            prop_assert!(p.registrable_label.len() >= 1);
        }

        #[test]
        fn embedded_entries_never_match_across_label_boundaries(
            prefix in "[a-z]{1,6}",
            suffix in "[a-z]{1,6}",
        ) {
            let hosts = BenignHosts::default();
            // Glue the entry to surrounding characters without a dot on the
            // left; with trailing labels it is no longer the host's tail.
            let glued = parts(&format!("http://{prefix}ddns.net"));
            prop_assert!(!is_benign_host(&glued, &hosts));
            let extended = parts(&format!("http://ddns.net.{suffix}.org"));
            prop_assert!(!is_benign_host(&extended, &hosts));
            let proper = parts(&format!("http://{prefix}.ddns.net"));
            prop_assert!(is_benign_host(&proper, &hosts));
        }
    }
}
