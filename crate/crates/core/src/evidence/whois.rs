//! WHOIS retrieval (plain TCP text protocol) and creation-date extraction.
//! Registrars disagree on everything: the tag naming the registration date,
//! the date format, even the punctuation before the value. The parser scans
//! a prioritized alias list and a small set of date formats, and records
//! unparseable values as warnings rather than failures.

use chrono::NaiveDate;
use std::io::{Read, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::time::Duration;

use super::{netguard, EvidenceError, WhoisRecord};

/// Tag aliases in priority order; the first alias with a parseable value
/// wins, regardless of line order in the response.
pub const DEFAULT_TAG_ALIASES: [&str; 7] = [
    "Creation Date",
    "Registration Time",
    "Registered Date",
    "Commencement Date",
    "Changed Date",
    "Registered On",
    "Created On",
];

/// Outcome of scanning a WHOIS response for a creation date.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CreationDateScan {
    /// The parsed date and the alias that produced it.
    pub found: Option<(NaiveDate, String)>,
    /// One entry per tag line whose value failed every date format.
    pub warnings: Vec<String>,
}

/// Recognized formats: ISO 8601 (date or datetime), DD-Mon-YYYY, YYYY.MM.DD,
/// and DD/MM/YYYY. Trailing annotations like " (UTC)" are tolerated by
/// retrying on the first whitespace-delimited token.
fn parse_date_value(value: &str) -> Option<NaiveDate> {
    fn attempt(v: &str) -> Option<NaiveDate> {
        if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(v) {
            return Some(dt.date_naive());
        }
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(v, "%Y-%m-%dT%H:%M:%S") {
            return Some(dt.date());
        }
        for fmt in ["%Y-%m-%d", "%d-%b-%Y", "%Y.%m.%d", "%d/%m/%Y"] {
            if let Ok(d) = NaiveDate::parse_from_str(v, fmt) {
                return Some(d);
            }
        }
        None
    }
    let v = value.trim();
    attempt(v).or_else(|| {
        let first = v.split_whitespace().next()?;
        (first != v).then(|| attempt(first)).flatten()
    })
}

/// Scan `raw` for `<alias>:` lines (case-insensitive, dotted filler like
/// "Created On......:" tolerated) in alias priority order and parse the first
/// value that yields a date.
pub fn parse_creation_date<S: AsRef<str>>(raw: &str, tag_aliases: &[S]) -> CreationDateScan {
    let mut warnings = Vec::new();
    for alias in tag_aliases {
        let alias = alias.as_ref();
        for line in raw.lines() {
            let line = line.trim();
            let Some(head) = line.get(..alias.len()) else {
                continue;
            };
            if !head.eq_ignore_ascii_case(alias) {
                continue;
            }
            let rest = line[alias.len()..].trim_start_matches(|c: char| c == '.' || c.is_whitespace());
            let Some(value) = rest.strip_prefix(':') else {
                continue; // a longer tag that merely starts with the alias
            };
            match parse_date_value(value) {
                Some(date) => {
                    return CreationDateScan {
                        found: Some((date, alias.to_owned())),
                        warnings,
                    }
                }
                None => warnings.push(format!(
                    "unparseable date {:?} under tag {alias:?}",
                    value.trim()
                )),
            }
        }
    }
    CreationDateScan {
        found: None,
        warnings,
    }
}

/// Responses that mean "the registry has never heard of this domain".
const NO_RECORD_MARKERS: [&str; 5] = [
    "no match",
    "not found",
    "no data found",
    "no entries found",
    "no object found",
];

/// Query a WHOIS endpoint ("host" or "host:port", port 43 by default) over
/// plain TCP: one query line, response read to EOF. Live mode only.
pub fn query_whois(
    domain: &str,
    endpoint: &str,
    timeout: Duration,
    tag_aliases: &[String],
) -> Result<WhoisRecord, EvidenceError> {
    netguard::record_network_op();
    let unavailable = |detail: String| EvidenceError::WhoisUnavailable(detail);
    let addr_str = if endpoint.contains(':') {
        endpoint.to_owned()
    } else {
        format!("{endpoint}:43")
    };
    let addr = addr_str
        .to_socket_addrs()
        .map_err(|e| unavailable(format!("{addr_str}: {e}")))?
        .next()
        .ok_or_else(|| unavailable(format!("{addr_str}: no address")))?;
    let mut stream =
        TcpStream::connect_timeout(&addr, timeout).map_err(|e| unavailable(format!("{addr}: {e}")))?;
    stream
        .set_read_timeout(Some(timeout))
        .and_then(|_| stream.set_write_timeout(Some(timeout)))
        .map_err(|e| unavailable(e.to_string()))?;
    stream
        .write_all(format!("{domain}\r\n").as_bytes())
        .map_err(|e| unavailable(format!("write: {e}")))?;
    let mut bytes = Vec::new();
    stream
        .read_to_end(&mut bytes)
        .map_err(|e| unavailable(format!("read: {e}")))?;
    let raw = String::from_utf8_lossy(&bytes).to_string();
    if raw.trim().is_empty() {
        return Err(unavailable("empty response".to_owned()));
    }
    let scan = parse_creation_date(&raw, tag_aliases);
    if scan.found.is_none() {
        let lower = raw.to_lowercase();
        if NO_RECORD_MARKERS.iter().any(|m| lower.contains(m)) {
            return Err(EvidenceError::NoRecord(domain.to_owned()));
        }
    }
    let (creation_date, matched_tag) = match scan.found {
        Some((d, tag)) => (Some(d), Some(tag)),
        None => (None, None),
    };
    Ok(WhoisRecord {
        raw,
        creation_date,
        matched_tag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::net::TcpListener;

    fn aliases() -> Vec<String> {
        DEFAULT_TAG_ALIASES.iter().map(|s| s.to_string()).collect()
    }

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    #[test]
    fn canonical_tag_with_iso_datetime() {
        let scan = parse_creation_date(
            "Domain Name: EXAMPLE.COM\nCreation Date: 2020-01-15T00:00:00Z\n",
            &DEFAULT_TAG_ALIASES,
        );
        assert_eq!(scan.found, Some((date(2020, 1, 15), "Creation Date".to_owned())));
        assert!(scan.warnings.is_empty());
    }

    #[test]
    fn alternate_tags_and_formats() {
        let cases = [
            ("Registered On: 15-Jan-2020", "Registered On", date(2020, 1, 15)),
            ("Commencement Date: 2019.03.02", "Commencement Date", date(2019, 3, 2)),
            ("Registration Time: 02/03/2019", "Registration Time", date(2019, 3, 2)),
            ("registered date: 2021-07-09", "Registered Date", date(2021, 7, 9)),
            ("Created On......: 01-Dec-2018", "Created On", date(2018, 12, 1)),
        ];
        for (raw, tag, expected) in cases {
            let scan = parse_creation_date(raw, &DEFAULT_TAG_ALIASES);
            assert_eq!(scan.found, Some((expected, tag.to_owned())), "input {raw:?}");
        }
    }

    #[test]
    fn alias_priority_beats_line_order() {
        // "Changed Date" appears first in the text, but "Created On" it is not:
        // "Creation Date" outranks both whenever it parses.
        let raw = "Changed Date: 2023-05-05\nCreated On: 2001-02-03\nCreation Date: 2020-01-15\n";
        let scan = parse_creation_date(raw, &DEFAULT_TAG_ALIASES);
        assert_eq!(scan.found, Some((date(2020, 1, 15), "Creation Date".to_owned())));

        // Without the top-priority tag, priority still decides.
        let raw = "Registered On: 2001-02-03\nChanged Date: 2023-05-05\n";
        let scan = parse_creation_date(raw, &DEFAULT_TAG_ALIASES);
        assert_eq!(scan.found, Some((date(2023, 5, 5), "Changed Date".to_owned())));
    }

    #[test]
    fn single_tag_result_is_independent_of_line_order() {
        let a = "X: y\nCreation Date: 2020-01-15\nZ: w\n";
        let b = "Creation Date: 2020-01-15\nX: y\nZ: w\n";
        assert_eq!(
            parse_creation_date(a, &DEFAULT_TAG_ALIASES),
            parse_creation_date(b, &DEFAULT_TAG_ALIASES)
        );
    }

    #[test]
    fn unparseable_value_warns_and_continues() {
        let scan = parse_creation_date("Creation Date: soon\n", &DEFAULT_TAG_ALIASES);
        assert_eq!(scan.found, None);
        assert_eq!(scan.warnings.len(), 1);
        assert!(scan.warnings[0].contains("soon"));

        // a later line under the same tag can still succeed
        let scan = parse_creation_date(
            "Creation Date: pending\nCreation Date: 2020-01-15\n",
            &DEFAULT_TAG_ALIASES,
        );
        assert_eq!(scan.found, Some((date(2020, 1, 15), "Creation Date".to_owned())));
        assert_eq!(scan.warnings.len(), 1);
    }

    #[test]
    fn longer_tags_do_not_match_a_shorter_alias() {
        // "Creation Dates" is not "Creation Date"
        let scan = parse_creation_date("Creation Dates: 2020-01-15\n", &DEFAULT_TAG_ALIASES);
        assert_eq!(scan.found, None);
    }

    #[test]
    fn no_date_tag_is_absence_not_error() {
        let scan = parse_creation_date("Domain Name: X\nRegistrar: Y\n", &DEFAULT_TAG_ALIASES);
        assert_eq!(scan.found, None);
        assert!(scan.warnings.is_empty());
    }

    #[test]
    fn trailing_annotations_are_tolerated() {
        let scan = parse_creation_date("Creation Date: 2020-01-15 (UTC)\n", &DEFAULT_TAG_ALIASES);
        assert_eq!(scan.found.unwrap().0, date(2020, 1, 15));
    }

    #[test]
    fn all_aliases_parse_all_formats() {
        // every alias crossed with every supported format
        let formats = ["2020-01-15T00:00:00Z", "15-Jan-2020", "2020.01.15", "15/01/2020"];
        for alias in DEFAULT_TAG_ALIASES {
            for value in formats {
                let raw = format!("Some Other Line: x\n{alias}: {value}\n");
                let scan = parse_creation_date(&raw, &DEFAULT_TAG_ALIASES);
                let (d, tag) = scan.found.unwrap_or_else(|| {
                    panic!("no parse for alias {alias:?} with value {value:?}")
                });
                assert_eq!(d, date(2020, 1, 15));
                assert_eq!(tag, alias);
            }
        }
    }

    /// One-shot WHOIS responder on an ephemeral port.
    fn whois_server(response: &'static str) -> std::net::SocketAddr {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            if let Ok((mut stream, _)) = listener.accept() {
                let mut buf = [0u8; 256];
                let _ = std::io::Read::read(&mut stream, &mut buf); // consume query line
                let _ = std::io::Write::write_all(&mut stream, response.as_bytes());
            }
        });
        addr
    }

    #[test]
    fn live_query_parses_a_recorded_response() {
        let addr = whois_server("Domain Name: EXAMPLE.COM\nCreation Date: 2020-01-15T00:00:00Z\n");
        let record = query_whois(
            "example.com",
            &addr.to_string(),
            Duration::from_secs(2),
            &aliases(),
        )
        .unwrap();
        assert_eq!(record.creation_date, Some(date(2020, 1, 15)));
        assert_eq!(record.matched_tag.as_deref(), Some("Creation Date"));
        assert!(record.raw.contains("EXAMPLE.COM"));
    }

    #[test]
    fn unknown_domain_maps_to_no_record() {
        let addr = whois_server("No match for \"NOSUCH.EXAMPLE\".\n");
        let err = query_whois(
            "nosuch.example",
            &addr.to_string(),
            Duration::from_secs(2),
            &aliases(),
        )
        .unwrap_err();
        assert!(matches!(err, EvidenceError::NoRecord(_)), "{err:?}");
    }

    #[test]
    fn dead_endpoint_is_unavailable() {
        // bind then drop to obtain a port with nothing listening
        let addr = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap();
        let err = query_whois(
            "example.com",
            &addr.to_string(),
            Duration::from_millis(300),
            &aliases(),
        )
        .unwrap_err();
        assert!(matches!(err, EvidenceError::WhoisUnavailable(_)), "{err:?}");
    }
}
