//! Server-log parsing and per-user grouping.
//!
//! Two input formats are understood:
//!
//! * `csv`: header-free `user,url,epoch_seconds` rows.
//! * `clf`: the NCSA Common Log Format,
//!   `host ident authuser [10/Oct/2000:13:55:36 -0700] "GET /a HTTP/1.0" 200 2326`.
//!   The host becomes the user key. Only `GET` requests with a 2xx or 3xx
//!   status are kept.
//!
//! Lines that cannot be turned into a request for a known page are skipped
//! and reported as [`Diagnostic`]s rather than failing the whole parse.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;
use std::sync::OnceLock;

use chrono::DateTime;
use regex::Regex;

use crate::error::{Error, Result};
use crate::topology::{PageId, WebTopology};

const CLF_TIMESTAMP: &str = "%d/%b/%Y:%H:%M:%S %z";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PageRequest {
    pub user: String,
    pub page: PageId,
    /// Whole seconds since the Unix epoch.
    pub time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRequestSequence {
    pub user: String,
    pub requests: Vec<PageRequest>,
}

impl UserRequestSequence {
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogFormat {
    #[default]
    Csv,
    Clf,
}

impl FromStr for LogFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(LogFormat::Csv),
            "clf" => Ok(LogFormat::Clf),
            other => Err(Error::InvalidConfig(format!("unknown log format `{other}`"))),
        }
    }
}

/// A skipped input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedLog {
    pub requests: Vec<PageRequest>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Parses a whole log stream. Only I/O failures are fatal.
pub fn parse_log<R: BufRead>(source: R, format: LogFormat, topology: &WebTopology) -> Result<ParsedLog> {
    let mut parsed = ParsedLog::default();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match format {
            LogFormat::Csv => parse_csv_line(&line),
            LogFormat::Clf => parse_clf_line(&line),
        };
        let outcome = record.and_then(|(user, url, time)| match topology.page_id(url) {
            Some(page) => Ok(PageRequest {
                user: user.to_owned(),
                page,
                time,
            }),
            None => Err(format!("unknown page `{url}`")),
        });
        match outcome {
            Ok(request) => parsed.requests.push(request),
            Err(reason) => parsed.diagnostics.push(Diagnostic { line: n + 1, reason }),
        }
    }
    Ok(parsed)
}

fn parse_csv_line(line: &str) -> Result<(&str, &str, u64), String> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let [user, url, time] = fields[..] else {
        return Err(format!("expected 3 comma-separated fields, found {}", fields.len()));
    };
    if user.is_empty() || url.is_empty() {
        return Err("empty user or url field".to_owned());
    }
    let time = time.parse::<u64>().map_err(|_| format!("invalid timestamp `{time}`"))?;
    Ok((user, url, time))
}

fn clf_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(concat!(
            r"^(\S+)\s+",        // host
            r"\S+\s+",           // ident
            r"\S+\s+",           // authuser
            r"\[([^\]]+)\]\s+",  // timestamp
            r#""(\S+)\s+(\S+)"#, // method, url
            r#"(?:\s+[^"]*)?"\s+"#,
            r"(\d{3})\s+", // status
            r"(\S+)$",     // bytes
        ))
        .unwrap()
    })
}

fn parse_clf_line(line: &str) -> Result<(&str, &str, u64), String> {
    let caps = clf_regex()
        .captures(line.trim())
        .ok_or_else(|| "not a common log format line".to_owned())?;
    let host = caps.get(1).unwrap().as_str();
    let stamp = caps.get(2).unwrap().as_str();
    let method = caps.get(3).unwrap().as_str();
    let url = caps.get(4).unwrap().as_str();
    let status: u16 = caps[5].parse().map_err(|_| "invalid status".to_owned())?;

    if method != "GET" {
        return Err(format!("method {method} skipped"));
    }
    if !(200..400).contains(&status) {
        return Err(format!("status {status} skipped"));
    }
    let time = DateTime::parse_from_str(stamp, CLF_TIMESTAMP)
        .map_err(|e| format!("invalid timestamp `{stamp}`: {e}"))?
        .timestamp();
    let time = u64::try_from(time).map_err(|_| format!("timestamp `{stamp}` before epoch"))?;
    Ok((host, url, time))
}

/// Groups requests by user key. Users appear in first-appearance order and
/// each sequence is stably sorted by time.
pub fn group_by_user(requests: Vec<PageRequest>) -> Vec<UserRequestSequence> {
    let mut slots: HashMap<String, usize> = HashMap::new();
    let mut groups: Vec<UserRequestSequence> = Vec::new();
    for request in requests {
        let slot = *slots.entry(request.user.clone()).or_insert_with(|| {
            groups.push(UserRequestSequence {
                user: request.user.clone(),
                requests: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].requests.push(request);
    }
    for group in &mut groups {
        group.requests.sort_by_key(|r| r.time);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::load_topology;

    fn topo() -> WebTopology {
        load_topology("/a /b\n/b /c\n").unwrap()
    }

    #[test]
    fn csv_row_becomes_request() {
        let t = topo();
        let parsed = parse_log("u1,/a,100\n".as_bytes(), LogFormat::Csv, &t).unwrap();
        assert_eq!(
            parsed.requests,
            vec![PageRequest {
                user: "u1".into(),
                page: t.page_id("/a").unwrap(),
                time: 100
            }]
        );
        assert!(parsed.diagnostics.is_empty());
    }

    #[test]
    fn unknown_url_is_reported() {
        let parsed = parse_log("u1,/nope,100\n".as_bytes(), LogFormat::Csv, &topo()).unwrap();
        assert!(parsed.requests.is_empty());
        assert_eq!(parsed.diagnostics.len(), 1);
        assert_eq!(parsed.diagnostics[0].line, 1);
        assert!(parsed.diagnostics[0].to_string().starts_with("1\tunknown page"));
    }

    #[test]
    fn bad_csv_rows_are_not_fatal() {
        let log = "u1,/a,abc\nu1,/a\n\nu1,/a,-5\nu2,/b,7\n";
        let parsed = parse_log(log.as_bytes(), LogFormat::Csv, &topo()).unwrap();
        assert_eq!(parsed.requests.len(), 1);
        let lines: Vec<usize> = parsed.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![1, 2, 4]);
    }

    #[test]
    fn clf_get_is_parsed() {
        let t = topo();
        let line = r#"10.0.0.1 - frank [10/Oct/2000:13:55:36 -0700] "GET /b HTTP/1.0" 200 2326"#;
        let parsed = parse_log(line.as_bytes(), LogFormat::Clf, &t).unwrap();
        assert_eq!(parsed.requests.len(), 1);
        let r = &parsed.requests[0];
        assert_eq!(r.user, "10.0.0.1");
        assert_eq!(r.page, t.page_id("/b").unwrap());
        assert_eq!(r.time, 971_211_336);
    }

    #[test]
    fn clf_skips_post_and_errors() {
        let log = concat!(
            "1.2.3.4 - - [10/Oct/2000:13:55:36 +0000] \"POST /a HTTP/1.0\" 200 12\n",
            "1.2.3.4 - - [10/Oct/2000:13:55:37 +0000] \"GET /a HTTP/1.0\" 404 -\n",
            "1.2.3.4 - - [10/Oct/2000:13:55:38 +0000] \"GET /a HTTP/1.1\" 304 -\n",
            "garbage\n",
        );
        let parsed = parse_log(log.as_bytes(), LogFormat::Clf, &topo()).unwrap();
        assert_eq!(parsed.requests.len(), 1);
        assert_eq!(parsed.requests[0].time, 971_186_138);
        assert_eq!(parsed.diagnostics.len(), 3);
        assert!(parsed.diagnostics[0].reason.contains("POST"));
        assert!(parsed.diagnostics[1].reason.contains("404"));
    }

    #[test]
    fn grouping_orders_users_and_times() {
        let t = topo();
        let [a, b, c] = ["/a", "/b", "/c"].map(|u| t.page_id(u).unwrap());
        let req = |user: &str, page, time| PageRequest {
            user: user.into(),
            page,
            time,
        };
        let groups = group_by_user(vec![req("u1", a, 1), req("u2", b, 2), req("u1", c, 3)]);
        assert_eq!(groups.len(), 2);
        assert_eq!(groups[0].user, "u1");
        assert_eq!(groups[0].requests, vec![req("u1", a, 1), req("u1", c, 3)]);
        assert_eq!(groups[1].requests, vec![req("u2", b, 2)]);
        assert!(group_by_user(Vec::new()).is_empty());
    }

    #[test]
    fn grouping_is_stable_on_ties() {
        let req = |page, time| PageRequest {
            user: "u".into(),
            page: PageId(page),
            time,
        };
        let groups = group_by_user(vec![req(3, 5), req(1, 2), req(2, 5), req(0, 5)]);
        let pages: Vec<u32> = groups[0].requests.iter().map(|r| r.page.0).collect();
        assert_eq!(pages, vec![1, 3, 2, 0]);
    }
}
