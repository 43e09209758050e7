//! Frequent contiguous-pattern mining over reconstructed sessions, pattern
//! based next-page prediction, and scoring of reconstruction methods against
//! simulator ground truth.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::baselines::{reconstruct_all, Method, ReconstructedSession};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::log_ingest::{group_by_user, PageRequest};
use crate::phase1::Thresholds;
use crate::simulator::GroundTruth;
use crate::topology::{PageId, WebTopology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequentPattern {
    pub pages: Vec<PageId>,
    /// Number of sessions containing `pages` as a contiguous run.
    pub support: usize,
}

/// Level-wise mining of contiguous patterns. Level `k` only counts windows
/// whose length-`k-1` prefix and suffix were frequent. Output is sorted by
/// length (longest first), then support (highest first), then pages.
pub fn mine_frequent(sessions: &[Vec<PageId>], min_support: usize) -> Vec<FrequentPattern> {
    let min_support = min_support.max(1);
    let mut found: Vec<FrequentPattern> = Vec::new();
    let mut frontier: HashSet<Vec<PageId>> = HashSet::new();

    for k in 1.. {
        let mut counts: HashMap<&[PageId], usize> = HashMap::new();
        for session in sessions {
            let mut in_session: HashSet<&[PageId]> = HashSet::new();
            for window in session.windows(k) {
                let extends_frequent =
                    k == 1 || (frontier.contains(&window[..k - 1]) && frontier.contains(&window[1..]));
                if extends_frequent && in_session.insert(window) {
                    *counts.entry(window).or_default() += 1;
                }
            }
        }
        let level: Vec<FrequentPattern> = counts
            .into_iter()
            .filter(|&(_, support)| support >= min_support)
            .map(|(pages, support)| FrequentPattern {
                pages: pages.to_vec(),
                support,
            })
            .collect();
        if level.is_empty() {
            break;
        }
        frontier = level.iter().map(|p| p.pages.clone()).collect();
        found.extend(level);
    }

    found.sort_by(|a, b| {
        b.pages
            .len()
            .cmp(&a.pages.len())
            .then(b.support.cmp(&a.support))
            .then_with(|| a.pages.cmp(&b.pages))
    });
    found
}

/// Lookup table from a context (a pattern minus its last page) to the best
/// continuation: highest support, then smallest page id.
#[derive(Debug, Clone, Default)]
pub struct Predictor {
    best: HashMap<Vec<PageId>, (PageId, usize)>,
    longest_context: usize,
}

impl Predictor {
    pub fn new(patterns: &[FrequentPattern]) -> Self {
        let mut best: HashMap<Vec<PageId>, (PageId, usize)> = HashMap::new();
        let mut longest_context = 0;
        for p in patterns.iter().filter(|p| p.pages.len() >= 2) {
            let (context, next) = p.pages.split_at(p.pages.len() - 1);
            let next = next[0];
            longest_context = longest_context.max(context.len());
            best.entry(context.to_vec())
                .and_modify(|cur| {
                    if p.support > cur.1 || (p.support == cur.1 && next < cur.0) {
                        *cur = (next, p.support);
                    }
                })
                .or_insert((next, p.support));
        }
        Predictor { best, longest_context }
    }

    /// Uses the longest suffix of `prefix` that some pattern continues.
    pub fn predict(&self, prefix: &[PageId]) -> Option<PageId> {
        let longest = prefix.len().min(self.longest_context);
        (1..=longest)
            .rev()
            .find_map(|len| self.best.get(&prefix[prefix.len() - len..]))
            .map(|&(page, _)| page)
    }
}

pub fn predict_next(patterns: &[FrequentPattern], prefix: &[PageId]) -> Option<PageId> {
    Predictor::new(patterns).predict(prefix)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodScores {
    pub method: Method,
    /// Share of ground-truth paths reproduced exactly.
    pub session_recall: f64,
    /// Share of reconstructed sessions equal to some ground-truth path.
    pub session_precision: f64,
    /// Share of held-out next-page queries answered correctly.
    pub next_page_accuracy: f64,
    pub sessions: usize,
    pub patterns: usize,
    pub queries: usize,
}

impl MethodScores {
    pub fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::SessionRecall => self.session_recall,
            Metric::SessionPrecision => self.session_precision,
            Metric::NextPageAccuracy => self.next_page_accuracy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SessionRecall,
    SessionPrecision,
    NextPageAccuracy,
}

impl Metric {
    pub const ALL: [Metric; 3] = [
        Metric::SessionRecall,
        Metric::SessionPrecision,
        Metric::NextPageAccuracy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SessionRecall => "session_recall",
            Metric::SessionPrecision => "session_precision",
            Metric::NextPageAccuracy => "next_page_accuracy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Improvement {
    pub method: Method,
    pub baseline: Method,
    pub metric: Metric,
    /// `method - baseline`.
    pub absolute: f64,
    /// `(method - baseline) / baseline`; infinite when only the baseline is 0.
    pub relative: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub methods: Vec<MethodScores>,
    pub improvements: Vec<Improvement>,
    pub test_users: usize,
    pub train_users: usize,
}

pub fn relative_improvement(value: f64, baseline: f64) -> f64 {
    if value == baseline {
        0.0
    } else if baseline == 0.0 {
        f64::INFINITY
    } else {
        (value - baseline) / baseline
    }
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".to_owned()
    } else {
        format!("{v:.6}")
    }
}

impl EvalReport {
    pub fn scores(&self, method: Method) -> Option<&MethodScores> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn improvement(&self, method: Method, baseline: Method, metric: Metric) -> Option<&Improvement> {
        self.improvements
            .iter()
            .find(|i| i.method == method && i.baseline == baseline && i.metric == metric)
    }

    /// Flat `key = value` listing.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "train_users = {}", self.train_users).unwrap();
        writeln!(out, "test_users = {}", self.test_users).unwrap();
        for m in &self.methods {
            let name = m.method.name();
            writeln!(out, "{name}.sessions = {}", m.sessions).unwrap();
            writeln!(out, "{name}.patterns = {}", m.patterns).unwrap();
            writeln!(out, "{name}.queries = {}", m.queries).unwrap();
            for metric in Metric::ALL {
                writeln!(out, "{name}.{} = {}", metric.name(), format_value(m.metric(metric))).unwrap();
            }
        }
        for i in &self.improvements {
            let key = format!("{}_vs_{}.{}", i.method, i.baseline, i.metric.name());
            writeln!(out, "{key}.absolute = {}", format_value(i.absolute)).unwrap();
            writeln!(out, "{key}.relative = {}", format_value(i.relative)).unwrap();
        }
        out
    }

    /// One `method<TAB>metric<TAB>value` record per line.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for m in &self.methods {
            for metric in Metric::ALL {
                writeln!(
                    out,
                    "{}\t{}\t{}",
                    m.method,
                    metric.name(),
                    format_value(m.metric(metric))
                )
                .unwrap();
            }
        }
        for i in &self.improvements {
            let method = format!("{}_vs_{}", i.method, i.baseline);
            writeln!(
                out,
                "{method}\t{}_absolute\t{}",
                i.metric.name(),
                format_value(i.absolute)
            )
            .unwrap();
            writeln!(
                out,
                "{method}\t{}_relative\t{}",
                i.metric.name(),
                format_value(i.relative)
            )
            .unwrap();
        }
        out
    }
}

/// 64-bit FNV-1a.
pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Users whose key hashes to 0 mod 5 are held out for prediction queries.
pub fn is_test_user(user: &str) -> bool {
    fnv1a(user.as_bytes()).is_multiple_of(5)
}

/// Fraction of `truth` matched by `found`, pairing equal (user, pages) items
/// one-to-one.
fn matched_fraction<'a>(
    truth: impl Iterator<Item = (&'a str, &'a [PageId])>,
    found: impl Iterator<Item = (&'a str, &'a [PageId])>,
) -> (usize, usize) {
    let mut available: HashMap<(&str, &[PageId]), usize> = HashMap::new();
    for key in found {
        *available.entry(key).or_default() += 1;
    }
    let (mut hits, mut total) = (0, 0);
    for key in truth {
        total += 1;
        if let Some(n) = available.get_mut(&key).filter(|n| **n > 0) {
            *n -= 1;
            hits += 1;
        }
    }
    (hits, total)
}

fn ratio(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Checks that every ground-truth path belongs to a user present in the log
/// and only uses pages that user requested.
pub fn check_truth_matches_log(log: &[PageRequest], truth: &GroundTruth) -> Result<()> {
    let mut requested: HashMap<&str, HashSet<PageId>> = HashMap::new();
    for r in log {
        requested.entry(r.user.as_str()).or_default().insert(r.page);
    }
    for path in &truth.paths {
        let Some(pages) = requested.get(path.user.as_str()) else {
            return Err(Error::TruthMismatch(format!("user `{}` has no requests", path.user)));
        };
        if let Some(p) = path.pages.iter().find(|p| !pages.contains(p)) {
            return Err(Error::TruthMismatch(format!(
                "user `{}` never requested page {p} of session {}",
                path.user, path.session
            )));
        }
    }
    Ok(())
}

fn score_method(
    method: Method,
    sessions: &[ReconstructedSession],
    truth: &GroundTruth,
    min_support: usize,
) -> MethodScores {
    let truth_keys = || truth.paths.iter().map(|p| (p.user.as_str(), p.pages.as_slice()));
    let found_keys = || sessions.iter().map(|s| (s.user.as_str(), s.pages.as_slice()));
    let (recalled, truth_total) = matched_fraction(truth_keys(), found_keys());
    let (precise, found_total) = matched_fraction(found_keys(), truth_keys());

    let train: Vec<Vec<PageId>> = sessions
        .iter()
        .filter(|s| !is_test_user(&s.user))
        .map(|s| s.pages.clone())
        .collect();
    let patterns = mine_frequent(&train, min_support);
    let predictor = Predictor::new(&patterns);
    let (mut correct, mut queries) = (0, 0);
    for path in truth.paths.iter().filter(|p| is_test_user(&p.user)) {
        for cut in 1..path.pages.len() {
            queries += 1;
            if predictor.predict(&path.pages[..cut]) == Some(path.pages[cut]) {
                correct += 1;
            }
        }
    }

    MethodScores {
        method,
        session_recall: ratio(recalled, truth_total),
        session_precision: ratio(precise, found_total),
        next_page_accuracy: ratio(correct, queries),
        sessions: sessions.len(),
        patterns: patterns.len(),
        queries,
    }
}

/// Scores `methods` on one simulated log. Improvements are reported for the
/// first method over each of the others.
pub fn evaluate_methods(
    log: &[PageRequest],
    truth: &GroundTruth,
    topology: &WebTopology,
    th: &Thresholds,
    min_support: usize,
    methods: &[Method],
    exec: Execution,
) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::EmptyTruth);
    }
    if methods.is_empty() {
        return Err(Error::InvalidConfig("no reconstruction method selected".into()));
    }
    check_truth_matches_log(log, truth)?;

    let users = group_by_user(log.to_vec());
    let test_users = users.iter().filter(|u| is_test_user(&u.user)).count();
    let scores = exec.try_map(methods, |&method| {
        // users are already fanned out per method; avoid nesting thread pools
        let sessions = reconstruct_all(method, &users, topology, th, Execution::Sequential)?;
        Ok::<_, Error>(score_method(method, &sessions, truth, min_support))
    })?;

    let reference = &scores[0];
    let mut improvements = Vec::new();
    for other in &scores[1..] {
        for metric in Metric::ALL {
            let (a, b) = (reference.metric(metric), other.metric(metric));
            improvements.push(Improvement {
                method: reference.method,
                baseline: other.method,
                metric,
                absolute: a - b,
                relative: relative_improvement(a, b),
            });
        }
    }

    Ok(EvalReport {
        methods: scores,
        improvements,
        test_users,
        train_users: users.len() - test_users,
    })
}

/// Scores the link-based method against both heuristics.
pub fn evaluate(
    log: &[PageRequest],
    truth: &GroundTruth,
    topology: &WebTopology,
    th: &Thresholds,
    min_support: usize,
) -> Result<EvalReport> {
    evaluate_methods(
        log,
        truth,
        topology,
        th,
        min_support,
        &Method::ALL,
        Execution::default(),
    )
}
