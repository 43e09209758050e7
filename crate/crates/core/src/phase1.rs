//! Splitting a user's request stream into candidate sessions using the
//! page-stay and session-duration thresholds.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::log_ingest::UserRequestSequence;
use crate::topology::PageId;

/// One page view inside a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Visit {
    pub page: PageId,
    pub time: u64,
}

impl Visit {
    pub fn new(page: PageId, time: u64) -> Self {
        Visit { page, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Thresholds {
    /// Consecutive page views in a session are strictly less than this many
    /// seconds apart.
    pub page_stay_delta: u64,
    /// First to last page view of a session spans at most this many seconds.
    pub session_duration_cap: u64,
}

impl Thresholds {
    pub const DEFAULT_PAGE_STAY: u64 = 600;
    pub const DEFAULT_SESSION_CAP: u64 = 1800;

    pub fn new(page_stay_delta: u64, session_duration_cap: u64) -> Result<Self> {
        if page_stay_delta == 0 || session_duration_cap == 0 {
            return Err(Error::InvalidConfig("thresholds must be positive".into()));
        }
        if page_stay_delta > session_duration_cap {
            return Err(Error::InvalidConfig(format!(
                "page stay {page_stay_delta}s exceeds session cap {session_duration_cap}s"
            )));
        }
        Ok(Thresholds {
            page_stay_delta,
            session_duration_cap,
        })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            page_stay_delta: Self::DEFAULT_PAGE_STAY,
            session_duration_cap: Self::DEFAULT_SESSION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSession {
    pub user: String,
    pub entries: Vec<Visit>,
}

impl CandidateSession {
    pub fn new(user: impl Into<String>, entries: Vec<Visit>) -> Self {
        CandidateSession {
            user: user.into(),
            entries,
        }
    }

    pub fn pages(&self) -> Vec<PageId> {
        self.entries.iter().map(|v| v.page).collect()
    }

    pub fn has_unique_pages(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.entries.len());
        self.entries.iter().all(|v| seen.insert(v.page))
    }

    /// Checks every candidate-session invariant, naming the first violation.
    pub fn check(&self, th: &Thresholds) -> Result<(), String> {
        let (Some(first), Some(last)) = (self.entries.first(), self.entries.last()) else {
            return Err("empty session".into());
        };
        if !self.has_unique_pages() {
            return Err("repeated page".into());
        }
        for pair in self.entries.windows(2) {
            if pair[1].time < pair[0].time {
                return Err("timestamps decrease".into());
            }
            if pair[1].time - pair[0].time >= th.page_stay_delta {
                return Err(format!("gap {}s not below page stay", pair[1].time - pair[0].time));
            }
        }
        if last.time - first.time > th.session_duration_cap {
            return Err(format!("duration {}s above cap", last.time - first.time));
        }
        Ok(())
    }
}

/// Left-to-right scan that opens a new session on the first request, on a gap
/// of at least `page_stay_delta` since the last kept request, or when the
/// request falls more than `session_duration_cap` after the session start.
/// A page already present in the open session is dropped entirely.
pub fn build_candidate_sessions(seq: &UserRequestSequence, th: &Thresholds) -> Result<Vec<CandidateSession>> {
    if let Some(i) = seq.requests.windows(2).position(|w| w[1].time < w[0].time) {
        return Err(Error::Unsorted {
            user: seq.user.clone(),
            position: i + 1,
        });
    }

    let mut sessions = Vec::new();
    let mut current: Vec<Visit> = Vec::new();
    let mut seen: HashSet<PageId> = HashSet::new();

    for request in &seq.requests {
        let split = match (current.first(), current.last()) {
            (Some(start), Some(prev)) => {
                request.time - prev.time >= th.page_stay_delta || request.time - start.time > th.session_duration_cap
            }
            _ => false,
        };
        if split {
            sessions.push(CandidateSession::new(&seq.user, std::mem::take(&mut current)));
            seen.clear();
        }
        if seen.insert(request.page) {
            current.push(Visit::new(request.page, request.time));
        }
    }
    if !current.is_empty() {
        sessions.push(CandidateSession::new(&seq.user, current));
    }
    Ok(sessions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_ingest::PageRequest;

    fn seq(items: &[(u32, u64)]) -> UserRequestSequence {
        UserRequestSequence {
            user: "u".into(),
            requests: items
                .iter()
                .map(|&(p, t)| PageRequest {
                    user: "u".into(),
                    page: PageId(p),
                    time: t,
                })
                .collect(),
        }
    }

    fn shape(sessions: &[CandidateSession]) -> Vec<Vec<u32>> {
        sessions
            .iter()
            .map(|s| s.pages().iter().map(|p| p.0).collect())
            .collect()
    }

    #[test]
    fn gap_split() {
        let out = build_candidate_sessions(&seq(&[(0, 0), (1, 300), (2, 2000)]), &Thresholds::default()).unwrap();
        assert_eq!(shape(&out), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn duration_split() {
        let s = seq(&[(0, 0), (1, 500), (2, 1000), (3, 1500), (4, 2000)]);
        let out = build_candidate_sessions(&s, &Thresholds::default()).unwrap();
        assert_eq!(shape(&out), vec![vec![0, 1, 2, 3], vec![4]]);
    }

    #[test]
    fn duration_bound_is_inclusive() {
        let th = Thresholds::new(600, 1000).unwrap();
        let out = build_candidate_sessions(&seq(&[(0, 0), (1, 500), (2, 1000)]), &th).unwrap();
        assert_eq!(out.len(), 1);
        let out = build_candidate_sessions(&seq(&[(0, 0), (1, 500), (2, 1001)]), &th).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn gap_equal_to_delta_splits() {
        let out = build_candidate_sessions(&seq(&[(0, 0), (1, 600)]), &Thresholds::default()).unwrap();
        assert_eq!(out.len(), 2);
        let out = build_candidate_sessions(&seq(&[(0, 0), (1, 599)]), &Thresholds::default()).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn repeated_page_is_dropped() {
        let out = build_candidate_sessions(&seq(&[(0, 0), (1, 1), (0, 2), (2, 3)]), &Thresholds::default()).unwrap();
        assert_eq!(shape(&out), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn dropped_repeat_does_not_count_as_last_request() {
        // gap is measured from the kept view at 0, not the dropped one at 500
        let out = build_candidate_sessions(&seq(&[(0, 0), (0, 500), (1, 1000)]), &Thresholds::default()).unwrap();
        assert_eq!(shape(&out), vec![vec![0], vec![1]]);
    }

    #[test]
    fn repeat_after_split_is_kept() {
        let out = build_candidate_sessions(&seq(&[(0, 0), (0, 5000)]), &Thresholds::default()).unwrap();
        assert_eq!(shape(&out), vec![vec![0], vec![0]]);
    }

    #[test]
    fn empty_and_unsorted() {
        assert!(build_candidate_sessions(&seq(&[]), &Thresholds::default())
            .unwrap()
            .is_empty());
        let err = build_candidate_sessions(&seq(&[(0, 10), (1, 5)]), &Thresholds::default()).unwrap_err();
        assert!(matches!(err, Error::Unsorted { position: 1, .. }));
    }

    #[test]
    fn threshold_validation() {
        assert!(Thresholds::new(0, 10).is_err());
        assert!(Thresholds::new(10, 0).is_err());
        assert!(Thresholds::new(20, 10).is_err());
        assert!(Thresholds::new(10, 10).is_ok());
    }

    #[test]
    fn check_names_violations() {
        let th = Thresholds::default();
        let v = |p, t| Visit::new(PageId(p), t);
        assert!(CandidateSession::new("u", vec![]).check(&th).is_err());
        assert!(CandidateSession::new("u", vec![v(0, 0), v(0, 1)]).check(&th).is_err());
        assert!(CandidateSession::new("u", vec![v(0, 0), v(1, 700)]).check(&th).is_err());
        assert!(CandidateSession::new("u", vec![v(0, 0), v(1, 10)]).check(&th).is_ok());
    }
}
