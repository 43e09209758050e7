//! Reconstruction methods compared against each other: the link-based
//! maximal-path method and two heuristics that either ignore the topology or
//! patch gaps in it with artificial backward moves.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::log_ingest::UserRequestSequence;
use crate::mpvs::process_session;
use crate::phase1::{build_candidate_sessions, CandidateSession, Thresholds};
use crate::topology::{PageId, WebTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    TimeOriented,
    NavigationOriented,
    Csra,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Csra, Method::TimeOriented, Method::NavigationOriented];

    pub fn name(self) -> &'static str {
        match self {
            Method::TimeOriented => "time",
            Method::NavigationOriented => "nav",
            Method::Csra => "csra",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "time" => Ok(Method::TimeOriented),
            "nav" => Ok(Method::NavigationOriented),
            "csra" => Ok(Method::Csra),
            other => Err(Error::InvalidConfig(format!("unknown algorithm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ReconstructedSession {
    pub user: String,
    pub pages: Vec<PageId>,
    pub method: Method,
}

/// Candidate sessions taken as final sessions; no topology involved.
pub fn time_oriented(seq: &UserRequestSequence, th: &Thresholds) -> Result<Vec<ReconstructedSession>> {
    Ok(build_candidate_sessions(seq, th)?
        .into_iter()
        .map(|s| ReconstructedSession {
            user: s.user.clone(),
            pages: s.pages(),
            method: Method::TimeOriented,
        })
        .collect())
}

/// Stack-based referrer-free heuristic. Within each candidate session a page
/// that is not linked from the top of the navigation stack makes the user
/// "go back": pages are popped and the newly exposed page is appended to the
/// session, until some exposed page links to the request. If the stack runs
/// dry the tentative backward moves are discarded and a new session starts.
pub fn navigation_oriented(
    seq: &UserRequestSequence,
    topology: &WebTopology,
    th: &Thresholds,
) -> Result<Vec<ReconstructedSession>> {
    let mut out = Vec::new();
    for candidate in build_candidate_sessions(seq, th)? {
        for pages in backtrack_paths(&candidate, topology)? {
            out.push(ReconstructedSession {
                user: candidate.user.clone(),
                pages,
                method: Method::NavigationOriented,
            });
        }
    }
    Ok(out)
}

fn backtrack_paths(candidate: &CandidateSession, topology: &WebTopology) -> Result<Vec<Vec<PageId>>> {
    let mut sessions = Vec::new();
    let mut pages: Vec<PageId> = Vec::new();
    let mut stack: Vec<PageId> = Vec::new();

    for visit in &candidate.entries {
        let page = visit.page;
        let mut linked = match stack.last() {
            None => true,
            Some(&top) => topology.has_link(top, page)?,
        };
        if !linked {
            let rollback = pages.len();
            let depth = stack.len();
            while stack.len() > 1 {
                stack.pop();
                let exposed = *stack.last().unwrap();
                pages.push(exposed);
                if topology.has_link(exposed, page)? {
                    linked = true;
                    break;
                }
            }
            if !linked {
                debug_assert!(depth > 0);
                pages.truncate(rollback);
                sessions.push(std::mem::take(&mut pages));
                stack.clear();
            }
        }
        stack.push(page);
        pages.push(page);
    }
    if !pages.is_empty() {
        sessions.push(pages);
    }
    Ok(sessions)
}

/// Link-based reconstruction: every maximal sequence of every candidate
/// session, in the order [`process_session`] emits them.
pub fn csra(seq: &UserRequestSequence, topology: &WebTopology, th: &Thresholds) -> Result<Vec<ReconstructedSession>> {
    let mut out = Vec::new();
    for candidate in build_candidate_sessions(seq, th)? {
        for nav in process_session(&candidate, topology, th.page_stay_delta)? {
            out.push(ReconstructedSession {
                user: candidate.user.clone(),
                pages: nav.pages(),
                method: Method::Csra,
            });
        }
    }
    Ok(out)
}

pub fn reconstruct(
    method: Method,
    seq: &UserRequestSequence,
    topology: &WebTopology,
    th: &Thresholds,
) -> Result<Vec<ReconstructedSession>> {
    match method {
        Method::TimeOriented => time_oriented(seq, th),
        Method::NavigationOriented => navigation_oriented(seq, topology, th),
        Method::Csra => csra(seq, topology, th),
    }
}

/// Reconstructs every user with `method`, users fanned out per `exec`.
/// Output is sorted by (user, pages).
pub fn reconstruct_all(
    method: Method,
    users: &[UserRequestSequence],
    topology: &WebTopology,
    th: &Thresholds,
    exec: Execution,
) -> Result<Vec<ReconstructedSession>> {
    let per_user = exec.try_map(users, |seq| reconstruct(method, seq, topology, th))?;
    let mut all: Vec<ReconstructedSession> = per_user.into_iter().flatten().collect();
    all.sort();
    Ok(all)
}
