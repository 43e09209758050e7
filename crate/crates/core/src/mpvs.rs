//! Enumeration of every maximal navigation sequence inside a candidate
//! session (maximal paths in a vertex sequence).
//!
//! Each page of the session is offered, left to right, to every sequence in
//! the temporary pool. A sequence accepts a page when its last page links to
//! it and the two views are less than `delta` seconds apart; acceptance spawns
//! a new, longer sequence and marks the parent non-maximal. A page nobody
//! accepted starts a singleton sequence.
//!
//! Every sequence carries a degree: the out-degree of its last page at
//! creation, minus one per accepted extension. A sequence whose degree hits
//! zero cannot grow any further, so it leaves the temporary pool; new
//! sequences created with degree zero go straight to the final pool. At the
//! end of the session, temporary sequences still marked maximal join the
//! final pool.

use std::fmt;

use crate::error::Result;
use crate::exec::Execution;
use crate::phase1::{CandidateSession, Visit};
use crate::topology::{PageId, WebTopology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NavSequence {
    pub visits: Vec<Visit>,
    /// Remaining extension budget.
    pub degree: usize,
    pub maximal: bool,
}

impl NavSequence {
    pub fn pages(&self) -> Vec<PageId> {
        self.visits.iter().map(|v| v.page).collect()
    }

    pub fn last(&self) -> Visit {
        *self.visits.last().expect("navigation sequences are never empty")
    }

    pub fn len(&self) -> usize {
        self.visits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.visits.is_empty()
    }
}

/// Renders as `<[#0, #3]:1:T>`.
impl fmt::Display for NavSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<[")?;
        for (i, v) in self.visits.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", v.page)?;
        }
        write!(f, "]:{}:{}>", self.degree, if self.maximal { 'T' } else { 'F' })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extension {
    /// Link or time test failed; nothing changed.
    Rejected,
    /// A new sequence was created from the parent. `parent_retired` is set
    /// when the parent's degree reached zero and it left the temporary pool.
    Accepted { parent_retired: bool },
}

/// Working state for one candidate session.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SessionPools {
    /// Sequences that may still grow (degree > 0).
    pub temp: Vec<NavSequence>,
    /// Maximal sequences that can no longer grow.
    pub final_set: Vec<NavSequence>,
    /// Set when some sequence accepted the page currently being processed.
    pub flag: bool,
    last_admitted_final: bool,
}

impl SessionPools {
    pub fn new() -> Self {
        Self::default()
    }

    fn admit(&mut self, seq: NavSequence) {
        self.last_admitted_final = seq.degree == 0;
        if seq.degree == 0 {
            self.final_set.push(seq);
        } else {
            self.temp.push(seq);
        }
    }

    /// Starts a singleton sequence at `visit`.
    pub fn initialize(&mut self, visit: Visit, topology: &WebTopology) -> Result<()> {
        let degree = topology.out_degree(visit.page)?;
        self.admit(NavSequence {
            visits: vec![visit],
            degree,
            maximal: true,
        });
        Ok(())
    }

    /// Offers `visit` to `temp[index]`. On success the new sequence is
    /// appended to the end of `temp` (or to `final_set` when its degree is
    /// zero), so indices below `index` are never disturbed.
    pub fn extend(&mut self, index: usize, visit: Visit, topology: &WebTopology, delta: u64) -> Result<Extension> {
        let last = self.temp[index].last();
        let linked = topology.has_link(last.page, visit.page)?;
        let in_time = visit.time.saturating_sub(last.time) < delta;
        if !(linked && in_time) {
            return Ok(Extension::Rejected);
        }
        debug_assert!(self.temp[index].visits.iter().all(|v| v.page != visit.page));

        self.flag = true;
        let parent = &mut self.temp[index];
        parent.degree -= 1;
        parent.maximal = false;
        let mut visits = Vec::with_capacity(parent.visits.len() + 1);
        visits.extend_from_slice(&parent.visits);
        visits.push(visit);
        let parent_retired = parent.degree == 0;

        let degree = topology.out_degree(visit.page)?;
        self.admit(NavSequence {
            visits,
            degree,
            maximal: true,
        });
        if parent_retired {
            self.temp.remove(index);
        }
        Ok(Extension::Accepted { parent_retired })
    }

    /// Processes one page: every sequence present in `temp` before the call
    /// is offered the page once; sequences created meanwhile are not.
    pub fn process_page(&mut self, visit: Visit, topology: &WebTopology, delta: u64) -> Result<()> {
        self.process_page_logged(visit, topology, delta, None)
    }

    fn process_page_logged(
        &mut self,
        visit: Visit,
        topology: &WebTopology,
        delta: u64,
        mut log: Option<&mut PageLog>,
    ) -> Result<()> {
        self.flag = false;
        let mut index = 0;
        let mut remaining = self.temp.len();
        while remaining > 0 {
            remaining -= 1;
            let outcome = self.extend(index, visit, topology, delta)?;
            if let (Extension::Accepted { parent_retired }, Some(log)) = (outcome, log.as_deref_mut()) {
                let parent = if parent_retired {
                    // retired parents always end with degree 0, non-maximal
                    let mut visits = self.newest().visits.clone();
                    visits.pop();
                    NavSequence {
                        visits,
                        degree: 0,
                        maximal: false,
                    }
                } else {
                    self.temp[index].clone()
                };
                log.extended.push(parent);
                log.created.push(self.newest().clone());
            }
            match outcome {
                Extension::Accepted { parent_retired: true } => {}
                _ => index += 1,
            }
        }
        if !self.flag {
            self.initialize(visit, topology)?;
            if let Some(log) = log {
                log.created.push(self.newest().clone());
            }
        }
        Ok(())
    }

    // The sequence admitted last.
    fn newest(&self) -> &NavSequence {
        let pool = if self.last_admitted_final {
            &self.final_set
        } else {
            &self.temp
        };
        pool.last().expect("a sequence was admitted")
    }

    /// Moves the still-maximal temporary sequences into the final pool and
    /// returns it. Non-maximal leftovers are dropped.
    pub fn finish(mut self) -> Vec<NavSequence> {
        self.final_set.extend(self.temp.into_iter().filter(|s| s.maximal));
        self.final_set
    }
}

/// Pool contents around one processed page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PageStep {
    pub visit: Visit,
    pub temp_before: Vec<NavSequence>,
    /// Parents that accepted the page, in their post-extension state.
    pub extended: Vec<NavSequence>,
    pub created: Vec<NavSequence>,
    pub temp_after: Vec<NavSequence>,
    pub final_after: Vec<NavSequence>,
}

/// Returns the final set of one candidate session.
pub fn process_session(session: &CandidateSession, topology: &WebTopology, delta: u64) -> Result<Vec<NavSequence>> {
    debug_assert!(session.has_unique_pages());
    let mut pools = SessionPools::new();
    for &visit in &session.entries {
        pools.process_page(visit, topology, delta)?;
    }
    Ok(pools.finish())
}

/// Same as [`process_session`], also recording the pools after every page.
pub fn trace_session(
    session: &CandidateSession,
    topology: &WebTopology,
    delta: u64,
) -> Result<(Vec<PageStep>, Vec<NavSequence>)> {
    let mut pools = SessionPools::new();
    let mut steps = Vec::with_capacity(session.entries.len());
    for &visit in &session.entries {
        let temp_before = pools.temp.clone();
        let mut log = PageLog::default();
        pools.process_page_logged(visit, topology, delta, Some(&mut log))?;
        steps.push(PageStep {
            visit,
            temp_before,
            extended: log.extended,
            created: log.created,
            temp_after: pools.temp.clone(),
            final_after: pools.final_set.clone(),
        });
    }
    Ok((steps, pools.finish()))
}

#[derive(Default)]
struct PageLog {
    extended: Vec<NavSequence>,
    created: Vec<NavSequence>,
}

/// A maximal sequence tagged with where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionSequence {
    pub user: String,
    /// Position of the originating candidate session in the input list.
    pub session: usize,
    pub sequence: NavSequence,
}

/// Maximal sequences of every candidate session of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MaximalSessionSet {
    pub sequences: Vec<SessionSequence>,
}

impl MaximalSessionSet {
    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    /// Page lists of the sequences that came from candidate session `session`.
    pub fn of_session(&self, session: usize) -> Vec<Vec<PageId>> {
        self.sequences
            .iter()
            .filter(|s| s.session == session)
            .map(|s| s.sequence.pages())
            .collect()
    }
}

/// Runs every candidate session through fresh pools and collects the
/// results, sorted by (user, page list, session position).
pub fn csra_phase2(
    sessions: &[CandidateSession],
    topology: &WebTopology,
    delta: u64,
    exec: Execution,
) -> Result<MaximalSessionSet> {
    let indexed: Vec<(usize, &CandidateSession)> = sessions.iter().enumerate().collect();
    let per_session = exec.try_map(&indexed, |&(i, session)| {
        process_session(session, topology, delta).map(|finals| {
            finals
                .into_iter()
                .map(|sequence| SessionSequence {
                    user: session.user.clone(),
                    session: i,
                    sequence,
                })
                .collect::<Vec<_>>()
        })
    })?;
    let mut sequences: Vec<SessionSequence> = per_session.into_iter().flatten().collect();
    sequences.sort_by(|a, b| (&a.user, a.sequence.pages(), a.session).cmp(&(&b.user, b.sequence.pages(), b.session)));
    Ok(MaximalSessionSet { sequences })
}
