//! Exhaustive reference for maximal path enumeration, plus the seeded random
//! instances used to cross-check [`mpvs`](crate::mpvs) against it.
//!
//! The reference works straight from the definition: list every
//! index-increasing subsequence of the session whose consecutive pages are
//! linked and less than `delta` seconds apart, then drop each one that occurs
//! as a proper contiguous run inside another. It is exponential in the
//! session length and refuses sessions above [`OracleLimits`].

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::phase1::{CandidateSession, Visit};
use crate::topology::{PageId, WebTopology};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_session_length: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_session_length: 16 }
    }
}

pub type PathSet = BTreeSet<Vec<PageId>>;

pub fn brute_force_maximal(
    session: &CandidateSession,
    topology: &WebTopology,
    delta: u64,
    limits: OracleLimits,
) -> Result<PathSet> {
    let entries = &session.entries;
    if entries.len() > limits.max_session_length {
        return Err(Error::OracleLimit {
            length: entries.len(),
            limit: limits.max_session_length,
        });
    }

    let mut feasible: Vec<Vec<PageId>> = Vec::new();
    for mask in 1u32..(1u32 << entries.len()) {
        let picked: Vec<Visit> = (0..entries.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| entries[i])
            .collect();
        let mut ok = true;
        for pair in picked.windows(2) {
            if !topology.has_link(pair[0].page, pair[1].page)? || pair[1].time.saturating_sub(pair[0].time) >= delta {
                ok = false;
                break;
            }
        }
        if ok {
            feasible.push(picked.iter().map(|v| v.page).collect());
        }
    }

    let mut covered: HashSet<&[PageId]> = HashSet::new();
    for path in &feasible {
        for len in 1..path.len() {
            covered.extend(path.windows(len));
        }
    }
    Ok(feasible
        .iter()
        .filter(|p| !covered.contains(p.as_slice()))
        .cloned()
        .collect())
}

/// One randomly drawn cross-check case.
#[derive(Debug, Clone)]
pub struct Instance {
    pub topology: WebTopology,
    pub session: CandidateSession,
    pub delta: u64,
    /// Probability each ordered page pair (self-loops included) was linked.
    pub edge_probability: f64,
}

pub const EDGE_PROBABILITIES: [f64; 3] = [0.2, 0.4, 0.6];

/// Draws a topology of 1..=`max_pages` pages, a session over a random
/// ordering of distinct pages, and a page-stay threshold at roughly the 80th
/// percentile of the time differences between linked session pairs, so that
/// about a fifth of the linked pairs are too far apart.
pub fn random_instance<R: Rng>(rng: &mut R, max_pages: usize) -> Instance {
    let page_count = rng.gen_range(1..=max_pages.max(1));
    let edge_probability = *EDGE_PROBABILITIES.choose(rng).unwrap();

    let mut topology = WebTopology::new();
    let pages: Vec<PageId> = (0..page_count).map(|i| topology.intern(&format!("p{i}"))).collect();
    for &from in &pages {
        for &to in &pages {
            if rng.gen_bool(edge_probability) {
                topology.add_edge(from, to).unwrap();
            }
        }
    }

    let length = rng.gen_range(1..=page_count);
    let mut time = 0;
    let entries: Vec<Visit> = index::sample(rng, page_count, length)
        .into_iter()
        .map(|i| {
            time += rng.gen_range(1..=120);
            Visit::new(pages[i], time)
        })
        .collect();

    let mut gaps = Vec::new();
    for (i, a) in entries.iter().enumerate() {
        for b in &entries[i + 1..] {
            if topology.has_link(a.page, b.page).unwrap() {
                gaps.push(b.time - a.time);
            }
        }
    }
    gaps.sort_unstable();
    let cut = (gaps.len() as f64 * 0.8).round() as usize;
    let delta = match gaps.get(cut) {
        Some(&g) => g,
        None => gaps.last().map_or(60, |g| g + 1),
    };

    Instance {
        topology,
        session: CandidateSession::new("oracle", entries),
        delta,
        edge_probability,
    }
}

/// Instance `index` of the stream identified by `seed`. Each instance has
/// its own generator stream, so instances can be drawn in any order.
pub fn seeded_instance(seed: u64, index: u64, max_pages: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    random_instance(&mut rng, max_pages)
}

/// A disagreement between the reference and a reconstructor.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub index: u64,
    pub instance: Instance,
    pub expected: PathSet,
    pub actual: PathSet,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.instance.topology;
        let name = |p: &PageId| t.url(*p).unwrap_or("?").to_owned();
        let render = |set: &PathSet| {
            set.iter()
                .map(|p| format!("[{}]", p.iter().map(name).collect::<Vec<_>>().join(",")))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(f, "instance {}: delta={}", self.index, self.instance.delta)?;
        write!(f, "edges:")?;
        for (a, b) in t.edges() {
            write!(f, " {}->{}", name(a), name(b))?;
        }
        writeln!(f)?;
        write!(f, "session:")?;
        for v in &self.instance.session.entries {
            write!(f, " {}@{}", name(&v.page), v.time)?;
        }
        writeln!(f)?;
        writeln!(f, "expected: {}", render(&self.expected))?;
        write!(f, "actual:   {}", render(&self.actual))
    }
}

/// Checks `count` seeded instances, returning the first mismatch (lowest
/// index) if any.
pub fn check_instances<F>(
    seed: u64,
    count: u64,
    max_pages: usize,
    exec: Execution,
    reconstruct: F,
) -> Result<Option<Counterexample>>
where
    F: Fn(&CandidateSession, &WebTopology, u64) -> Result<PathSet> + Sync + Send,
{
    let limits = OracleLimits {
        max_session_length: max_pages.max(1),
    };
    let indices: Vec<u64> = (0..count).collect();
    let outcomes = exec.try_map(&indices, |&index| -> Result<Option<Counterexample>> {
        let instance = seeded_instance(seed, index, max_pages);
        let expected = brute_force_maximal(&instance.session, &instance.topology, instance.delta, limits)?;
        let actual = reconstruct(&instance.session, &instance.topology, instance.delta)?;
        Ok((expected != actual).then_some(Counterexample {
            index,
            instance,
            expected,
            actual,
        }))
    })?;
    Ok(outcomes.into_iter().flatten().next())
}

/// The production reconstructor in the shape [`check_instances`] expects.
pub fn csra_paths(session: &CandidateSession, topology: &WebTopology, delta: u64) -> Result<PathSet> {
    Ok(crate::mpvs::process_session(session, topology, delta)?
        .iter()
        .map(|s| s.pages())
        .collect())
}
