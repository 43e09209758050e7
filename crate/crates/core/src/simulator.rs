//! Synthetic site topologies and agent-driven request logs with known
//! ground-truth navigation paths.
//!
//! All randomness comes from one ChaCha8 stream seeded with
//! `SimConfig::seed` (`ChaCha8Rng::seed_from_u64`). It is consumed in a fixed
//! order: the topology first, page by page, then every user in index order,
//! session by session.
//!
//! Within a session an agent keeps a tree of visited pages. Each step it
//! either follows a link from the page it viewed last (continuing its current
//! path) or, with `branch_probability`, returns to an earlier page that
//! already has a child and opens a different link from there, which starts a
//! new true path sharing that prefix (a second tab, say). Every root-to-leaf
//! branch of the tree is one ground-truth path.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::log_ingest::PageRequest;
use crate::phase1::Thresholds;
use crate::topology::{PageId, WebTopology};

/// Base timestamp of generated logs.
pub const START_EPOCH: u64 = 1_700_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub page_count: usize,
    /// Mean out-degree of generated pages.
    pub edges_per_page: f64,
    pub user_count: usize,
    pub sessions_per_user: usize,
    /// Inclusive bounds on the number of page views per session.
    pub path_length: (usize, usize),
    pub branch_probability: f64,
    /// Half-open range `[min, max)` of seconds between consecutive views.
    pub think_time: (u64, u64),
    /// Seconds between the last view of a session and the next session.
    pub inter_session_gap: u64,
    pub thresholds: Thresholds,
    /// Never open a page that some other recently viewed page of the session
    /// also links to, so the log admits exactly one link-valid explanation.
    pub unambiguous: bool,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            page_count: 100,
            edges_per_page: 3.0,
            user_count: 50,
            sessions_per_user: 10,
            path_length: (2, 8),
            branch_probability: 0.4,
            think_time: (30, 300),
            inter_session_gap: 3600,
            thresholds: Thresholds::default(),
            unambiguous: false,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.page_count == 0 || self.sessions_per_user == 0 || self.path_length.0 == 0 {
            return fail("page count, sessions per user and path length must be positive".into());
        }
        if !(self.edges_per_page.is_finite() && self.edges_per_page > 0.0) {
            return fail(format!("edges per page must be positive, got {}", self.edges_per_page));
        }
        if self.path_length.0 > self.path_length.1 {
            return fail(format!("path length range {:?} is empty", self.path_length));
        }
        if !(0.0..=1.0).contains(&self.branch_probability) {
            return fail(format!("branch probability {} outside [0, 1]", self.branch_probability));
        }
        let (lo, hi) = self.think_time;
        if lo == 0 || lo >= hi || hi > self.thresholds.page_stay_delta {
            return fail(format!(
                "think time [{lo}, {hi}) must be non-empty, positive and within the page stay of {}s",
                self.thresholds.page_stay_delta
            ));
        }
        if self.inter_session_gap <= self.thresholds.session_duration_cap {
            return fail(format!(
                "inter-session gap {}s must exceed the session cap of {}s",
                self.inter_session_gap, self.thresholds.session_duration_cap
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TruePath {
    pub user: String,
    /// Session number within the user, from 0.
    pub session: usize,
    pub pages: Vec<PageId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub paths: Vec<TruePath>,
}

impl GroundTruth {
    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// One `user<TAB>session<TAB>url,url,...` line per path.
    pub fn save<W: Write>(&self, topology: &WebTopology, mut sink: W) -> Result<()> {
        for path in &self.paths {
            let urls = path
                .pages
                .iter()
                .map(|&p| topology.url(p))
                .collect::<Result<Vec<_>>>()?;
            writeln!(sink, "{}\t{}\t{}", path.user, path.session, urls.join(","))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(source: R, topology: &WebTopology) -> Result<Self> {
        let mut paths = Vec::new();
        for (n, line) in source.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: n + 1, message };
            let fields: Vec<&str> = line.split('\t').collect();
            let [user, session, urls] = fields[..] else {
                return Err(parse_err(format!(
                    "expected 3 tab-separated fields, found {}",
                    fields.len()
                )));
            };
            let session = session
                .parse()
                .map_err(|_| parse_err(format!("invalid session index `{session}`")))?;
            let pages = urls
                .split(',')
                .map(|u| {
                    topology
                        .page_id(u)
                        .ok_or_else(|| parse_err(format!("unknown page `{u}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            paths.push(TruePath {
                user: user.to_owned(),
                session,
                pages,
            });
        }
        Ok(GroundTruth { paths })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub topology: WebTopology,
    /// All users' requests, sorted by time (ties keep user order).
    pub requests: Vec<PageRequest>,
    pub truth: GroundTruth,
}

impl Simulation {
    /// Writes the requests as `user,url,epoch_seconds` rows.
    pub fn save_log<W: Write>(&self, mut sink: W) -> Result<()> {
        for r in &self.requests {
            writeln!(sink, "{},{},{}", r.user, self.topology.url(r.page)?, r.time)?;
        }
        Ok(())
    }
}

pub fn page_url(index: usize) -> String {
    format!("/p{index}")
}

pub fn user_key(index: usize) -> String {
    format!("u{index}")
}

/// Random directed graph without self-loops. Each page gets a uniformly
/// drawn out-degree in `0..=floor(2 * edges_per_page)` (capped by the page
/// count) and that many distinct random targets.
pub fn generate_topology(cfg: &SimConfig) -> Result<WebTopology> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(build_topology(cfg, &mut rng))
}

fn build_topology<R: Rng>(cfg: &SimConfig, rng: &mut R) -> WebTopology {
    let n = cfg.page_count;
    let mut topology = WebTopology::new();
    let pages: Vec<PageId> = (0..n).map(|i| topology.intern(&page_url(i))).collect();
    let spread = 2.0 * cfg.edges_per_page + 1.0;
    for (i, &from) in pages.iter().enumerate() {
        let degree = ((rng.gen::<f64>() * spread) as usize).min(n - 1);
        let mut targets: Vec<usize> = index::sample(rng, n - 1, degree)
            .into_iter()
            .map(|j| if j >= i { j + 1 } else { j })
            .collect();
        targets.sort_unstable();
        for j in targets {
            topology.add_edge(from, pages[j]).expect("generated ids are valid");
        }
    }
    // an isolated page cannot be written to an edge list, so give it one link out
    let mut linked = vec![false; n];
    for &(from, to) in topology.edges() {
        linked[from.index()] = true;
        linked[to.index()] = true;
    }
    for i in (0..n).filter(|&i| n > 1 && !linked[i]) {
        let j = rng.gen_range(0..n - 1);
        let j = if j >= i { j + 1 } else { j };
        topology.add_edge(pages[i], pages[j]).expect("generated ids are valid");
    }
    topology
}

/// Generates the topology and every user's log from `cfg.seed`.
pub fn simulate_logs(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let topology = build_topology(cfg, &mut rng);
    Ok(simulate_users(cfg, topology, &mut rng))
}

/// Simulates agents on a given topology, seeded from `cfg.seed`.
pub fn simulate_on(cfg: &SimConfig, topology: WebTopology) -> Result<Simulation> {
    cfg.validate()?;
    if topology.is_empty() {
        return Err(Error::InvalidConfig("topology has no pages".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(simulate_users(cfg, topology, &mut rng))
}

fn simulate_users<R: Rng>(cfg: &SimConfig, topology: WebTopology, rng: &mut R) -> Simulation {
    let mut requests = Vec::new();
    let mut truth = GroundTruth::default();
    for u in 0..cfg.user_count {
        let user = user_key(u);
        let mut clock = START_EPOCH + rng.gen_range(0..cfg.inter_session_gap);
        for s in 0..cfg.sessions_per_user {
            let tree = walk_session(cfg, &topology, clock, rng);
            clock = tree.visits.last().unwrap().1 + cfg.inter_session_gap;
            for &(page, time) in &tree.visits {
                requests.push(PageRequest {
                    user: user.clone(),
                    page,
                    time,
                });
            }
            for pages in tree.paths() {
                truth.paths.push(TruePath {
                    user: user.clone(),
                    session: s,
                    pages,
                });
            }
        }
    }
    requests.sort_by_key(|r| r.time);
    Simulation {
        topology,
        requests,
        truth,
    }
}

struct VisitTree {
    visits: Vec<(PageId, u64)>,
    parent: Vec<Option<usize>>,
    children: Vec<usize>,
}

impl VisitTree {
    fn push(&mut self, page: PageId, time: u64, parent: Option<usize>) {
        self.visits.push((page, time));
        self.parent.push(parent);
        self.children.push(0);
        if let Some(p) = parent {
            self.children[p] += 1;
        }
    }

    /// Root-to-leaf page lists, ordered by leaf.
    fn paths(&self) -> Vec<Vec<PageId>> {
        (0..self.visits.len())
            .filter(|&i| self.children[i] == 0)
            .map(|leaf| {
                let mut path = vec![self.visits[leaf].0];
                let mut at = leaf;
                while let Some(p) = self.parent[at] {
                    path.push(self.visits[p].0);
                    at = p;
                }
                path.reverse();
                path
            })
            .collect()
    }
}

fn walk_session<R: Rng>(cfg: &SimConfig, topology: &WebTopology, start: u64, rng: &mut R) -> VisitTree {
    let delta = cfg.thresholds.page_stay_delta;
    let cap = cfg.thresholds.session_duration_cap;
    let mut tree = VisitTree {
        visits: Vec::new(),
        parent: Vec::new(),
        children: Vec::new(),
    };
    let first = PageId(rng.gen_range(0..topology.page_count()) as u32);
    tree.push(first, start, None);
    let mut seen: HashSet<PageId> = HashSet::from([first]);
    let target = rng.gen_range(cfg.path_length.0..=cfg.path_length.1);

    while tree.visits.len() < target {
        let now = tree.visits.last().unwrap().1 + rng.gen_range(cfg.think_time.0..cfg.think_time.1);
        if now - start > cap {
            break;
        }
        let successors = |from: usize| -> Vec<PageId> {
            let (page, _) = tree.visits[from];
            topology
                .out_neighbors(page)
                .unwrap()
                .iter()
                .copied()
                .filter(|next| !seen.contains(next))
                .filter(|&next| {
                    !cfg.unambiguous
                        || tree.visits.iter().enumerate().all(|(i, &(other, time))| {
                            i == from || now - time >= delta || !topology.has_link(other, next).unwrap()
                        })
                })
                .collect()
        };

        // path tails and earlier path pages still inside the page-stay window
        let open = |i: usize| now - tree.visits[i].1 < delta;
        let tails: Vec<usize> = (0..tree.visits.len())
            .filter(|&i| tree.children[i] == 0 && open(i))
            .collect();
        let inner: Vec<usize> = (0..tree.visits.len())
            .filter(|&i| tree.children[i] > 0 && open(i))
            .collect();
        let options = |from: &[usize]| -> Vec<(usize, Vec<PageId>)> {
            from.iter()
                .map(|&i| (i, successors(i)))
                .filter(|(_, next)| !next.is_empty())
                .collect()
        };
        let mut candidates = Vec::new();
        if cfg.branch_probability > 0.0 && rng.gen_bool(cfg.branch_probability) {
            candidates = options(&inner);
        }
        if candidates.is_empty() {
            candidates = options(&tails);
        }
        // every open path has reached a dead end
        let Some((from, next)) = candidates.choose(rng) else {
            break;
        };
        let (from, page) = (*from, *next.choose(rng).unwrap());
        seen.insert(page);
        tree.push(page, now, Some(from));
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_ingest::group_by_user;

    fn small(seed: u64) -> SimConfig {
        SimConfig {
            page_count: 30,
            user_count: 4,
            sessions_per_user: 3,
            seed,
            ..SimConfig::default()
        }
    }

    #[test]
    fn single_page_topology_has_no_edges() {
        let t = generate_topology(&SimConfig {
            page_count: 1,
            ..SimConfig::default()
        })
        .unwrap();
        assert_eq!(t.page_count(), 1);
        assert_eq!(t.edge_count(), 0);
    }

    #[test]
    fn every_page_survives_an_edge_list() {
        for seed in 0..20 {
            let cfg = SimConfig {
                page_count: 40,
                edges_per_page: 0.5,
                seed,
                ..SimConfig::default()
            };
            let t = generate_topology(&cfg).unwrap();
            let mut buf = Vec::new();
            t.save(&mut buf).unwrap();
            let back = WebTopology::load(&buf[..]).unwrap();
            assert_eq!(back.page_count(), t.page_count());
            assert_eq!(back.edge_count(), t.edge_count());
        }
    }

    #[test]
    fn topology_is_seeded() {
        let a = generate_topology(&small(5)).unwrap();
        let b = generate_topology(&small(5)).unwrap();
        let c = generate_topology(&small(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.edges().iter().all(|(x, y)| x != y));
    }

    #[test]
    fn simulation_is_seeded() {
        let a = simulate_logs(&small(9)).unwrap();
        let b = simulate_logs(&small(9)).unwrap();
        assert_eq!(a, b);
        let (mut la, mut lb) = (Vec::new(), Vec::new());
        a.save_log(&mut la).unwrap();
        b.save_log(&mut lb).unwrap();
        assert_eq!(la, lb);
    }

    #[test]
    fn linear_agent_walks_one_path() {
        let cfg = SimConfig {
            branch_probability: 0.0,
            ..small(3)
        };
        let sim = simulate_logs(&cfg).unwrap();
        assert_eq!(sim.truth.paths.len(), cfg.user_count * cfg.sessions_per_user);
        for user in group_by_user(sim.requests.clone()) {
            let walked: Vec<PageId> = user.requests.iter().map(|r| r.page).collect();
            let truth: Vec<PageId> = sim
                .truth
                .paths
                .iter()
                .filter(|p| p.user == user.user)
                .flat_map(|p| p.pages.clone())
                .collect();
            assert_eq!(walked, truth);
        }
    }

    #[test]
    fn star_forks_from_hub() {
        let mut star = WebTopology::new();
        let hub = star.intern("hub");
        for i in 0..6 {
            let leaf = star.intern(&format!("leaf{i}"));
            star.add_edge(hub, leaf).unwrap();
        }
        let cfg = SimConfig {
            branch_probability: 1.0,
            user_count: 10,
            sessions_per_user: 4,
            path_length: (4, 6),
            ..SimConfig::default()
        };
        let sim = simulate_on(&cfg, star).unwrap();
        let mut hub_sessions = 0;
        for path in &sim.truth.paths {
            if path.pages[0] == hub {
                hub_sessions += 1;
                assert_eq!(path.pages.len(), 2, "{path:?}");
            } else {
                assert_eq!(path.pages.len(), 1);
            }
        }
        assert!(hub_sessions > 0);
    }

    #[test]
    fn no_users_no_log() {
        let sim = simulate_logs(&SimConfig {
            user_count: 0,
            ..SimConfig::default()
        })
        .unwrap();
        assert!(sim.requests.is_empty());
        assert!(sim.truth.is_empty());
    }

    #[test]
    fn config_validation() {
        let ok = SimConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            SimConfig {
                page_count: 0,
                ..ok.clone()
            },
            SimConfig {
                path_length: (5, 2),
                ..ok.clone()
            },
            SimConfig {
                branch_probability: 1.5,
                ..ok.clone()
            },
            SimConfig {
                think_time: (30, 900),
                ..ok.clone()
            },
            SimConfig {
                inter_session_gap: 1800,
                ..ok.clone()
            },
            SimConfig {
                edges_per_page: 0.0,
                ..ok.clone()
            },
        ] {
            assert!(bad.validate().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn truth_file_round_trip() {
        let sim = simulate_logs(&small(2)).unwrap();
        let mut buf = Vec::new();
        sim.truth.save(&sim.topology, &mut buf).unwrap();
        let back = GroundTruth::load(&buf[..], &sim.topology).unwrap();
        assert_eq!(back, sim.truth);
        let first = String::from_utf8(buf).unwrap().lines().next().unwrap().to_owned();
        assert_eq!(first.split('\t').count(), 3);
    }

    #[test]
    fn truth_file_errors() {
        let t = crate::topology::load_topology("/a /b").unwrap();
        assert!(matches!(
            GroundTruth::load("u\t0\t/zz\n".as_bytes(), &t),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            GroundTruth::load("u\tx\t/a\n".as_bytes(), &t),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            GroundTruth::load("\nu /a\n".as_bytes(), &t),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
