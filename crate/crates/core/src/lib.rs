//! Web session reconstruction from raw request logs.
//!
//! The pipeline turns `<user, url, time>` records into, per user, the full
//! set of maximal navigation sequences that are consistent with both the
//! request timing and the site's link structure:
//!
//! 1. [`log_ingest`] parses CSV or Common Log Format lines and groups them
//!    per user.
//! 2. [`phase1`] cuts each user's stream into candidate sessions with a
//!    page-stay threshold and a session-duration cap.
//! 3. [`mpvs`] enumerates every maximal link-valid path inside each candidate
//!    session.
//!
//! [`oracle`] is an exhaustive reference for step 3, [`baselines`] holds the
//! time-only and backtracking reconstructors used for comparison,
//! [`simulator`] produces synthetic logs with known ground truth, and
//! [`mining`] mines frequent patterns and scores reconstructions.

pub mod baselines;
pub mod error;
pub mod exec;
pub mod log_ingest;
pub mod mining;
pub mod mpvs;
pub mod oracle;
pub mod phase1;
pub mod simulator;
pub mod topology;

pub use baselines::{Method, ReconstructedSession};
pub use error::{Error, Result};
pub use exec::Execution;
pub use log_ingest::{group_by_user, parse_log, LogFormat, PageRequest, UserRequestSequence};
pub use mpvs::{csra_phase2, MaximalSessionSet, NavSequence, SessionPools};
pub use phase1::{build_candidate_sessions, CandidateSession, Thresholds, Visit};
pub use topology::{load_topology, PageId, WebTopology};
