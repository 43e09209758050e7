//! Subcommands of the `csra` binary.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use csra_core::baselines::{reconstruct_all, Method};
use csra_core::mining::evaluate_methods;
use csra_core::oracle::{check_instances, csra_paths, Counterexample, PathSet};
use csra_core::simulator::{simulate_logs, GroundTruth, SimConfig};
use csra_core::{group_by_user, parse_log, CandidateSession, Execution, LogFormat, Thresholds, WebTopology};

#[derive(Debug, Parser)]
#[command(
    name = "csra",
    version,
    about = "Reconstruct web sessions as maximal link-valid paths"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reconstruct sessions from a request log.
    Sessionize(SessionizeArgs),
    /// Generate a synthetic topology, request log and ground truth.
    Simulate(SimulateArgs),
    /// Score all reconstruction methods against ground truth.
    Evaluate(EvaluateArgs),
    /// Cross-check the reconstruction against brute force on random instances.
    OracleCheck(OracleCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    Csra,
    Time,
    Nav,
}

impl From<Algorithm> for Method {
    fn from(a: Algorithm) -> Self {
        match a {
            Algorithm::Csra => Method::Csra,
            Algorithm::Time => Method::TimeOriented,
            Algorithm::Nav => Method::NavigationOriented,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Clf,
}

impl From<Format> for LogFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => LogFormat::Csv,
            Format::Clf => LogFormat::Clf,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Maximum seconds between consecutive page views (exclusive).
    #[arg(long, default_value_t = Thresholds::DEFAULT_PAGE_STAY)]
    pub page_stay: u64,
    /// Maximum seconds from the first to the last view of a session.
    #[arg(long, default_value_t = Thresholds::DEFAULT_SESSION_CAP)]
    pub session_cap: u64,
}

impl ThresholdArgs {
    fn thresholds(&self) -> Result<Thresholds> {
        Ok(Thresholds::new(self.page_stay, self.session_cap)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SessionizeArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub topology: PathBuf,
    /// Session file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Algorithm::Csra)]
    pub algorithm: Algorithm,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Request log to write (CSV).
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth file to write.
    #[arg(long)]
    pub truth: PathBuf,
    /// Topology edge list to write.
    #[arg(long)]
    pub topology: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub pages: usize,
    #[arg(long, default_value_t = 3.0)]
    pub edges_per_page: f64,
    #[arg(long, default_value_t = 50)]
    pub users: usize,
    #[arg(long, default_value_t = 10)]
    pub sessions_per_user: usize,
    #[arg(long, default_value_t = 2)]
    pub min_length: usize,
    #[arg(long, default_value_t = 8)]
    pub max_length: usize,
    #[arg(long, default_value_t = 0.4)]
    pub branch_probability: f64,
    #[arg(long, default_value_t = 30)]
    pub think_min: u64,
    #[arg(long, default_value_t = 300)]
    pub think_max: u64,
    #[arg(long, default_value_t = 3600)]
    pub inter_session_gap: u64,
    /// Only open pages with a single possible referrer in the session.
    #[arg(long)]
    pub unambiguous: bool,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

impl SimulateArgs {
    pub fn config(&self) -> Result<SimConfig> {
        let cfg = SimConfig {
            page_count: self.pages,
            edges_per_page: self.edges_per_page,
            user_count: self.users,
            sessions_per_user: self.sessions_per_user,
            path_length: (self.min_length, self.max_length),
            branch_probability: self.branch_probability,
            think_time: (self.think_min, self.think_max),
            inter_session_gap: self.inter_session_gap,
            thresholds: self.thresholds.thresholds()?,
            unambiguous: self.unambiguous,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub log: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub topology: PathBuf,
    /// Flat `key = value` report.
    #[arg(long)]
    pub out: PathBuf,
    /// `method<TAB>metric<TAB>value` records; defaults to `<out>.tsv`.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Method whose improvements over the baselines are reported.
    #[arg(long, value_enum, default_value_t = Algorithm::Csra)]
    pub algorithm: Algorithm,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Algorithm::Time, Algorithm::Nav])]
    pub baselines: Vec<Algorithm>,
    #[arg(long, default_value_t = 2)]
    pub min_support: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleCheckArgs {
    #[arg(long, default_value_t = 1000)]
    pub instances: u64,
    /// Upper bound on topology size and session length.
    #[arg(long, default_value_t = 12)]
    pub max_pages: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Exit status for an error: 2 for I/O and parse failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if cause.is::<io::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<csra_core::Error>() {
            return match e {
                csra_core::Error::Io(_) | csra_core::Error::Parse { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("cannot open {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn load_topology_file(path: &Path) -> Result<WebTopology> {
    WebTopology::load(open(path)?).with_context(|| format!("in topology {}", path.display()))
}

/// Reconstructs sessions and writes `user<TAB>url,url,...` lines sorted by
/// user, then URL list. Skipped log lines go to `diagnostics`.
pub fn cmd_sessionize(args: &SessionizeArgs, diagnostics: &mut dyn Write) -> Result<()> {
    let th = args.thresholds.thresholds()?;
    let topology = load_topology_file(&args.topology)?;
    let parsed = parse_log(open(&args.log)?, args.format.into(), &topology)
        .with_context(|| format!("in log {}", args.log.display()))?;
    for d in &parsed.diagnostics {
        writeln!(diagnostics, "{d}")?;
    }

    let users = group_by_user(parsed.requests);
    let sessions = reconstruct_all(args.algorithm.into(), &users, &topology, &th, Execution::default())?;
    let mut lines: Vec<(&str, Vec<&str>)> = sessions
        .iter()
        .map(|s| {
            let urls = s
                .pages
                .iter()
                .map(|&p| topology.url(p))
                .collect::<Result<Vec<_>, _>>()?;
            Ok((s.user.as_str(), urls))
        })
        .collect::<Result<_>>()?;
    lines.sort();

    let mut sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(create(path)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    for (user, urls) in lines {
        writeln!(sink, "{user}\t{}", urls.join(","))?;
    }
    sink.flush()?;
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.config()?;
    let sim = simulate_logs(&cfg)?;
    let mut log = create(&args.out)?;
    sim.save_log(&mut log)?;
    log.flush()?;
    let mut truth = create(&args.truth)?;
    sim.truth.save(&sim.topology, &mut truth)?;
    truth.flush()?;
    let mut topo = create(&args.topology)?;
    sim.topology.save(&mut topo)?;
    topo.flush()?;
    Ok(())
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let th = args.thresholds.thresholds()?;
    let topology = load_topology_file(&args.topology)?;
    let parsed = parse_log(open(&args.log)?, args.format.into(), &topology)
        .with_context(|| format!("in log {}", args.log.display()))?;
    if let Some(d) = parsed.diagnostics.first() {
        bail!(csra_core::Error::TruthMismatch(format!(
            "log line {} cannot be used: {}",
            d.line, d.reason
        )));
    }
    let truth = GroundTruth::load(open(&args.truth)?, &topology)
        .with_context(|| format!("in truth {}", args.truth.display()))?;

    let mut methods = vec![Method::from(args.algorithm)];
    methods.extend(args.baselines.iter().map(|&a| Method::from(a)));
    let report = evaluate_methods(
        &parsed.requests,
        &truth,
        &topology,
        &th,
        args.min_support,
        &methods,
        Execution::default(),
    )?;

    let mut text = create(&args.out)?;
    text.write_all(report.to_text().as_bytes())?;
    text.flush()?;
    let records_path = args.records.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".tsv");
        p.into()
    });
    let mut records = create(&records_path)?;
    records.write_all(report.to_records().as_bytes())?;
    records.flush()?;
    Ok(())
}

/// Runs the cross-check with an arbitrary reconstructor.
pub fn oracle_check_with<F>(args: &OracleCheckArgs, reconstruct: F) -> Result<Option<Counterexample>>
where
    F: Fn(&CandidateSession, &WebTopology, u64) -> csra_core::Result<PathSet> + Sync + Send,
{
    if args.max_pages == 0 {
        bail!(csra_core::Error::InvalidConfig("--max-pages must be positive".into()));
    }
    if args.max_pages > 16 {
        bail!(csra_core::Error::InvalidConfig(format!(
            "--max-pages {} exceeds the brute-force limit of 16",
            args.max_pages
        )));
    }
    Ok(check_instances(
        args.seed,
        args.instances,
        args.max_pages,
        Execution::default(),
        reconstruct,
    )?)
}

pub fn cmd_oracle_check(args: &OracleCheckArgs) -> Result<Option<Counterexample>> {
    oracle_check_with(args, csra_paths)
}
