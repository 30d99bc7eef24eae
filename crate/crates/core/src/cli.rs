//! Command-line front end: `simulate`, `trajectory`, `montecarlo`,
//! `estimate`, `constants` and `verify`.
//!
//! Every subcommand also reads a flat `key = value` file given with
//! `--config`; keys are the long flag names (dashes or underscores), flags on
//! the command line win, and keys the subcommand does not know are rejected.
//! Repeatable flags (`pair`, `k`) may be repeated as lines in the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::{self, EdgeRecorder, Metadata, TrajectoryWriter};
use crate::graph::GraphState;
use crate::montecarlo::{self, ExperimentConfig};
use crate::params::{ModelParams, Regime};
use crate::snapshot::Snapshot;
use crate::theory::{ExpectationConstants, RegimeConstants};
use crate::tracker::{self, CheckpointSchedule, PairTracker, TrackerSet, TrajectoryPoint};
use crate::verify::{self, Suite, Tolerances};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFICATION: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "prefattach",
    version,
    about = "Simulate preferential attachment graphs and track common friends"
)]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Print progress to stderr.
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grow one graph and write its edge list and degrees.
    Simulate(SimulateArgs),
    /// Follow pairs along one graph and write their trajectories.
    Trajectory(TrajectoryArgs),
    /// Replicate the graph and summarise the tracked pairs.
    Montecarlo(MontecarloArgs),
    /// Subsample estimate of the common-friend count.
    Estimate(EstimateArgs),
    /// Print the closed-form constants for a parameter choice.
    Constants(ConstantsArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Edges per arriving node.
    #[arg(long)]
    pub c: Option<u32>,
    /// Attachment offset; must exceed -c.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of nodes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Directory for `edges.csv` and `degrees.csv`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Also save the final state here.
    #[arg(long, value_name = "FILE")]
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Format::from_str_ci(s)
    }
}

impl Format {
    fn from_str_ci(s: &str) -> Result<Self> {
        <Format as ValueEnum>::from_str(s, true)
            .map_err(|_| Error::invalid(format!("unknown format '{s}'")))
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrajectoryArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Pair `i:j` to track; repeatable. Defaults to 10:20.
    #[arg(long = "pair", value_name = "I:J", value_parser = parse_pair)]
    pub pairs: Vec<(usize, usize)>,
    /// `geometric` (n = j 2^m), `every`, `linear:STEP` or a comma list.
    #[arg(long)]
    pub checkpoints: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct MontecarloArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Pair `i:j` to track; repeatable. Defaults to 10:20.
    #[arg(long = "pair", value_name = "I:J", value_parser = parse_pair)]
    pub pairs: Vec<(usize, usize)>,
    /// Comma-separated summary times; defaults to n.
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<u64>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Subsample factor for the estimator ratio; repeatable.
    #[arg(long = "k")]
    pub ks: Vec<f64>,
    /// Number of per-step trajectories written to `trajectories.csv`.
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Allow pairs involving node 1.
    #[arg(long)]
    pub allow_node_one: bool,
    /// Directory for `summary.json`, `histogram.csv` and `trajectories.csv`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Size at which the count is wanted.
    #[arg(long)]
    pub n: Option<usize>,
    /// Subsample factor, greater than 1.
    #[arg(long)]
    pub k: Option<f64>,
    /// Pair `i:j`; repeatable. Defaults to 10:20.
    #[arg(long = "pair", value_name = "I:J", value_parser = parse_pair)]
    pub pairs: Vec<(usize, usize)>,
    /// Snapshot taken at n / k; without it the graph is simulated.
    #[arg(long, value_name = "FILE")]
    pub snapshot: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ConstantsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub i: Option<u64>,
    #[arg(long)]
    pub j: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct VerifyArgs {
    /// identities, means, regimes, estimator, heavy-tail or all.
    #[arg(long)]
    pub suite: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Treat statistical failures like hard ones.
    #[arg(long)]
    pub strict: bool,
    /// Replacement tolerance file.
    #[arg(long, value_name = "FILE")]
    pub tolerances: Option<PathBuf>,
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected I:J, got '{s}'"))?;
    let i = a.trim().parse().map_err(|_| format!("bad node id '{a}'"))?;
    let j = b.trim().parse().map_err(|_| format!("bad node id '{b}'"))?;
    Ok((i, j))
}

/// Parsed `key = value` file.
#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, Vec<String>>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().replace('-', "_");
            if key.is_empty() {
                return Err(Error::invalid(format!(
                    "config line {}: empty key",
                    lineno + 1
                )));
            }
            entries
                .entry(key)
                .or_default()
                .push(value.trim().to_string());
        }
        Ok(ConfigFile { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        ConfigFile::parse(&fs::read_to_string(path)?)
    }

    fn take_all(&mut self, key: &str) -> Vec<String> {
        self.entries.remove(key).unwrap_or_default()
    }

    fn take_one(&mut self, key: &str) -> Result<Option<String>> {
        let mut values = self.take_all(key);
        match values.len() {
            0 => Ok(None),
            1 => Ok(values.pop()),
            _ => Err(Error::invalid(format!(
                "config key '{key}' given more than once"
            ))),
        }
    }

    fn fill<T: FromStr>(&mut self, slot: &mut Option<T>, key: &str) -> Result<()> {
        if let Some(value) = self.take_one(key)? {
            if slot.is_none() {
                let parsed = value.parse().map_err(|_| {
                    Error::invalid(format!("config key '{key}': cannot parse '{value}'"))
                })?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }

    fn fill_flag(&mut self, slot: &mut bool, key: &str) -> Result<()> {
        let mut value = None;
        self.fill(&mut value, key)?;
        *slot |= value.unwrap_or(false);
        Ok(())
    }

    fn fill_pairs(&mut self, slot: &mut Vec<(usize, usize)>) -> Result<()> {
        let values = self.take_all("pair");
        if slot.is_empty() {
            for v in values {
                slot.push(parse_pair(&v).map_err(Error::invalid)?);
            }
        }
        Ok(())
    }

    fn fill_list<T: FromStr>(&mut self, slot: &mut Vec<T>, key: &str) -> Result<()> {
        let values = self.take_all(key);
        if slot.is_empty() {
            for v in values.iter().flat_map(|v| v.split(',')) {
                let v = v.trim();
                slot.push(v.parse().map_err(|_| {
                    Error::invalid(format!("config key '{key}': cannot parse '{v}'"))
                })?);
            }
        }
        Ok(())
    }

    fn fill_model(&mut self, model: &mut ModelArgs) -> Result<()> {
        self.fill(&mut model.c, "c")?;
        self.fill(&mut model.delta, "delta")
    }

    /// Fails if any key was not consumed.
    fn finish(self) -> Result<()> {
        match self.entries.keys().next() {
            None => Ok(()),
            Some(key) => Err(Error::invalid(format!("unknown config key '{key}'"))),
        }
    }
}

impl ModelArgs {
    fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.c.unwrap_or(2), self.delta.unwrap_or(0.0))
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Format(_) => EXIT_IO,
        Error::ParameterDomain(_) | Error::InvalidArgument(_) | Error::Resource(_) => EXIT_USAGE,
    }
}

pub fn execute(cli: Cli) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let verbose = cli.verbose > 0;
    match cli.command {
        Command::Simulate(mut a) => {
            config.fill_model(&mut a.model)?;
            config.fill(&mut a.seed, "seed")?;
            config.fill(&mut a.n, "n")?;
            config.fill(&mut a.out, "out")?;
            config.fill(&mut a.snapshot, "snapshot")?;
            config.finish()?;
            simulate(&a, verbose)
        }
        Command::Trajectory(mut a) => {
            config.fill_model(&mut a.model)?;
            config.fill(&mut a.seed, "seed")?;
            config.fill(&mut a.n, "n")?;
            config.fill_pairs(&mut a.pairs)?;
            config.fill(&mut a.checkpoints, "checkpoints")?;
            config.fill(&mut a.format, "format")?;
            config.fill(&mut a.out, "out")?;
            config.finish()?;
            trajectory(&a)
        }
        Command::Montecarlo(mut a) => {
            config.fill_model(&mut a.model)?;
            config.fill(&mut a.seed, "seed")?;
            config.fill(&mut a.n, "n")?;
            config.fill_pairs(&mut a.pairs)?;
            config.fill_list(&mut a.checkpoints, "checkpoints")?;
            config.fill(&mut a.replicates, "replicates")?;
            config.fill_list(&mut a.ks, "k")?;
            config.fill(&mut a.trajectories, "trajectories")?;
            config.fill_flag(&mut a.allow_node_one, "allow_node_one")?;
            config.fill(&mut a.out, "out")?;
            config.finish()?;
            montecarlo(&a, verbose)
        }
        Command::Estimate(mut a) => {
            config.fill_model(&mut a.model)?;
            config.fill(&mut a.seed, "seed")?;
            config.fill(&mut a.n, "n")?;
            config.fill(&mut a.k, "k")?;
            config.fill_pairs(&mut a.pairs)?;
            config.fill(&mut a.snapshot, "snapshot")?;
            config.fill(&mut a.out, "out")?;
            config.finish()?;
            estimate(&a)
        }
        Command::Constants(mut a) => {
            config.fill_model(&mut a.model)?;
            config.fill(&mut a.i, "i")?;
            config.fill(&mut a.j, "j")?;
            config.fill(&mut a.out, "out")?;
            config.finish()?;
            constants(&a)
        }
        Command::Verify(mut a) => {
            config.fill(&mut a.suite, "suite")?;
            config.fill(&mut a.seed, "seed")?;
            config.fill(&mut a.out, "out")?;
            config.fill_flag(&mut a.strict, "strict")?;
            config.fill(&mut a.tolerances, "tolerances")?;
            config.finish()?;
            run_verify(&a, verbose)
        }
    }
}

fn required<T: Copy>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| Error::invalid(format!("--{flag} is required")))
}

fn default_pairs(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    if pairs.is_empty() {
        vec![(10, 20)]
    } else {
        pairs.to_vec()
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Writer for `path`, or stdout.
fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct WithMetadata<T: Serialize> {
    metadata: Metadata,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(out: &mut dyn Write, metadata: Metadata, body: T) -> Result<()> {
    let doc = WithMetadata { metadata, body };
    serde_json::to_writer_pretty(&mut *out, &doc).map_err(io::Error::from)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn simulate(a: &SimulateArgs, verbose: bool) -> Result<i32> {
    let params = a.model.params()?;
    let n = required(a.n, "n")?;
    if n == 0 {
        return Err(Error::invalid("--n must be at least 1"));
    }
    let seed = a.seed.unwrap_or(0);
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut state = GraphState::new(params, seed);
    state.reserve(n);
    let mut edges = EdgeRecorder::new(&state);
    state.evolve(n, &mut [&mut edges])?;
    if verbose {
        eprintln!("grew {n} nodes");
    }
    let meta = Metadata::new(&params, Some(seed)).csv_comment();
    fs::create_dir_all(&dir)?;
    let mut out = create(&dir.join("edges.csv"))?;
    out.write_all(meta.as_bytes())?;
    edges.write_csv(&mut out)?;
    let mut out = create(&dir.join("degrees.csv"))?;
    out.write_all(meta.as_bytes())?;
    export::write_degrees_csv(&state, &mut out)?;
    if let Some(path) = &a.snapshot {
        state.snapshot().write_to(path)?;
    }
    Ok(EXIT_OK)
}

fn parse_schedule(spec: Option<&str>) -> Result<CheckpointSchedule> {
    let spec = spec.unwrap_or("geometric").trim();
    Ok(match spec {
        "geometric" => CheckpointSchedule::Geometric,
        "every" => CheckpointSchedule::EveryStep,
        _ => {
            if let Some(step) = spec.strip_prefix("linear:") {
                let step: u64 = step
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad linear step '{step}'")))?;
                if step == 0 {
                    return Err(Error::invalid("linear step must be positive"));
                }
                CheckpointSchedule::Linear(step)
            } else {
                let times = spec
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::invalid(format!("bad checkpoint '{t}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                CheckpointSchedule::explicit(times)
            }
        }
    })
}

#[derive(Serialize)]
struct TrajectoryRow {
    n: u64,
    pair_i: usize,
    pair_j: usize,
    n_ij: u64,
    x_i: f64,
    x_j: f64,
    y_ij: f64,
    scaled: Option<f64>,
}

fn trajectory(a: &TrajectoryArgs) -> Result<i32> {
    let params = a.model.params()?;
    let n = required(a.n, "n")?;
    let seed = a.seed.unwrap_or(0);
    let pairs = default_pairs(&a.pairs);
    if let Some(&(i, j)) = pairs.iter().find(|&&(_, j)| j > n) {
        return Err(Error::invalid(format!("pair ({i}, {j}) needs n >= {j}")));
    }
    let schedule = parse_schedule(a.checkpoints.as_deref())?;
    let mut state = GraphState::new(params, seed);
    let mut trackers = TrackerSet::new(&state, &pairs, schedule)?;
    state.evolve(n, &mut [&mut trackers])?;

    let mut rows: Vec<(usize, &PairTracker, &TrajectoryPoint)> = Vec::new();
    for (order, &(i, j)) in pairs.iter().enumerate() {
        let t = trackers.tracker(i, j).expect("pair started");
        rows.extend(t.trajectory().iter().map(|p| (order, t, p)));
    }
    rows.sort_by_key(|&(order, _, p)| (p.n, order));

    let rc = RegimeConstants::new(&params);
    let meta = Metadata::new(&params, Some(seed));
    let mut out = output(a.out.as_deref())?;
    match a.format.unwrap_or_default() {
        Format::Csv => {
            out.write_all(meta.csv_comment().as_bytes())?;
            let mut w = TrajectoryWriter::new(&mut out, false)?;
            for (_, t, p) in &rows {
                let (i, j) = t.pair();
                w.row(None, i, j, p, &rc)?;
            }
            w.finish()?;
        }
        Format::Json => {
            let body: Vec<TrajectoryRow> = rows
                .iter()
                .map(|(_, t, p)| {
                    let (pair_i, pair_j) = t.pair();
                    TrajectoryRow {
                        n: p.n,
                        pair_i,
                        pair_j,
                        n_ij: p.n_ij,
                        x_i: p.x_i,
                        x_j: p.x_j,
                        y_ij: p.y_ij,
                        scaled: (p.n >= 2).then(|| tracker::scaled(p.n_ij, p.n, &rc).value),
                    }
                })
                .collect();
            #[derive(Serialize)]
            struct Body {
                rows: Vec<TrajectoryRow>,
            }
            write_json(&mut out, meta, Body { rows: body })?;
        }
    }
    Ok(EXIT_OK)
}

fn montecarlo(a: &MontecarloArgs, verbose: bool) -> Result<i32> {
    let params = a.model.params()?;
    let n = required(a.n, "n")?;
    let replicates = a.replicates.unwrap_or(100);
    let seed = a.seed.unwrap_or(0);
    let mut config = ExperimentConfig::new(params, default_pairs(&a.pairs), n, replicates, seed)
        .with_checkpoints(a.checkpoints.clone())
        .with_estimator_k(a.ks.clone());
    config.allow_node_one = a.allow_node_one;
    config.validate()?;
    let count = a.trajectories.unwrap_or(5.min(replicates));
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;

    if verbose {
        eprintln!("running {replicates} replicates to n = {n}");
    }
    let summary = montecarlo::run(&config)?;
    let meta = Metadata::new(&params, Some(seed));

    #[derive(Serialize)]
    struct Body<'a> {
        summary: &'a montecarlo::ReplicationSummary,
    }
    let mut out = create(&dir.join("summary.json"))?;
    write_json(&mut out, meta.clone(), Body { summary: &summary })?;

    let mut out = create(&dir.join("histogram.csv"))?;
    out.write_all(meta.csv_comment().as_bytes())?;
    export::write_histogram_csv(&summary, &mut out)?;

    if verbose {
        eprintln!("writing {count} per-step trajectories");
    }
    let mut out = create(&dir.join("trajectories.csv"))?;
    out.write_all(meta.csv_comment().as_bytes())?;
    montecarlo::trajectory_export(&config, count, &mut out)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct PairEstimate {
    i: usize,
    j: usize,
    n_ij_subsample: u64,
    estimate: f64,
    /// Count at `n`, when the graph was simulated that far.
    n_ij: Option<u64>,
    /// `n_ij / estimate`, when both are known and the estimate is positive.
    ratio: Option<f64>,
}

#[derive(Serialize)]
struct EstimateBody {
    regime: Regime,
    gamma: f64,
    k: f64,
    factor: f64,
    n: Option<usize>,
    subsample_n: usize,
    pairs: Vec<PairEstimate>,
}

fn estimate(a: &EstimateArgs) -> Result<i32> {
    let k = required(a.k, "k")?;
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::invalid(format!("--k must exceed 1, got {k}")));
    }
    let pairs = default_pairs(&a.pairs);
    let (state, params, seed) = match &a.snapshot {
        Some(path) => {
            let snap = Snapshot::read_from(path)?;
            let p = snap.params;
            if a.model.c.is_some_and(|c| c != p.c())
                || a.model.delta.is_some_and(|d| d != p.delta())
            {
                return Err(Error::invalid(format!(
                    "snapshot has c = {}, delta = {}, which differs from the flags",
                    p.c(),
                    p.delta()
                )));
            }
            if let Some(n) = a.n {
                let want = tracker::subsample_time(n as u64, k) as usize;
                if want != snap.n() {
                    return Err(Error::invalid(format!(
                        "snapshot holds {} nodes but n / k gives {want}",
                        snap.n()
                    )));
                }
            }
            (GraphState::restore(snap)?, p, None)
        }
        None => {
            let params = a.model.params()?;
            let n = required(a.n, "n")?;
            let seed = a.seed.unwrap_or(0);
            let sub_n = tracker::subsample_time(n as u64, k) as usize;
            let mut state = GraphState::new(params, seed);
            state.grow_to(sub_n.max(1))?;
            (state, params, Some(seed))
        }
    };
    let rc = RegimeConstants::new(&params);
    let sub_n = state.n();
    let mut trackers = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        if j > sub_n {
            return Err(Error::invalid(format!(
                "pair ({i}, {j}) does not exist at the subsample size {sub_n}"
            )));
        }
        trackers.push(PairTracker::init_pair(&state, i, j)?);
    }
    let early: Vec<u64> = trackers.iter().map(PairTracker::n_ij).collect();

    let finals: Vec<Option<u64>> = if a.snapshot.is_none() {
        let mut state = state;
        let n = required(a.n, "n")?;
        let mut set = TrackerSet::new(&state, &pairs, CheckpointSchedule::explicit([n as u64]))?;
        state.evolve(n, &mut [&mut set])?;
        pairs
            .iter()
            .map(|&(i, j)| set.tracker(i, j).map(PairTracker::n_ij))
            .collect()
    } else {
        vec![None; pairs.len()]
    };

    let mut estimates = Vec::with_capacity(pairs.len());
    for ((&(i, j), &n_sub), n_ij) in pairs.iter().zip(&early).zip(finals) {
        let estimate = tracker::estimate(n_sub, k, &rc)?;
        let ratio = n_ij.filter(|_| estimate > 0.0).map(|n| n as f64 / estimate);
        estimates.push(PairEstimate {
            i,
            j,
            n_ij_subsample: n_sub,
            estimate,
            n_ij,
            ratio,
        });
    }
    let body = EstimateBody {
        regime: rc.regime,
        gamma: rc.gamma,
        k,
        factor: rc.estimator_factor(k),
        n: a.n,
        subsample_n: sub_n,
        pairs: estimates,
    };
    let mut out = output(a.out.as_deref())?;
    write_json(&mut out, Metadata::new(&params, seed), body)?;
    Ok(EXIT_OK)
}

fn constants(a: &ConstantsArgs) -> Result<i32> {
    let params = a.model.params()?;
    let rc = RegimeConstants::new(&params);
    let (i, j) = (a.i.unwrap_or(2), a.j.unwrap_or(3));

    #[derive(Serialize)]
    struct Body {
        regime_constants: RegimeConstants,
        power_exponent: f64,
        pair_rate: f64,
        expectation_constants: ExpectationConstants,
    }
    let body = Body {
        regime_constants: rc,
        power_exponent: rc.power_exponent(),
        pair_rate: rc.pair_rate(),
        expectation_constants: ExpectationConstants::new(&rc, i, j)?,
    };
    let mut out = output(a.out.as_deref())?;
    write_json(&mut out, Metadata::new(&params, None), body)?;
    Ok(EXIT_OK)
}

fn run_verify(a: &VerifyArgs, verbose: bool) -> Result<i32> {
    let suite: Suite = a.suite.as_deref().unwrap_or("all").parse()?;
    let seed = a.seed.unwrap_or(verify::DEFAULT_SEED);
    let tol = match &a.tolerances {
        Some(path) => Tolerances::parse(&fs::read_to_string(path)?)?,
        None => Tolerances::default(),
    };
    if verbose {
        eprintln!("running suite '{}' with seed {seed}", suite.as_str());
    }
    let report = verify::run_suite(suite, seed, &tol)?;
    let mut stdout = io::stdout().lock();
    for check in &report.checks {
        writeln!(stdout, "{check}")?;
    }
    writeln!(
        stdout,
        "{} checks: {} hard, {} statistical, {} monitored failures",
        report.checks.len(),
        report.hard_failures,
        report.statistical_failures,
        report.monitor_failures
    )?;
    stdout.flush()?;
    if let Some(path) = &a.out {
        let mut out = create(path)?;
        serde_json::to_writer_pretty(&mut out, &report).map_err(io::Error::from)?;
        writeln!(out)?;
        out.flush()?;
    }
    Ok(if report.failed(a.strict) {
        EXIT_VERIFICATION
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_parsing() {
        assert_eq!(parse_pair("10:20"), Ok((10, 20)));
        assert_eq!(parse_pair(" 2 : 3 "), Ok((2, 3)));
        assert!(parse_pair("10-20").is_err());
        assert!(parse_pair("a:3").is_err());
    }

    #[test]
    fn config_file_rules() {
        let mut cfg = ConfigFile::parse(
            "# comment\nc = 3\ndelta = -1.5\npair = 2:3\npair = 4:5\n\nn-max = 9\n",
        )
        .unwrap();
        let mut model = ModelArgs {
            c: Some(4),
            delta: None,
        };
        cfg.fill_model(&mut model).unwrap();
        assert_eq!(model.c, Some(4), "flag wins over file");
        assert_eq!(model.delta, Some(-1.5));
        let mut pairs = Vec::new();
        cfg.fill_pairs(&mut pairs).unwrap();
        assert_eq!(pairs, vec![(2, 3), (4, 5)]);
        let err = cfg.finish().unwrap_err();
        assert!(err.to_string().contains("n_max"));
        assert!(ConfigFile::parse("just text").is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(parse_schedule(None).unwrap(), CheckpointSchedule::Geometric);
        assert_eq!(
            parse_schedule(Some("every")).unwrap(),
            CheckpointSchedule::EveryStep
        );
        assert_eq!(
            parse_schedule(Some("linear:10")).unwrap(),
            CheckpointSchedule::Linear(10)
        );
        assert_eq!(
            parse_schedule(Some("5, 10")).unwrap(),
            CheckpointSchedule::explicit([5, 10])
        );
        assert!(parse_schedule(Some("linear:0")).is_err());
        assert!(parse_schedule(Some("x")).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::invalid("x")), EXIT_USAGE);
        assert_eq!(exit_code(&Error::Format("x".into())), EXIT_IO);
        assert_eq!(run(["prefattach", "--version"]), EXIT_OK);
        assert_eq!(run(["prefattach", "bogus"]), EXIT_USAGE);
        assert_eq!(
            run(["prefattach", "estimate", "--k", "1", "--n", "10"]),
            EXIT_USAGE
        );
    }
}
