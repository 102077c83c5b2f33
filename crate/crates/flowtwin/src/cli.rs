//! `flowtwin` subcommands. Exit status: 0 success, 1 failure, 2 usage.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use flowtwin_core::gnn::{self, Variant};
use flowtwin_core::sim::TraceEvent;
use flowtwin_core::topology::shortest_path_routing;
use flowtwin_core::traffic::sample_traffic_matrix;
use flowtwin_core::{make_synthetic_topology, run_simulation, stream_rng, Sample, SchedulingConfig};

use crate::checkpoint::{read_checkpoint, write_checkpoint};
use crate::config::{ConfigFile, SimOptions};
use crate::dataset::{generate_dataset, read_samples, SampleRecord};
use crate::eval::{rank_files, score_file, EvalError, GroundTruth};
use crate::predictions::write_predictions;
use crate::topo_io::{read_topology, write_topology, TopologyFile};
use crate::{format_sig9, selfcheck};

pub const SEED_ENV: &str = "FLOWTWIN_SEED";
const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "flowtwin", version, about = "Network digital twin: simulate, learn and score per-path delays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic topology file.
    GenTopo(GenTopo),
    /// Generate a labeled dataset directory.
    GenDataset(GenDataset),
    /// Simulate one traffic matrix on a topology.
    Simulate(Simulate),
    /// Train a model and write its checkpoint.
    Train(Train),
    /// Predict per-flow delays for a dataset.
    Predict(Predict),
    /// MAPE of one prediction table against a labeled dataset.
    Score(Score),
    /// Score and rank several prediction tables.
    Rank(Rank),
    /// Run the built-in oracle checks.
    Selfcheck(Selfcheck),
}

#[derive(Debug, Args)]
struct GenTopo {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenDataset {
    /// Repeat to draw samples from several topologies in turn.
    #[arg(long, required = true)]
    topology: Vec<PathBuf>,
    #[arg(long)]
    samples: u64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Simulate {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Labeled sample record; the trace, when enabled, goes to `<out>.trace`.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Train {
    /// Training dataset, optionally followed by a validation dataset.
    #[arg(long, required = true, num_args = 1)]
    dataset: Vec<PathBuf>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Predict {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Score {
    /// Prediction CSV.
    submission: PathBuf,
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Debug, Args)]
struct Rank {
    /// `TEAM=PATH` or `PATH` (team named after the file stem).
    #[arg(required = true)]
    submissions: Vec<String>,
    #[arg(long)]
    truth: PathBuf,
    /// Also write the leaderboard as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Selfcheck {
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Malformed(String),
    #[error("{0:#}")]
    Failure(anyhow::Error),
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Malformed(_) | CliError::Failure(_) => 1,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn seed(flag: Option<u64>) -> CliResult<u64> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::Usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(flag.unwrap_or(DEFAULT_SEED)),
        Err(e) => Err(CliError::Usage(format!("{SEED_ENV}: {e}"))),
    }
}

fn existing_file(p: &Path) -> CliResult<&Path> {
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("no such file: {}", p.display())))
    }
}

fn existing_dir(p: &Path) -> CliResult<&Path> {
    if p.is_dir() {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("no such directory: {}", p.display())))
    }
}

fn load_config(p: Option<&PathBuf>) -> CliResult<ConfigFile> {
    match p {
        None => Ok(ConfigFile::default()),
        Some(p) => Ok(ConfigFile::read(existing_file(p)?)?),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("flowtwin: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> CliResult {
    match command {
        Command::GenTopo(a) => gen_topo(a),
        Command::GenDataset(a) => gen_dataset(a),
        Command::Simulate(a) => simulate(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Score(a) => score(a),
        Command::Rank(a) => rank(a),
        Command::Selfcheck(a) => self_check(a),
    }
}

fn gen_topo(a: GenTopo) -> CliResult {
    let cfg = load_config(a.config.as_ref())?;
    let req = cfg.topology.unwrap_or_default().resolve()?;
    let seed = seed(a.seed)?;
    let topo = make_synthetic_topology(req.kind, req.nodes, req.capacity, seed).map_err(anyhow::Error::from)?;
    write_topology(&a.out, &TopologyFile::from_topology(&topo, None))?;
    println!("wrote {} ({} nodes, {} links)", a.out.display(), topo.num_nodes(), topo.num_links());
    Ok(())
}

fn gen_dataset(a: GenDataset) -> CliResult {
    let cfg = load_config(a.config.as_ref())?;
    let mut topologies = Vec::new();
    for p in &a.topology {
        let t = read_topology(existing_file(p)?)?;
        topologies.push((t.id, t.file));
    }
    let seed = seed(a.seed)?;
    let sim = cfg.simulation.unwrap_or_default().resolve(0)?;
    let split = a
        .out
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::Usage(format!("{} has no directory name", a.out.display())))?
        .to_string();
    let m = generate_dataset(&a.out, &split, &topologies, a.samples, seed, &sim)?;
    println!(
        "wrote {} samples to {} (tiers {:?}, topologies {})",
        m.sample_count,
        a.out.display(),
        m.tier_counts,
        m.topology_ids.join(",")
    );
    Ok(())
}

fn trace_line(e: &TraceEvent) -> String {
    let link = if e.link == usize::MAX { "-".to_string() } else { e.link.to_string() };
    format!("{} {} {} {} {} {}", e.time, e.kind.as_str(), e.node, link, e.queue, e.packet)
}

fn simulate(a: Simulate) -> CliResult {
    let cfg = load_config(a.config.as_ref())?;
    let loaded = read_topology(existing_file(&a.topology)?)?;
    let seed = seed(a.seed)?;
    let sim_opts: SimOptions = cfg.simulation.unwrap_or_default();
    let sim = sim_opts.resolve(seed)?;
    let topo = &loaded.topology;
    let routing = shortest_path_routing(topo, &vec![1.0; topo.num_links()]).map_err(anyhow::Error::from)?;
    let scheduling = loaded.scheduling.clone().unwrap_or_else(|| SchedulingConfig::uniform_default(topo.num_nodes()));
    let traffic = sample_traffic_matrix(topo, &mut stream_rng(seed, 0));
    let report = run_simulation(topo, &routing, &scheduling, &traffic, &sim).map_err(anyhow::Error::from)?;
    let sample = Sample {
        sample_id: 0,
        topology_id: loaded.id.clone(),
        topology: std::sync::Arc::new(topo.clone()),
        routing,
        scheduling,
        traffic,
        labels: Some(report.flows.iter().cloned().map(flowtwin_core::sample::round_stats).collect()),
    };
    let mut text = serde_json::to_string(&SampleRecord::from_sample(&sample)).map_err(anyhow::Error::from)?;
    text.push('\n');
    std::fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;
    if sim.trace {
        let path = PathBuf::from(format!("{}.trace", a.out.display()));
        let mut w = std::io::BufWriter::new(
            std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?,
        );
        for e in &report.trace {
            writeln!(w, "{}", trace_line(e)).context("writing trace")?;
        }
        w.flush().context("writing trace")?;
    }
    let t = report.totals;
    println!(
        "created {} delivered {} dropped {} in_flight {} end_time {}",
        t.created,
        t.delivered,
        t.dropped,
        t.in_flight,
        format_sig9(report.end_time)
    );
    Ok(())
}

fn train(a: Train) -> CliResult {
    if a.dataset.len() > 2 {
        return Err(CliError::Usage("train takes at most two --dataset values (training, validation)".into()));
    }
    let cfg = load_config(a.config.as_ref())?;
    let seed = seed(a.seed)?;
    let model_cfg = cfg.model.unwrap_or_default().resolve(a.variant)?;
    let train_opts = cfg.training.unwrap_or_default();
    let tc = train_opts.resolve(seed)?;
    let mut train_set = read_samples(existing_dir(&a.dataset[0])?, true)?;
    let val_set = match a.dataset.get(1) {
        Some(dir) => read_samples(existing_dir(dir)?, true)?,
        None => {
            let held = ((train_set.len() as f64 * train_opts.holdout()?).ceil() as usize).max(1);
            if held >= train_set.len() {
                return Err(anyhow!("{} samples are too few to hold out a validation part", train_set.len()).into());
            }
            train_set.split_off(train_set.len() - held)
        }
    };
    let out = gnn::train(model_cfg, &train_set, &val_set, &tc).map_err(anyhow::Error::from)?;
    for h in &out.history {
        println!(
            "step {} loss_{} {} train_mape {} val_mape {}",
            h.step,
            out.loss.as_str(),
            format_sig9(h.train_loss),
            format_sig9(h.train_mape),
            format_sig9(h.val_mape)
        );
    }
    if let Some(step) = out.diverged_at {
        eprintln!("flowtwin: training diverged at step {step}; keeping the checkpoint from step {}", out.best_step);
    }
    write_checkpoint(&a.out, &out.model)?;
    println!("wrote {} (best step {})", a.out.display(), out.best_step);
    Ok(())
}

fn predict(a: Predict) -> CliResult {
    let model = read_checkpoint(existing_file(&a.checkpoint)?)?;
    let samples = read_samples(existing_dir(&a.dataset)?, false)?;
    let table = gnn::predict(&model, &samples).map_err(anyhow::Error::from)?;
    write_predictions(&a.out, &table)?;
    println!("wrote {} predictions to {}", table.len(), a.out.display());
    Ok(())
}

fn eval_err(e: EvalError) -> CliError {
    match e {
        EvalError::Malformed(m) => CliError::Malformed(m),
        EvalError::Other(e) => CliError::Failure(e),
    }
}

fn score(a: Score) -> CliResult {
    let submission = existing_file(&a.submission)?;
    let truth = GroundTruth::read(existing_dir(&a.truth)?)?;
    let mape = score_file(submission, &truth).map_err(eval_err)?;
    println!("MAPE {}", format_sig9(mape));
    Ok(())
}

fn rank(a: Rank) -> CliResult {
    let truth = GroundTruth::read(existing_dir(&a.truth)?)?;
    let mut entries = Vec::new();
    for s in &a.submissions {
        let (team, path) = match s.split_once('=') {
            Some((team, path)) => (team.to_string(), PathBuf::from(path)),
            None => {
                let p = PathBuf::from(s);
                let team = p.file_stem().and_then(|x| x.to_str()).unwrap_or(s).to_string();
                (team, p)
            }
        };
        entries.push((team, path));
    }
    let board = rank_files(&entries, &truth);
    let mut csv = String::from("rank,team,mape\n");
    for r in &board.rows {
        csv.push_str(&format!("{},{},{}\n", r.rank, r.team, format_sig9(r.mape)));
    }
    print!("{csv}");
    for (team, why) in &board.malformed {
        println!("unranked {team}: {why}");
    }
    if let Some(out) = &a.out {
        std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    }
    Ok(())
}

fn self_check(a: Selfcheck) -> CliResult {
    let checks = selfcheck::run_all(seed(a.seed)?);
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(anyhow!("{failed} of {} checks failed", checks.len()).into());
    }
    Ok(())
}
