//! Run engine shared by `solve` and `bench`: load a graph, run it under
//! the chosen scheduler and transport, and hand back one uniform outcome.
//! Also hosts the hidden per-rank entry point that the multi-process tcp
//! mode spawns, one OS process per rank, wired up through a rank file.

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use parbb::config::{
    CenterConfig, CentralConfig, FeederPolicy, SchedulerKind, TerminationMode, WorkerConfig,
};
use parbb::report::{CenterReport, RunReport, WorkerReport};
use parbb::run::{run_center, run_worker};
use parbb::sim::{run_sim, SimOptions};
use parbb::transport::tcp::{format_rank_file, parse_rank_file, RankFileEntry, TcpMesh};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode, Stdio};
use std::sync::Arc;
use std::time::{Duration, Instant};
use vcover::adapter::VertexCover;
use vcover::encode::Encoding;
use vcover::graph::{is_vertex_cover, Graph};
use vcover::solve::mvc_sequential_with_deadline;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchedulerChoice {
    /// Plain depth-first search in this process, no runtime at all.
    Sequential,
    /// Status-only center brokering worker-to-worker task transfers.
    Semi,
    /// Center-owned bounded priority queue dispatching every task.
    Central,
}

impl SchedulerChoice {
    pub fn name(self) -> &'static str {
        match self {
            SchedulerChoice::Sequential => "sequential",
            SchedulerChoice::Semi => "semi",
            SchedulerChoice::Central => "central",
        }
    }

    fn kind(self) -> Option<SchedulerKind> {
        match self {
            SchedulerChoice::Sequential => None,
            SchedulerChoice::Semi => Some(SchedulerKind::Semi),
            SchedulerChoice::Central => Some(SchedulerKind::Central),
        }
    }
}

impl std::fmt::Display for SchedulerChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransportKind {
    /// Deterministic virtual-time fabric, every rank in this process.
    Sim,
    /// Loopback TCP mesh, one OS process per rank.
    Tcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodingChoice {
    Basic,
    Optimized,
}

impl EncodingChoice {
    pub fn encoding(self) -> Encoding {
        match self {
            EncodingChoice::Basic => Encoding::Basic,
            EncodingChoice::Optimized => Encoding::Optimized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TerminationChoice {
    Handshake,
    Timeout,
    Both,
}

impl TerminationChoice {
    fn mode(self) -> TerminationMode {
        match self {
            TerminationChoice::Handshake => TerminationMode::AckHandshake,
            TerminationChoice::Timeout => TerminationMode::Timeout,
            TerminationChoice::Both => TerminationMode::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    MostLoaded,
    LowestRank,
}

impl PolicyChoice {
    fn policy(self) -> FeederPolicy {
        match self {
            PolicyChoice::MostLoaded => FeederPolicy::MostLoaded,
            PolicyChoice::LowestRank => FeederPolicy::LowestRank,
        }
    }
}

/// Knobs shared by every run-shaped command.
#[derive(Debug, Clone, Args)]
pub struct RunKnobs {
    /// Exploration threads (tcp) or interleaved explorer slots (sim) per
    /// worker.
    #[arg(long, default_value_t = 1)]
    pub explorers: usize,
    /// Wire form of task instances.
    #[arg(long, value_enum, default_value_t = EncodingChoice::Optimized)]
    pub encoding: EncodingChoice,
    /// Message fabric: deterministic in-process simulation or one OS
    /// process per rank over loopback TCP.
    #[arg(long, value_enum, default_value_t = TransportKind::Sim)]
    pub transport: TransportKind,
    /// Seed for simulated delays (sim transport only).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// How a run is allowed to end.
    #[arg(long, value_enum, default_value_t = TerminationChoice::Handshake)]
    pub termination: TerminationChoice,
    /// Quiet span (sim ticks or milliseconds) before the center moves to
    /// end the run; defaults to 25 ticks / 500 ms.
    #[arg(long)]
    pub quiet_window: Option<u64>,
    /// Feeder selection among eligible running workers.
    #[arg(long, value_enum, default_value_t = PolicyChoice::MostLoaded)]
    pub policy: PolicyChoice,
    /// Wall-clock budget in seconds; exceeding it marks the row TIMEOUT
    /// and exits with code 2.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// Sim transport: virtual ticks before a run is declared stuck.
    #[arg(long, default_value_t = 10_000_000)]
    pub tick_budget: u64,
    /// Sim transport: exploration steps per explorer slot per tick.
    #[arg(long, default_value_t = 8)]
    pub steps_per_tick: usize,
    /// Central scheduler: queue capacity, in tasks per worker.
    #[arg(long, default_value_t = 1000)]
    pub tasks_per_worker: usize,
    /// Central scheduler: queue byte budget, in mebibytes.
    #[arg(long, default_value_t = 10 * 1024)]
    pub memory_limit_mb: usize,
    /// Central scheduler: dispatch in arrival order, ignoring priorities.
    #[arg(long, default_value_t = false)]
    pub fifo: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// DIMACS instance file.
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = SchedulerChoice::Semi)]
    pub scheduler: SchedulerChoice,
    /// Worker count (ranks 1..=workers; the center is rank 0).
    #[arg(long)]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub knobs: RunKnobs,
    /// Append one result row to this CSV file.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Print the full run report as JSON on stdout.
    #[arg(long, default_value_t = false)]
    pub json: bool,
}

/// One fully resolved run request.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub instance: PathBuf,
    pub scheduler: SchedulerChoice,
    pub workers: usize,
    pub knobs: RunKnobs,
}

impl RunSpec {
    pub fn new(
        instance: PathBuf,
        scheduler: SchedulerChoice,
        workers: Option<usize>,
        knobs: RunKnobs,
    ) -> Result<RunSpec> {
        let workers = match (scheduler, workers) {
            (SchedulerChoice::Sequential, None | Some(1)) => 1,
            (SchedulerChoice::Sequential, Some(w)) => {
                bail!("sequential runs use exactly one worker, not {w}")
            }
            (_, Some(0)) => bail!("at least one worker is required"),
            (_, Some(w)) => w,
            (_, None) => 4,
        };
        Ok(RunSpec { instance, scheduler, workers, knobs })
    }

    pub fn encoding(&self) -> Encoding {
        self.knobs.encoding.encoding()
    }

    /// Quiet window in the transport's native unit: simulated ticks under
    /// sim, milliseconds under tcp.
    fn quiet_window(&self) -> u64 {
        self.knobs.quiet_window.unwrap_or(match self.knobs.transport {
            TransportKind::Sim => 25,
            TransportKind::Tcp => 500,
        })
    }
}

/// What any run hands back, uniform across schedulers and transports.
pub struct Outcome {
    pub label: String,
    pub n: usize,
    pub m: usize,
    /// Full report; missing only when a timed-out process had to be killed.
    pub report: Option<RunReport>,
    pub wall_seconds: f64,
    pub timed_out: bool,
    /// Proven optimal cover size; absent on timeout (nothing is proven).
    pub mvc_size: Option<i64>,
    pub nodes_explored: u64,
}

pub fn load_graph(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let (graph, warnings) =
        vcover::dimacs::parse_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if warnings.any() {
        eprintln!(
            "{}: ignored {} duplicate edge(s) and {} self loop(s)",
            path.display(),
            warnings.duplicate_edges,
            warnings.self_loops
        );
    }
    Ok(graph)
}

fn label_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "?".into())
}

/// Run one resolved spec to completion (or to its budget).
pub fn run_spec(spec: &RunSpec) -> Result<Outcome> {
    let graph = load_graph(&spec.instance)?;
    let label = label_of(&spec.instance);
    let n = graph.n();
    let m = graph.edge_count();
    match spec.scheduler {
        SchedulerChoice::Sequential => run_sequential(spec, graph, label, n, m),
        SchedulerChoice::Semi | SchedulerChoice::Central => match spec.knobs.transport {
            TransportKind::Sim => run_simulated(spec, graph, label, n, m),
            TransportKind::Tcp => run_processes(spec, label, n, m),
        },
    }
}

fn run_sequential(spec: &RunSpec, graph: Graph, label: String, n: usize, m: usize) -> Result<Outcome> {
    let started = Instant::now();
    let deadline = spec.knobs.time_limit.map(|s| started + Duration::from_secs_f64(s));
    let solved = mvc_sequential_with_deadline(&graph, deadline);
    let wall = started.elapsed().as_secs_f64();
    match solved {
        Some(res) => {
            if !is_vertex_cover(&graph, &res.cover) {
                bail!("sequential solver returned an invalid cover");
            }
            Ok(Outcome {
                label,
                n,
                m,
                report: None,
                wall_seconds: wall,
                timed_out: false,
                mvc_size: Some(res.size as i64),
                nodes_explored: res.nodes,
            })
        }
        None => Ok(Outcome {
            label,
            n,
            m,
            report: None,
            wall_seconds: wall,
            timed_out: true,
            mvc_size: None,
            nodes_explored: 0,
        }),
    }
}

fn run_simulated(spec: &RunSpec, graph: Graph, label: String, n: usize, m: usize) -> Result<Outcome> {
    let scheduler = spec.scheduler.kind().expect("sequential handled earlier");
    let problem = Arc::new(VertexCover::new(Arc::new(graph), spec.encoding()));
    let mut opts = SimOptions::new(spec.workers, spec.knobs.seed);
    opts.scheduler = scheduler;
    opts.termination = spec.knobs.termination.mode();
    opts.steps_per_tick = spec.knobs.steps_per_tick;
    opts.explorers = spec.knobs.explorers;
    opts.quiet_window = spec.quiet_window();
    opts.policy = spec.knobs.policy.policy();
    opts.tick_budget = spec.knobs.tick_budget;
    opts.tasks_per_worker = spec.knobs.tasks_per_worker;
    opts.memory_limit_bytes = spec.knobs.memory_limit_mb << 20;
    opts.fifo = spec.knobs.fifo;
    let started = Instant::now();
    match run_sim(Arc::clone(&problem), &opts) {
        Ok(outcome) => {
            let report = outcome.report;
            let mvc = verified_size(&problem, &report)?;
            Ok(Outcome {
                label,
                n,
                m,
                nodes_explored: report.workers.iter().map(|w| w.tasks_explored).sum(),
                wall_seconds: report.wall_seconds,
                timed_out: false,
                mvc_size: Some(mvc),
                report: Some(report),
            })
        }
        Err(stuck) => {
            eprintln!("{label}: simulation ran out of ticks: {stuck}");
            Ok(Outcome {
                label,
                n,
                m,
                report: None,
                wall_seconds: started.elapsed().as_secs_f64(),
                timed_out: true,
                mvc_size: None,
                nodes_explored: 0,
            })
        }
    }
}

/// Decode the fetched cover, check it against the base graph, and make
/// sure its size is the value the center settled on.
pub fn verified_size(problem: &VertexCover, report: &RunReport) -> Result<i64> {
    use parbb::problem::Problem;
    let value = report.best_value.context("run finished without any solution")?;
    let bytes = report
        .best_solution
        .as_deref()
        .context("best value reported but no cover was fetched")?;
    let cover = problem
        .deserialize_solution(bytes)
        .map_err(|e| anyhow::anyhow!("fetched cover does not decode: {e}"))?;
    if !is_vertex_cover(problem.base(), &cover) {
        bail!("fetched cover misses an edge");
    }
    if cover.count() as i64 != value {
        bail!("fetched cover has {} vertices, center settled on {value}", cover.count());
    }
    Ok(value)
}

/// JSON line each rank process prints on exit.
#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RankOutput {
    Center { report: CenterReport },
    Worker { report: WorkerReport },
}

/// Reserve a free loopback port per rank by binding and releasing; the
/// children re-bind their assigned port from the rank file.
fn reserve_ports(count: usize) -> Result<Vec<RankFileEntry>> {
    let mut probes = Vec::with_capacity(count);
    let mut entries = Vec::with_capacity(count);
    for rank in 0..count {
        let listener = TcpListener::bind(("127.0.0.1", 0)).context("probing a free port")?;
        entries.push(RankFileEntry {
            rank: rank as u16,
            host: "127.0.0.1".into(),
            port: listener.local_addr()?.port(),
        });
        probes.push(listener);
    }
    drop(probes);
    Ok(entries)
}

fn run_processes(spec: &RunSpec, label: String, n: usize, m: usize) -> Result<Outcome> {
    let p = spec.workers;
    let entries = reserve_ports(p + 1)?;
    let rank_path = std::env::temp_dir().join(format!(
        "parbb-ranks-{}-{:x}.txt",
        std::process::id(),
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0)
    ));
    std::fs::write(&rank_path, format_rank_file(&entries))?;
    let exe = std::env::current_exe().context("locating this binary")?;
    let started = Instant::now();

    let mut pending: Vec<(u16, std::process::Child)> = Vec::new();
    for rank in 0..=p as u16 {
        let mut cmd = Command::new(&exe);
        cmd.arg("__rank")
            .arg("--rank")
            .arg(rank.to_string())
            .arg("--rank-file")
            .arg(&rank_path)
            .arg("--instance")
            .arg(&spec.instance)
            .arg("--workers")
            .arg(p.to_string())
            .arg("--scheduler")
            .arg(spec.scheduler.name())
            .arg("--encoding")
            .arg(match spec.knobs.encoding {
                EncodingChoice::Basic => "basic",
                EncodingChoice::Optimized => "optimized",
            })
            .arg("--explorers")
            .arg(spec.knobs.explorers.to_string())
            .arg("--termination")
            .arg(spec.knobs.termination.mode().name())
            .arg("--policy")
            .arg(match spec.knobs.policy {
                PolicyChoice::MostLoaded => "most-loaded",
                PolicyChoice::LowestRank => "lowest-rank",
            })
            .arg("--tasks-per-worker")
            .arg(spec.knobs.tasks_per_worker.to_string())
            .arg("--memory-limit-mb")
            .arg(spec.knobs.memory_limit_mb.to_string())
            .arg("--quiet-window-ms")
            .arg(spec.quiet_window().to_string())
            .stdout(Stdio::piped());
        if let Some(t) = spec.knobs.time_limit {
            cmd.arg("--budget-ms").arg(((t * 1000.0) as u64).to_string());
        }
        if spec.knobs.fifo {
            cmd.arg("--fifo");
        }
        let child = cmd.spawn().with_context(|| format!("spawning rank {rank}"))?;
        pending.push((rank, child));
    }

    // Reap everyone; past the budget plus a wide grace, stop waiting and
    // kill what is left.
    let hard_stop = spec
        .knobs
        .time_limit
        .map(|t| started + Duration::from_secs_f64(t) + Duration::from_secs(20));
    let mut outputs: BTreeMap<u16, std::process::Output> = BTreeMap::new();
    let mut killed = false;
    while !pending.is_empty() {
        if let Some(stop) = hard_stop {
            if !killed && Instant::now() >= stop {
                for (_, child) in pending.iter_mut() {
                    let _ = child.kill();
                }
                killed = true;
            }
        }
        let mut still = Vec::new();
        for (rank, mut child) in pending {
            if child.try_wait()?.is_some() {
                outputs.insert(rank, child.wait_with_output()?);
            } else {
                still.push((rank, child));
            }
        }
        pending = still;
        if !pending.is_empty() {
            std::thread::sleep(Duration::from_millis(20));
        }
    }
    let wall = started.elapsed().as_secs_f64();
    let _ = std::fs::remove_file(&rank_path);

    if killed {
        eprintln!("{label}: cluster overran its budget and was killed");
        return Ok(Outcome {
            label,
            n,
            m,
            report: None,
            wall_seconds: wall,
            timed_out: true,
            mvc_size: None,
            nodes_explored: 0,
        });
    }

    let mut center: Option<CenterReport> = None;
    let mut workers: Vec<WorkerReport> = Vec::new();
    for (rank, out) in &outputs {
        if !out.status.success() {
            bail!("rank {rank} exited with {}", out.status);
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let line = text
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .with_context(|| format!("rank {rank} printed no report"))?;
        match serde_json::from_str::<RankOutput>(line)
            .with_context(|| format!("rank {rank} printed an unreadable report"))?
        {
            RankOutput::Center { report } => center = Some(report),
            RankOutput::Worker { report } => workers.push(report),
        }
    }
    let center = center.context("no center report came back")?;
    workers.sort_by_key(|w| w.rank);

    let best_solution = center.best_holder.and_then(|holder| {
        workers.iter().find(|w| w.rank == holder).and_then(|w| w.best_local_solution.clone())
    });
    let report = RunReport {
        scheduler: spec.scheduler.name().to_string(),
        workers,
        best_value: center.best_value,
        center,
        wall_seconds: wall,
        ticks: None,
        best_solution,
    };

    let timed_out = spec.knobs.time_limit.is_some_and(|t| wall >= t)
        || report.center.ended_by != expected_end(spec.knobs.termination.mode());
    let graph = load_graph(&spec.instance)?;
    let problem = VertexCover::new(Arc::new(graph), spec.encoding());
    let mvc = if timed_out { None } else { Some(verified_size(&problem, &report)?) };
    Ok(Outcome {
        label,
        n,
        m,
        nodes_explored: report.workers.iter().map(|w| w.tasks_explored).sum(),
        wall_seconds: wall,
        timed_out,
        mvc_size: mvc,
        report: Some(report),
    })
}

/// How a run ends when nothing went wrong under each mode. Anything else
/// (the hard fallback of the combined mode, above all) counts as overrun.
fn expected_end(mode: TerminationMode) -> &'static str {
    match mode {
        TerminationMode::Timeout => "timeout",
        TerminationMode::AckHandshake | TerminationMode::Both => "handshake",
    }
}

pub fn cmd_solve(args: SolveArgs) -> Result<ExitCode> {
    let spec = RunSpec::new(args.instance, args.scheduler, args.workers, args.knobs)?;
    let out = run_spec(&spec)?;
    if args.json {
        if let Some(report) = &out.report {
            println!("{}", serde_json::to_string(report)?);
        }
    }
    println!(
        "{}: n={} m={} scheduler={} encoding={} workers={}",
        out.label,
        out.n,
        out.m,
        spec.scheduler.name(),
        spec.encoding().name(),
        spec.workers
    );
    if out.timed_out {
        println!("TIMEOUT after {:.3} s", out.wall_seconds);
    } else {
        println!(
            "minimum vertex cover {} in {:.3} s ({} branch steps)",
            out.mvc_size.expect("finished runs carry a size"),
            out.wall_seconds,
            out.nodes_explored
        );
    }
    if let Some(report) = &out.report {
        println!(
            "tasks sent {}, best-value broadcasts {}, shutdown rounds {} ({} aborted), ended by {}",
            report.workers.iter().map(|w| w.tasks_sent + w.tasks_pushed).sum::<u64>(),
            report.center.bestval_broadcasts,
            report.center.termination_attempts,
            report.center.termination_aborts,
            report.center.ended_by
        );
    }
    if let Some(csv) = &args.csv {
        crate::row::append_row(csv, &crate::row::CsvRow::from_outcome(&spec, &out), false)?;
    }
    Ok(ExitCode::from(if out.timed_out { 2 } else { 0 }))
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    rank: u16,
    #[arg(long)]
    rank_file: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    workers: usize,
    #[arg(long)]
    scheduler: String,
    #[arg(long)]
    encoding: String,
    #[arg(long, default_value_t = 1)]
    explorers: usize,
    #[arg(long, default_value = "handshake")]
    termination: String,
    #[arg(long)]
    quiet_window_ms: Option<u64>,
    #[arg(long, default_value = "most-loaded")]
    policy: String,
    #[arg(long)]
    budget_ms: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    tasks_per_worker: usize,
    #[arg(long, default_value_t = 10 * 1024)]
    memory_limit_mb: usize,
    #[arg(long, default_value_t = false)]
    fifo: bool,
}

/// Entry point for one spawned rank: join the mesh, run the role, print
/// one JSON report line.
pub fn cmd_rank(args: RankArgs) -> Result<ExitCode> {
    let scheduler: SchedulerKind =
        args.scheduler.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let termination: TerminationMode =
        args.termination.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let encoding = match args.encoding.as_str() {
        "basic" => Encoding::Basic,
        "optimized" => Encoding::Optimized,
        other => bail!("unknown encoding '{other}'"),
    };
    let policy = match args.policy.as_str() {
        "most-loaded" => FeederPolicy::MostLoaded,
        "lowest-rank" => FeederPolicy::LowestRank,
        other => bail!("unknown policy '{other}'"),
    };
    let graph = load_graph(&args.instance)?;
    let problem = Arc::new(VertexCover::new(Arc::new(graph), encoding));
    let entries = parse_rank_file(&std::fs::read_to_string(&args.rank_file)?)
        .map_err(|e| anyhow::anyhow!("rank file: {e}"))?;
    let mesh = TcpMesh::connect(&entries, args.rank, Duration::from_secs(20))
        .map_err(|e| anyhow::anyhow!("joining the mesh as rank {}: {e}", args.rank))?;
    let deadline = args.budget_ms.map(|ms| Instant::now() + Duration::from_millis(ms));

    let line = if args.rank == 0 {
        let cfg = CentralConfig {
            center: CenterConfig {
                termination,
                quiet_window: args.quiet_window_ms.unwrap_or(500),
                hard_quiet_windows: 20,
                feeder_policy: policy,
                seed_rank: 1,
            },
            tasks_per_worker: args.tasks_per_worker,
            memory_limit_bytes: args.memory_limit_mb << 20,
            fifo: args.fifo,
        };
        use parbb::problem::Problem;
        let report = run_center(
            mesh,
            args.workers,
            problem.max_branching_factor(),
            scheduler,
            cfg,
            deadline,
        );
        serde_json::to_string(&RankOutput::Center { report })?
    } else {
        let cfg = WorkerConfig { scheduler, explorers: args.explorers, metadata_min_interval: 1 };
        let bail_at = deadline.map(|d| d + Duration::from_secs(5));
        let report = run_worker(mesh, problem, args.workers, cfg, bail_at);
        serde_json::to_string(&RankOutput::Worker { report })?
    };
    println!("{line}");
    Ok(ExitCode::from(0))
}
