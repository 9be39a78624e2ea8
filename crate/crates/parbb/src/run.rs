//! Thread-per-rank drivers for real transports.
//!
//! [`run_center`] and [`run_worker`] each drive one rank over any
//! [`Transport`] until the run ends, so a process in a multi-machine job
//! calls exactly one of them. [`run_local_tcp`] stands up a whole cluster
//! inside one process over loopback TCP, one thread per rank, and is what
//! the single-machine CLI path uses.
//!
//! A worker splits into a communication thread (this call) and one thread
//! per explorer slot. Explorers claim an instance under the state lock,
//! branch it with no lock held, then record the outcome; the lock is only
//! ever held for tree bookkeeping, so exploration and message handling
//! interleave freely.

use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use parking_lot::Mutex;

use crate::config::{CentralConfig, SchedulerKind, WorkerConfig};
use crate::problem::Problem;
use crate::report::{CenterReport, RunReport, WorkerReport};
use crate::sim::Coordinator;
use crate::transport::tcp::{RankFileEntry, TcpMesh};
use crate::transport::{Rank, Transport, TransportError};
use crate::worker::WorkerState;

/// Sleep between polls when a loop finds nothing to do.
const IDLE_POLL: Duration = Duration::from_micros(100);
/// How long ranks wait for the full mesh to come up.
const CONNECT_TIMEOUT: Duration = Duration::from_secs(20);
/// Extra time a worker grants the center past a shared deadline before it
/// stops waiting for the hard broadcast and bails out on its own.
const DEADLINE_GRACE: Duration = Duration::from_secs(5);

/// Drive the center over `transport` until the run ends. `deadline`, if
/// given, forces a hard shutdown when it passes; the report's `ended_by`
/// says which exit happened.
pub fn run_center<T: Transport>(
    mut transport: T,
    num_workers: usize,
    max_branching: usize,
    scheduler: SchedulerKind,
    cfg: CentralConfig,
    deadline: Option<Instant>,
) -> CenterReport {
    assert_eq!(transport.rank(), 0, "the center is rank 0");
    let started = Instant::now();
    let mut center = Coordinator::build(scheduler, num_workers, max_branching, cfg);
    center.startup(0);
    loop {
        let now = started.elapsed().as_millis() as u64;
        let mut moved = false;
        loop {
            match transport.try_receive() {
                Ok(Some(msg)) => {
                    center.handle_message(&msg, now);
                    moved = true;
                }
                Ok(None) => break,
                Err(e) => {
                    // Peers only vanish once the run is over; anything else
                    // is a genuine fabric failure.
                    if center.finished().is_none() {
                        panic!("center transport failed mid-run: {e}");
                    }
                    break;
                }
            }
        }
        center.on_tick(now);
        if deadline.is_some_and(|d| Instant::now() >= d) && center.finished().is_none() {
            center.force_hard();
        }
        for (dest, msg) in center.take_outbound() {
            transport.send_async(dest, msg).expect("center send failed");
            moved = true;
        }
        if center.finished().is_some() {
            break;
        }
        if !moved {
            thread::sleep(IDLE_POLL);
        }
    }
    let _ = transport.flush_outbound();
    let _ = transport.close();
    center.into_report()
}

fn explore<P: Problem>(state: &Mutex<WorkerState<P>>, problem: &P, slot: usize) {
    loop {
        let claimed = state.lock().claim_work(slot);
        match claimed {
            Some((instance, best)) => {
                let outcome = problem.branch(&instance, best);
                state.lock().finish_work(slot, outcome);
            }
            None => {
                if state.lock().exiting() {
                    return;
                }
                thread::sleep(IDLE_POLL);
            }
        }
    }
}

/// Drive one worker over `transport` until the center ends the run (or
/// `bail_at` passes, for crash containment). Spawns the explorer threads
/// internally and returns this worker's final accounting.
pub fn run_worker<P: Problem, T: Transport>(
    mut transport: T,
    problem: Arc<P>,
    num_workers: usize,
    cfg: WorkerConfig,
    bail_at: Option<Instant>,
) -> WorkerReport {
    let rank = transport.rank();
    let started = Instant::now();
    let state = Mutex::new(WorkerState::new(rank, num_workers, Arc::clone(&problem), cfg));
    thread::scope(|s| {
        let slots = state.lock().num_slots();
        for slot in 0..slots {
            let state = &state;
            let problem = Arc::clone(&problem);
            thread::Builder::new()
                .name(format!("explore-{rank}.{slot}"))
                .spawn_scoped(s, move || explore(state, problem.as_ref(), slot))
                .expect("spawn explorer");
        }
        loop {
            let mut moved = false;
            loop {
                match transport.try_receive() {
                    Ok(Some(msg)) => {
                        state.lock().handle_message(&msg);
                        moved = true;
                    }
                    Ok(None) => break,
                    Err(e) => {
                        if !state.lock().exiting() {
                            panic!("worker {rank} transport failed mid-run: {e}");
                        }
                        break;
                    }
                }
            }
            let now = started.elapsed().as_millis() as u64;
            let outbound = {
                let mut st = state.lock();
                st.duties(now);
                st.take_outbound()
            };
            for (dest, msg) in outbound {
                transport.send_async(dest, msg).expect("worker send failed");
                moved = true;
            }
            if state.lock().exiting() {
                break;
            }
            if bail_at.is_some_and(|d| Instant::now() >= d) {
                state.lock().force_exit();
                break;
            }
            if !moved {
                thread::sleep(IDLE_POLL);
            }
        }
    });
    let _ = transport.flush_outbound();
    let _ = transport.close();
    state.into_inner().into_report()
}

/// Everything [`run_local_tcp`] needs beyond the problem itself.
#[derive(Debug, Clone)]
pub struct LocalRunOptions {
    pub workers: usize,
    pub scheduler: SchedulerKind,
    /// Center settings (termination mode, quiet window in milliseconds) and
    /// centralized-queue tuning.
    pub cfg: CentralConfig,
    /// Explorer threads per worker.
    pub explorers: usize,
    /// Minimum milliseconds between a worker's load announcements.
    pub metadata_min_interval: u64,
    pub time_limit: Option<Duration>,
}

impl LocalRunOptions {
    pub fn new(workers: usize) -> LocalRunOptions {
        LocalRunOptions {
            workers,
            scheduler: SchedulerKind::Semi,
            cfg: CentralConfig::default(),
            explorers: 1,
            metadata_min_interval: 1,
            time_limit: None,
        }
    }
}

/// Run a whole cluster in this process: rank 0 plus `workers` worker ranks,
/// one thread per rank (plus explorer threads), all meshed over loopback
/// TCP. Returns the assembled run report.
pub fn run_local_tcp<P: Problem>(
    problem: Arc<P>,
    opts: &LocalRunOptions,
) -> Result<RunReport, TransportError> {
    assert!(opts.workers >= 1);
    let p = opts.workers;
    let mut entries = Vec::new();
    let mut listeners = Vec::new();
    for rank in 0..=p as Rank {
        let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        entries.push(RankFileEntry {
            rank,
            host: "127.0.0.1".into(),
            port: listener.local_addr()?.port(),
        });
        listeners.push(listener);
    }
    let center_listener = listeners.remove(0);
    let entries = &entries;
    let worker_cfg = WorkerConfig {
        scheduler: opts.scheduler,
        explorers: opts.explorers,
        metadata_min_interval: opts.metadata_min_interval,
    };
    let started = Instant::now();
    let deadline = opts.time_limit.map(|limit| started + limit);
    let bail_at = deadline.map(|d| d + DEADLINE_GRACE);

    let (center_report, worker_reports) = thread::scope(|s| {
        let mut handles = Vec::new();
        for (i, listener) in listeners.into_iter().enumerate() {
            let rank = (i + 1) as Rank;
            let problem = Arc::clone(&problem);
            let cfg = worker_cfg.clone();
            let handle = thread::Builder::new()
                .name(format!("rank-{rank}"))
                .spawn_scoped(s, move || {
                    let mesh =
                        TcpMesh::connect_with(entries, rank, CONNECT_TIMEOUT, Some(listener))
                            .expect("worker mesh failed to form");
                    run_worker(mesh, problem, p, cfg, bail_at)
                })
                .expect("spawn worker rank");
            handles.push(handle);
        }
        let mesh = TcpMesh::connect_with(entries, 0, CONNECT_TIMEOUT, Some(center_listener))
            .expect("center mesh failed to form");
        let center_report = run_center(
            mesh,
            p,
            problem.max_branching_factor(),
            opts.scheduler,
            opts.cfg.clone(),
            deadline,
        );
        let worker_reports: Vec<WorkerReport> = handles
            .into_iter()
            .map(|h| h.join().expect("worker rank panicked"))
            .collect();
        (center_report, worker_reports)
    });

    let best_value = center_report.best_value;
    let best_solution = center_report
        .best_holder
        .and_then(|r| worker_reports.iter().find(|w| w.rank == r))
        .and_then(|w| w.best_local_solution.clone());
    Ok(RunReport {
        scheduler: opts.scheduler.name().into(),
        workers: worker_reports,
        center: center_report,
        wall_seconds: started.elapsed().as_secs_f64(),
        ticks: None,
        best_value,
        best_solution,
    })
}
