//! Deterministic lockstep driver: the whole cluster in one thread.
//!
//! Each virtual tick runs the center (drain inbound, periodic duties, send),
//! then every worker in rank order (drain, duties, a slice of exploration,
//! send), then advances the simulated fabric by one tick. Two runs with the
//! same options produce identical delivery traces, which the protocol tests
//! lean on: an interleaving found once is found every time. A tick budget
//! turns would-be deadlocks into diagnosable errors instead of hung tests.
//!
//! A worker that exits has its endpoint closed, so anything still addressed
//! to it is counted by the fabric instead of silently vanishing. Under the
//! handshake modes that counter staying at zero is part of what the tests
//! assert; under plain timeout shutdown it is allowed to be nonzero, and
//! demonstrating exactly that difference is one of the reasons this driver
//! exists.

use std::sync::Arc;
use std::time::Instant;

use crate::center::CenterState;
use crate::central::CentralState;
use crate::config::{
    CenterConfig, CentralConfig, FeederPolicy, SchedulerKind, TerminationMode, WorkerConfig,
};
use crate::problem::Problem;
use crate::report::{RunReport, WorkerReport};
use crate::transport::sim::{Delivery, SimConfig, SimNet};
use crate::transport::{Message, Rank, Transport};
use crate::worker::WorkerState;

/// Knobs for one simulated run.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub workers: usize,
    pub seed: u64,
    pub scheduler: SchedulerKind,
    pub termination: TerminationMode,
    /// Inclusive per-frame delay range, in ticks.
    pub delay: (u64, u64),
    /// Optional delay override for task frames only, for schedules where
    /// work hangs in flight while status traffic stays fast.
    pub work_delay: Option<(u64, u64)>,
    /// Exploration steps per explorer slot per tick.
    pub steps_per_tick: usize,
    /// Explorer slots per worker.
    pub explorers: usize,
    /// Ticks of center-side quiet before shutdown moves. Keep it above the
    /// status-frame delay bound or quiet is routinely misjudged.
    pub quiet_window: u64,
    /// How the center picks the feeder for a brokered transfer.
    pub policy: FeederPolicy,
    /// Ticks before the run is declared stuck and aborted.
    pub tick_budget: u64,
    /// Centralized scheduler only: queue bounds and dispatch order.
    pub tasks_per_worker: usize,
    pub memory_limit_bytes: usize,
    pub fifo: bool,
}

impl SimOptions {
    pub fn new(workers: usize, seed: u64) -> SimOptions {
        SimOptions {
            workers,
            seed,
            scheduler: SchedulerKind::Semi,
            termination: TerminationMode::AckHandshake,
            delay: (0, 3),
            work_delay: None,
            steps_per_tick: 2,
            explorers: 1,
            quiet_window: 25,
            policy: FeederPolicy::MostLoaded,
            tick_budget: 200_000,
            tasks_per_worker: 1000,
            memory_limit_bytes: 64 << 20,
            fifo: false,
        }
    }
}

/// What a finished simulated run hands back.
pub struct SimOutcome {
    pub report: RunReport,
    /// Frames that arrived at a rank which had already shut down. The
    /// handshake modes must keep this at zero; timeout shutdown may not.
    pub deliveries_to_closed: u64,
    /// Full delivery trace, for determinism comparisons.
    pub log: Vec<Delivery>,
}

/// Either center behind one face, so the drivers stay scheduler-agnostic.
pub(crate) enum Coordinator {
    Semi(CenterState),
    Central(CentralState),
}

impl Coordinator {
    /// `cfg` carries the shared center settings plus the queue tuning that
    /// only the centralized variant reads.
    pub(crate) fn build(
        scheduler: SchedulerKind,
        num_workers: usize,
        max_branching: usize,
        cfg: CentralConfig,
    ) -> Coordinator {
        match scheduler {
            SchedulerKind::Semi => {
                Coordinator::Semi(CenterState::new(num_workers, max_branching, cfg.center))
            }
            SchedulerKind::Central => Coordinator::Central(CentralState::new(num_workers, cfg)),
        }
    }

    pub(crate) fn startup(&mut self, now: u64) {
        match self {
            Coordinator::Semi(c) => c.startup(now),
            Coordinator::Central(c) => c.startup(now),
        }
    }

    pub(crate) fn handle_message(&mut self, msg: &Message, now: u64) {
        match self {
            Coordinator::Semi(c) => c.handle_message(msg, now),
            Coordinator::Central(c) => c.handle_message(msg, now),
        }
    }

    pub(crate) fn on_tick(&mut self, now: u64) {
        match self {
            Coordinator::Semi(c) => c.on_tick(now),
            Coordinator::Central(c) => c.on_tick(now),
        }
    }

    /// Wall-clock limit ran out: broadcast the unconditional stop.
    pub(crate) fn force_hard(&mut self) {
        match self {
            Coordinator::Semi(c) => c.hard_shutdown(),
            Coordinator::Central(c) => c.hard_shutdown(),
        }
    }

    pub(crate) fn take_outbound(&mut self) -> Vec<(Rank, Message)> {
        match self {
            Coordinator::Semi(c) => c.take_outbound(),
            Coordinator::Central(c) => c.take_outbound(),
        }
    }

    pub(crate) fn finished(&self) -> Option<&'static str> {
        match self {
            Coordinator::Semi(c) => c.finished(),
            Coordinator::Central(c) => c.finished(),
        }
    }

    pub(crate) fn into_report(self) -> crate::report::CenterReport {
        match self {
            Coordinator::Semi(c) => c.into_report(),
            Coordinator::Central(c) => c.into_report(),
        }
    }
}

/// Run one cluster to completion on virtual time. Returns an error with
/// diagnostics if the tick budget runs out first.
pub fn run_sim<P: Problem>(problem: Arc<P>, opts: &SimOptions) -> Result<SimOutcome, String> {
    assert!(opts.workers >= 1);
    assert!(opts.steps_per_tick >= 1);
    let started = Instant::now();
    let p = opts.workers;

    let mut sim_cfg = SimConfig::new(p as u16 + 1, opts.seed).delay(opts.delay.0, opts.delay.1);
    if let Some((lo, hi)) = opts.work_delay {
        sim_cfg = sim_cfg.work_delay(lo, hi);
    }
    let net = SimNet::new(sim_cfg);
    let mut center_ep = net.endpoint(0);
    let mut worker_eps: Vec<_> = (1..=p).map(|r| net.endpoint(r as Rank)).collect();

    let cfg = CentralConfig {
        center: CenterConfig {
            termination: opts.termination,
            quiet_window: opts.quiet_window,
            feeder_policy: opts.policy,
            ..CenterConfig::default()
        },
        tasks_per_worker: opts.tasks_per_worker,
        memory_limit_bytes: opts.memory_limit_bytes,
        fifo: opts.fifo,
    };
    let mut center =
        Coordinator::build(opts.scheduler, p, problem.max_branching_factor(), cfg);
    let worker_cfg = WorkerConfig {
        scheduler: opts.scheduler,
        explorers: opts.explorers,
        metadata_min_interval: 0,
    };
    let mut workers: Vec<Option<WorkerState<P>>> = (1..=p)
        .map(|r| Some(WorkerState::new(r as Rank, p, Arc::clone(&problem), worker_cfg.clone())))
        .collect();
    let mut reports: Vec<Option<WorkerReport>> = (0..p).map(|_| None).collect();

    center.startup(0);
    for (dest, msg) in center.take_outbound() {
        center_ep.send_async(dest, msg).expect("simulated send cannot fail");
    }

    loop {
        let now = net.now();
        if now > opts.tick_budget {
            let alive: Vec<Rank> = workers
                .iter()
                .enumerate()
                .filter(|(_, w)| w.is_some())
                .map(|(i, _)| i as Rank + 1)
                .collect();
            let idle = workers
                .iter()
                .flatten()
                .filter(|w| w.fully_idle())
                .count();
            return Err(format!(
                "stuck after {now} ticks: center state {:?}, workers alive {alive:?} \
                 ({idle} of them idle), {} frames in flight, {} queued in inboxes",
                center.finished(),
                net.in_flight(),
                net.queued(),
            ));
        }

        while let Some(msg) = center_ep.try_receive().expect("simulated receive cannot fail") {
            center.handle_message(&msg, now);
        }
        center.on_tick(now);
        for (dest, msg) in center.take_outbound() {
            center_ep.send_async(dest, msg).expect("simulated send cannot fail");
        }

        for i in 0..p {
            let Some(w) = workers[i].as_mut() else { continue };
            let ep = &mut worker_eps[i];
            while let Some(msg) = ep.try_receive().expect("simulated receive cannot fail") {
                w.handle_message(&msg);
            }
            w.duties(now);
            for _ in 0..opts.steps_per_tick {
                let mut any = false;
                for slot in 0..w.num_slots() {
                    any |= w.explorer_step(slot);
                }
                if !any {
                    break;
                }
            }
            for (dest, msg) in w.take_outbound() {
                ep.send_async(dest, msg).expect("simulated send cannot fail");
            }
            if w.exiting() {
                ep.close().expect("simulated close cannot fail");
                reports[i] = Some(workers[i].take().expect("checked alive").into_report());
            }
        }

        if center.finished().is_some() && workers.iter().all(Option::is_none) {
            break;
        }
        net.advance(1);
    }

    let ticks = net.now();
    let center_report = center.into_report();
    let worker_reports: Vec<WorkerReport> =
        reports.into_iter().map(|r| r.expect("every worker exited")).collect();
    let best_value = center_report.best_value;
    let best_solution = center_report
        .best_holder
        .and_then(|r| worker_reports.iter().find(|w| w.rank == r))
        .and_then(|w| w.best_local_solution.clone());
    let report = RunReport {
        scheduler: opts.scheduler.name().into(),
        workers: worker_reports,
        center: center_report,
        wall_seconds: started.elapsed().as_secs_f64(),
        ticks: Some(ticks),
        best_value,
        best_solution,
    };
    Ok(SimOutcome {
        report,
        deliveries_to_closed: net.deliveries_to_closed(),
        log: net.take_log(),
    })
}
