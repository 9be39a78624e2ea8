//! Center of the semi-centralized scheduler.
//!
//! The center never holds a task. It tracks, per worker, a three-state view
//! (available, assigned, running), the last announced load, and the best
//! objective value seen so far. Idle workers are matched to running ones by
//! a feed directive; the task itself then travels worker to worker. The
//! center also decides when the run is over, by a two-phase handshake, a
//! quiet-window timeout, or both.
//!
//! [`CenterState`] is a pure state machine: drivers pump messages in and
//! drain `(destination, message)` pairs out, so the same code runs under
//! the deterministic simulator and the real transports, and unit tests can
//! poke it directly.
//!
//! The handshake runs in three phases (prepare, verify, confirm). Accepts
//! alone are not enough: a task can land on a worker after its accept left,
//! and the worker's recant races the other accepts on unrelated links. The
//! verify sweep closes that hole, because a task is acknowledged to its
//! sender before the sender can accept, so any worker fed this way has
//! already seen its task (and cleared its accepted round) before the verify
//! reaches it.

use crate::config::{CenterConfig, FeederPolicy, TerminationMode};
use crate::report::CenterReport;
use crate::shutdown::{RoundStep, ShutdownRounds};
use crate::transport::{Message, Rank, Tag};

/// Startup feed assignments: `lists[i]` are the ranks worker `i` will feed,
/// in service order, before any runtime brokering happens.
///
/// Worker 1 seeds the run; every other rank appears in exactly one list, at
/// a depth that matches how soon its feeder can have spare tasks: a worker
/// first reachable after `d` branching levels feeds ranks `j * b^d + i` for
/// `j in 1..b`, then the next level up, until ranks run out.
pub fn waiting_lists(max_branching: usize, num_workers: usize) -> Vec<Vec<Rank>> {
    assert!(max_branching >= 2, "branching factor below 2 cannot spread work");
    let b = max_branching as u64;
    let p = num_workers as u64;
    let mut lists = vec![Vec::new(); num_workers + 1];
    for i in 1..=p {
        let mut bd = 1u64;
        while bd < i {
            bd *= b;
        }
        while bd + i <= p {
            for j in 1..b {
                let q = j * bd + i;
                if q <= p {
                    lists[i as usize].push(q as Rank);
                }
            }
            bd *= b;
        }
    }
    lists
}

/// What the center believes about one worker. Transitions are driven
/// entirely by that worker's own status messages (plus the directives the
/// center itself issues), so the view can lag reality but never disorder
/// it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum View {
    /// Announced idle; waiting to be matched with a feeder.
    Available,
    /// A feeder was directed to serve it; work is on its way (eventually).
    Assigned,
    /// Confirmed it planted a task and is exploring.
    Running,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeKind {
    /// From the precomputed startup lists.
    Startup,
    /// Brokered at runtime; at most one outstanding per feeder.
    Runtime,
}

pub struct CenterState {
    num_workers: usize,
    max_branching: usize,
    cfg: CenterConfig,
    views: Vec<View>,
    /// Pending inbound assignment per receiver, cleared by its
    /// `StartedRunning`.
    feeder_of: Vec<Option<(Rank, EdgeKind)>>,
    /// Whether a runtime directive to this feeder is still unconfirmed.
    runtime_outbound: Vec<bool>,
    load: Vec<i64>,
    best: Option<i64>,
    shutdown: ShutdownRounds,
    last_activity: u64,
    finished: Option<&'static str>,
    outbox: Vec<(Rank, Message)>,
    report: CenterReport,
}

impl CenterState {
    pub fn new(num_workers: usize, max_branching: usize, cfg: CenterConfig) -> CenterState {
        assert!(num_workers >= 1);
        assert_eq!(cfg.seed_rank, 1, "startup lists are anchored at rank 1");
        CenterState {
            num_workers,
            max_branching,
            cfg,
            views: vec![View::Available; num_workers + 1],
            feeder_of: vec![None; num_workers + 1],
            runtime_outbound: vec![false; num_workers + 1],
            load: vec![0; num_workers + 1],
            best: None,
            shutdown: ShutdownRounds::new(num_workers),
            last_activity: 0,
            finished: None,
            outbox: Vec::new(),
            report: CenterReport::default(),
        }
    }

    /// Install the startup assignments and fire the seed trigger (an empty
    /// task message toward rank 1, which builds the root locally).
    pub fn startup(&mut self, now: u64) {
        let lists = waiting_lists(self.max_branching, self.num_workers);
        for feeder in 1..=self.num_workers {
            for &r in &lists[feeder] {
                self.feeder_of[r as usize] = Some((feeder as Rank, EdgeKind::Startup));
                self.views[r as usize] = View::Assigned;
            }
        }
        // Optimistic: the seed is about to run. Without this, every view is
        // idle at startup and a termination attempt could fire before the
        // trigger is even delivered.
        self.views[self.cfg.seed_rank as usize] = View::Running;
        self.send(self.cfg.seed_rank, Message::work(0, Vec::new()));
        self.last_activity = now;
    }

    pub fn finished(&self) -> Option<&'static str> {
        self.finished
    }

    pub fn best(&self) -> Option<i64> {
        self.best
    }

    pub fn take_outbound(&mut self) -> Vec<(Rank, Message)> {
        std::mem::take(&mut self.outbox)
    }

    pub fn into_report(mut self) -> CenterReport {
        self.report.best_value = self.best;
        self.report.ended_by = self.finished.unwrap_or("running").to_string();
        self.report
    }

    fn send(&mut self, dest: Rank, msg: Message) {
        self.outbox.push((dest, msg));
    }

    pub fn handle_message(&mut self, msg: &Message, now: u64) {
        if self.finished.is_some() {
            return;
        }
        let src = msg.source as usize;
        debug_assert!(
            src >= 1 && src <= self.num_workers,
            "message from rank {src} outside 1..={}",
            self.num_workers
        );
        self.last_activity = now;
        self.report.messages_received += 1;
        match msg.tag {
            Tag::Available => {
                debug_assert_eq!(self.views[src], View::Running, "idle announcement out of order");
                debug_assert!(self.feeder_of[src].is_none());
                self.views[src] = View::Available;
                self.try_match();
            }
            Tag::StartedRunning => {
                if let Some((feeder, kind)) = self.feeder_of[src].take() {
                    if kind == EdgeKind::Runtime {
                        self.runtime_outbound[feeder as usize] = false;
                    }
                }
                self.views[src] = View::Running;
                // Sign of life: any shutdown round in flight is now moot.
                self.abort_collection();
                self.try_match();
            }
            Tag::BestVal => {
                let value = msg.value_i64();
                if self.best.is_none_or(|b| value < b) {
                    self.best = Some(value);
                    self.report.best_holder = Some(msg.source);
                    self.report.bestval_trace.push((
                        self.report.messages_received,
                        value,
                        msg.source,
                    ));
                    self.report.bestval_broadcasts += 1;
                    for w in 1..=self.num_workers as Rank {
                        if w != msg.source {
                            self.send(w, Message::best_val(0, value));
                        }
                    }
                }
            }
            Tag::Metadata => self.load[src] = msg.value_i64(),
            Tag::TaskAck => {
                let Some(round) = msg.ack_round() else {
                    debug_assert!(false, "plain task ack addressed to the semi center");
                    return;
                };
                self.note_accept(msg.source, round);
            }
            Tag::TerminateRefuse => self.abort_collection(),
            Tag::Work | Tag::SendWork | Tag::Terminate | Tag::TaskPush | Tag::QueueFull
            | Tag::QueueOpen => {
                debug_assert!(false, "center cannot receive {:?}", msg.tag);
            }
        }
    }

    /// Match idle workers to eligible feeders until one side runs out.
    fn try_match(&mut self) {
        loop {
            let Some(receiver) =
                (1..=self.num_workers).find(|&r| self.views[r] == View::Available)
            else {
                return;
            };
            let Some(feeder) = self.pick_feeder(receiver as Rank) else {
                return;
            };
            debug_assert!(
                self.views[feeder as usize] == View::Running,
                "directive toward a non-running feeder"
            );
            if self.views[feeder as usize] != View::Running {
                self.report.misdirected_directives += 1;
            }
            self.send(feeder, Message::send_work(0, receiver as Rank));
            self.views[receiver] = View::Assigned;
            self.feeder_of[receiver] = Some((feeder, EdgeKind::Runtime));
            self.runtime_outbound[feeder as usize] = true;
            self.report.directives_brokered += 1;
        }
    }

    /// A feeder must be believed running, must not already owe a runtime
    /// directive, and must not be the receiver itself. Acyclicity of the
    /// assignment graph needs no walk: a running-in-view worker has no
    /// pending inbound edge (its own start cleared it), so a new edge out
    /// of it cannot close a cycle.
    fn pick_feeder(&self, receiver: Rank) -> Option<Rank> {
        let eligible = (1..=self.num_workers as Rank).filter(|&f| {
            f != receiver
                && self.views[f as usize] == View::Running
                && !self.runtime_outbound[f as usize]
        });
        match self.cfg.feeder_policy {
            FeederPolicy::LowestRank => eligible.min(),
            FeederPolicy::MostLoaded => {
                eligible.max_by_key(|&f| (self.load[f as usize], std::cmp::Reverse(f)))
            }
        }
    }

    fn note_accept(&mut self, src: Rank, round: u64) {
        if self.shutdown.note_reply(src, round, &mut self.outbox) == RoundStep::Done {
            self.finished = Some("handshake");
        }
    }

    fn abort_collection(&mut self) {
        if self.shutdown.abort() {
            self.report.termination_aborts += 1;
        }
    }

    /// Periodic duties: decide whether the run looks over and push the
    /// shutdown machinery along. Call after draining inbound messages.
    pub fn on_tick(&mut self, now: u64) {
        if self.finished.is_some() {
            return;
        }
        if (1..=self.num_workers).any(|r| self.views[r] == View::Running) {
            return;
        }
        let quiet = now.saturating_sub(self.last_activity);
        let window = self.cfg.quiet_window.max(1);
        match self.cfg.termination {
            TerminationMode::Timeout => {
                if quiet >= window {
                    self.hard_shutdown();
                }
            }
            TerminationMode::AckHandshake => {
                if !self.shutdown.collecting() && quiet >= window {
                    self.open_round();
                }
            }
            TerminationMode::Both => {
                if quiet >= window.saturating_mul(self.cfg.hard_quiet_windows.max(2)) {
                    self.hard_shutdown();
                } else if !self.shutdown.collecting() && quiet >= window {
                    self.open_round();
                }
            }
        }
    }

    fn open_round(&mut self) {
        self.report.termination_attempts += 1;
        self.shutdown.open(&mut self.outbox);
    }

    /// Unconditional stop: broadcast the hard phase and call the run over.
    /// The timeout mode reaches here on its own; drivers may also force it
    /// when a wall-clock limit runs out.
    pub(crate) fn hard_shutdown(&mut self) {
        self.report.termination_attempts += 1;
        self.shutdown.hard(&mut self.outbox);
        self.finished = Some("timeout");
    }
}
