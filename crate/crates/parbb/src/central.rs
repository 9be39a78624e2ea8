//! Center of the fully centralized baseline scheduler.
//!
//! The comparison point for the brokering scheduler: every spare task
//! travels through the center. Workers offer their best pending task upward
//! (one unacknowledged offer at a time), the center queues the offers and
//! sends the best queued task to the lowest-ranked idle worker. The queue
//! is bounded by a task count and a byte budget; crossing a bound
//! broadcasts a stop-pushing flag, and draining under nine tenths of both
//! bounds broadcasts the reopen. Shutdown reuses the same three-phase
//! handshake as [`crate::center`].
//!
//! Because the center sees every task and every idle report, its view here
//! is exact rather than a lagging approximation: a shutdown round can only
//! open when nobody is believed running, nothing is queued, and every
//! dispatched task has been acknowledged.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::config::{CentralConfig, TerminationMode};
use crate::report::CenterReport;
use crate::shutdown::{RoundStep, ShutdownRounds};
use crate::transport::{Message, Rank, Tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum View {
    /// Announced idle; a dispatch may target it.
    Available,
    /// Was sent a task (or the seed trigger) and has not reported idle since.
    Running,
}

/// Queued task: dispatch key, arrival stamp, wire bytes. Ordering ignores
/// the bytes; ties on the key go to the oldest arrival.
struct Entry {
    key: i64,
    seq: u64,
    bytes: Vec<u8>,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Entry) -> bool {
        self.key == other.key && self.seq == other.seq
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Entry) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Entry) -> std::cmp::Ordering {
        (self.key, Reverse(self.seq)).cmp(&(other.key, Reverse(other.seq)))
    }
}

pub struct CentralState {
    num_workers: usize,
    cfg: CentralConfig,
    views: Vec<View>,
    queue: BinaryHeap<Entry>,
    queue_bytes: usize,
    next_seq: u64,
    /// Dispatched tasks whose receiver has not acknowledged yet.
    in_flight: usize,
    /// Last broadcast queue flag; true while pushes are stopped.
    closed: bool,
    best: Option<i64>,
    shutdown: ShutdownRounds,
    last_activity: u64,
    finished: Option<&'static str>,
    outbox: Vec<(Rank, Message)>,
    report: CenterReport,
}

impl CentralState {
    pub fn new(num_workers: usize, cfg: CentralConfig) -> CentralState {
        assert!(num_workers >= 1);
        assert_eq!(cfg.center.seed_rank, 1, "the seed trigger goes to rank 1");
        CentralState {
            num_workers,
            cfg,
            views: vec![View::Available; num_workers + 1],
            queue: BinaryHeap::new(),
            queue_bytes: 0,
            next_seq: 0,
            in_flight: 0,
            closed: false,
            best: None,
            shutdown: ShutdownRounds::new(num_workers),
            last_activity: 0,
            finished: None,
            outbox: Vec::new(),
            report: CenterReport::default(),
        }
    }

    /// Fire the seed trigger; no startup assignments exist in this scheme.
    pub fn startup(&mut self, now: u64) {
        self.views[self.cfg.center.seed_rank as usize] = View::Running;
        self.send(self.cfg.center.seed_rank, Message::work(0, Vec::new()));
        self.last_activity = now;
    }

    pub fn finished(&self) -> Option<&'static str> {
        self.finished
    }

    pub fn best(&self) -> Option<i64> {
        self.best
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
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
                self.views[src] = View::Available;
                self.try_dispatch();
            }
            Tag::TaskPush => {
                // Only a worker that was sent work can have work to spare,
                // and its pushes precede its idle report on their shared
                // link.
                debug_assert_eq!(self.views[src], View::Running, "push from an idle worker");
                // New work on the table: a shutdown round in flight is moot.
                self.abort_collection();
                let (priority, task) = msg.push_parts();
                let key = if self.cfg.fifo { 0 } else { priority };
                self.queue_bytes += task.len();
                self.queue.push(Entry { key, seq: self.next_seq, bytes: task.to_vec() });
                self.next_seq += 1;
                self.report.queue_peak_len = self.report.queue_peak_len.max(self.queue.len());
                self.report.queue_peak_bytes = self.report.queue_peak_bytes.max(self.queue_bytes);
                self.send(msg.source, Message::ack_task(0));
                self.try_dispatch();
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
            Tag::TaskAck => match msg.ack_round() {
                None => {
                    debug_assert!(self.in_flight > 0, "dispatch ack without a dispatch");
                    self.in_flight = self.in_flight.saturating_sub(1);
                }
                Some(round) => self.note_accept(msg.source, round),
            },
            Tag::TerminateRefuse => self.abort_collection(),
            Tag::StartedRunning | Tag::Metadata | Tag::Work | Tag::SendWork | Tag::Terminate
            | Tag::QueueFull | Tag::QueueOpen => {
                debug_assert!(false, "this center cannot receive {:?}", msg.tag);
            }
        }
    }

    /// Send queued tasks to idle workers, lowest rank first, until one side
    /// runs out; then re-evaluate the queue flag once.
    fn try_dispatch(&mut self) {
        loop {
            if self.queue.is_empty() {
                break;
            }
            let Some(w) = (1..=self.num_workers).find(|&r| self.views[r] == View::Available)
            else {
                break;
            };
            let entry = self.queue.pop().expect("checked non-empty");
            self.queue_bytes -= entry.bytes.len();
            self.send(w as Rank, Message::work(0, entry.bytes));
            self.views[w] = View::Running;
            self.in_flight += 1;
            self.report.directives_brokered += 1;
        }
        self.update_flag();
    }

    /// Flip the push flag when the queue crosses its bounds. Strict
    /// alternation holds by construction; workers assert it on receipt.
    fn update_flag(&mut self) {
        let limit = self.cfg.task_limit(self.num_workers);
        let mem = self.cfg.memory_limit_bytes;
        if !self.closed {
            if self.queue.len() >= limit || self.queue_bytes >= mem {
                self.closed = true;
                self.report.flag_transitions.push(true);
                self.broadcast_flag(Tag::QueueFull);
            }
        } else if self.queue.len() <= limit.saturating_mul(9) / 10
            && self.queue_bytes <= mem.saturating_mul(9) / 10
        {
            self.closed = false;
            self.report.flag_transitions.push(false);
            self.broadcast_flag(Tag::QueueOpen);
        }
    }

    fn broadcast_flag(&mut self, tag: Tag) {
        for w in 1..=self.num_workers as Rank {
            self.send(w, Message::empty(tag, 0));
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

    /// Periodic duties; call after draining inbound messages.
    pub fn on_tick(&mut self, now: u64) {
        if self.finished.is_some() {
            return;
        }
        if (1..=self.num_workers).any(|r| self.views[r] == View::Running) {
            return;
        }
        // A worker's dispatch ack precedes its idle report on their shared
        // link, so an all-idle view implies nothing is in flight.
        debug_assert_eq!(self.in_flight, 0);
        if !self.queue.is_empty() || self.in_flight > 0 {
            return;
        }
        let quiet = now.saturating_sub(self.last_activity);
        let window = self.cfg.center.quiet_window.max(1);
        match self.cfg.center.termination {
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
                if quiet >= window.saturating_mul(self.cfg.center.hard_quiet_windows.max(2)) {
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

    /// Unconditional stop, as in [`crate::center::CenterState`]: reached by
    /// the timeout mode or forced by a driver on a wall-clock limit.
    pub(crate) fn hard_shutdown(&mut self) {
        self.report.termination_attempts += 1;
        self.shutdown.hard(&mut self.outbox);
        self.finished = Some("timeout");
    }
}
