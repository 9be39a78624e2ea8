//! Worker: explores tasks, serves feed directives, and reports status.
//!
//! [`WorkerState`] is a pure state machine shared by both drivers. The
//! communication side pumps inbound messages through
//! [`handle_message`](WorkerState::handle_message), runs
//! [`duties`](WorkerState::duties) once per iteration, and drains the
//! outbox. The exploration side is split into
//! [`claim_work`](WorkerState::claim_work) and
//! [`finish_work`](WorkerState::finish_work) so a real explorer thread can
//! hold the state lock only around tree bookkeeping, never around the
//! user's branch call; the lockstep simulator instead uses
//! [`explorer_step`](WorkerState::explorer_step), which does all three in
//! one call.
//!
//! Every explorer slot owns a task tree. The comm side steals from whichever
//! tree fronts the highest priority, to serve a waiting rank or to re-plant
//! for an idle sibling slot. A fed task always becomes the root of the
//! receiving slot's tree, so the shipped-vs-expanded accounting stays exact.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::center::waiting_lists;
use crate::config::{SchedulerKind, WorkerConfig};
use crate::problem::{BranchOutcome, Problem};
use crate::report::WorkerReport;
use crate::tasktree::{BeginSearch, NodeHandle, TaskTree};
use crate::transport::{Message, Rank, Tag, TerminatePhase};

/// Whether this worker has announced itself idle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    /// Idle and known to the center as such (or still pre-assigned at
    /// startup); waiting for a task.
    Parked,
    /// Holds or is exploring work.
    Engaged,
}

struct Frame {
    node: NodeHandle,
    children: Vec<NodeHandle>,
    next: usize,
}

struct Slot {
    /// Root planted by the comm side, not yet claimed.
    pending_root: Option<NodeHandle>,
    /// Node whose instance is out being branched right now.
    claimed: Option<NodeHandle>,
    stack: Vec<Frame>,
}

impl Slot {
    fn new() -> Slot {
        Slot { pending_root: None, claimed: None, stack: Vec::new() }
    }

    fn idle(&self) -> bool {
        self.pending_root.is_none() && self.claimed.is_none() && self.stack.is_empty()
    }
}

enum ClaimStep {
    Root(NodeHandle),
    Child(NodeHandle),
    PopFrame(NodeHandle),
    Idle,
}

pub struct WorkerState<P: Problem> {
    rank: Rank,
    problem: Arc<P>,
    cfg: WorkerConfig,
    is_seed: bool,
    trees: Vec<TaskTree<P::Instance>>,
    slots: Vec<Slot>,
    /// Ranks this worker owes a task, in promise order.
    waiting: VecDeque<Rank>,
    /// Outbound task messages not yet acknowledged.
    nb_sent: u32,
    /// Best objective value known anywhere (local finds and broadcasts).
    best_known: i64,
    /// A local find that still has to be announced to the center.
    announce_pending: Option<i64>,
    /// Best solution found by this worker itself, serialized.
    best_local: Option<(i64, Vec<u8>)>,
    /// Stealable tasks across all trees (claimed instances excluded).
    pending_tasks: i64,
    phase: Phase,
    /// Shutdown round this worker accepted, awaiting the confirm.
    latch: Option<u64>,
    exiting: bool,
    queue_open: bool,
    outstanding_push: bool,
    last_meta: Option<i64>,
    last_meta_time: u64,
    report: WorkerReport,
    outbox: Vec<(Rank, Message)>,
}

impl<P: Problem> WorkerState<P> {
    pub fn new(
        rank: Rank,
        num_workers: usize,
        problem: Arc<P>,
        cfg: WorkerConfig,
    ) -> WorkerState<P> {
        assert!(rank >= 1 && rank as usize <= num_workers);
        assert!(cfg.explorers >= 1);
        let waiting = match cfg.scheduler {
            SchedulerKind::Semi => {
                let lists = waiting_lists(problem.max_branching_factor(), num_workers);
                lists[rank as usize].iter().copied().collect()
            }
            SchedulerKind::Central => VecDeque::new(),
        };
        let explorers = cfg.explorers;
        WorkerState {
            rank,
            problem,
            cfg,
            is_seed: rank == 1,
            trees: (0..explorers).map(|_| TaskTree::new()).collect(),
            slots: (0..explorers).map(|_| Slot::new()).collect(),
            waiting,
            nb_sent: 0,
            best_known: i64::MAX,
            announce_pending: None,
            best_local: None,
            pending_tasks: 0,
            phase: Phase::Parked,
            latch: None,
            exiting: false,
            queue_open: true,
            outstanding_push: false,
            last_meta: None,
            last_meta_time: 0,
            report: WorkerReport::new(rank),
            outbox: Vec::new(),
        }
    }

    pub fn rank(&self) -> Rank {
        self.rank
    }

    pub fn exiting(&self) -> bool {
        self.exiting
    }

    /// Driver-side emergency stop: behave as if a hard shutdown frame had
    /// arrived. Exploration stops at the next claim boundary.
    pub fn force_exit(&mut self) {
        self.exiting = true;
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    pub fn take_outbound(&mut self) -> Vec<(Rank, Message)> {
        std::mem::take(&mut self.outbox)
    }

    pub fn into_report(mut self) -> WorkerReport {
        if let Some((value, bytes)) = self.best_local.take() {
            self.report.best_local_value = Some(value);
            self.report.best_local_solution = Some(bytes);
        }
        self.report.nb_sent_final = self.nb_sent;
        self.report.pending_final = self.pending_tasks.max(0) as usize;
        self.report.waiting_final = self.waiting.len();
        self.report
    }

    fn send(&mut self, dest: Rank, msg: Message) {
        self.outbox.push((dest, msg));
    }

    /// All slots quiet and all trees empty. Unserved feed directives do not
    /// count: with no work anywhere they are vacuous, and with work in
    /// flight somebody else refuses shutdown.
    pub fn fully_idle(&self) -> bool {
        self.slots.iter().all(Slot::idle) && self.trees.iter().all(TaskTree::is_empty)
    }

    fn has_stealable(&self) -> bool {
        self.trees.iter().any(|t| t.highest_pending_priority().is_some())
    }

    /// Tree holding the best stealable task right now.
    fn best_front(&self) -> Option<(usize, i64)> {
        self.trees
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.highest_pending_priority().map(|p| (i, p)))
            .max_by_key(|&(i, p)| (p, std::cmp::Reverse(i)))
    }

    fn idle_slot(&self) -> Option<usize> {
        (0..self.slots.len()).find(|&i| self.slots[i].idle() && self.trees[i].is_empty())
    }

    pub fn handle_message(&mut self, msg: &Message) {
        if self.exiting {
            return;
        }
        match msg.tag {
            Tag::BestVal => {
                let value = msg.value_i64();
                if value < self.best_known {
                    self.best_known = value;
                }
                // The center already knows a value at least this good; an
                // announcement would be ignored there anyway.
                if self.announce_pending.is_some_and(|mine| value <= mine) {
                    self.announce_pending = None;
                }
            }
            Tag::SendWork => {
                debug_assert_eq!(self.cfg.scheduler, SchedulerKind::Semi);
                let receiver = msg.receiver_rank();
                debug_assert!(!self.waiting.contains(&receiver), "duplicate feed directive");
                if !self.has_stealable() {
                    self.report.cold_directives += 1;
                }
                self.waiting.push_back(receiver);
            }
            Tag::Work => {
                // New work always voids an earlier shutdown acceptance.
                self.latch = None;
                let instance = if msg.payload.is_empty() {
                    debug_assert!(self.is_seed, "seed trigger sent to a non-seed rank");
                    self.problem.root_instance()
                } else {
                    self.send(msg.source, Message::ack_task(self.rank));
                    self.problem
                        .deserialize_instance(&msg.payload)
                        .expect("malformed task payload")
                };
                if self.cfg.scheduler == SchedulerKind::Semi {
                    self.send(0, Message::empty(Tag::StartedRunning, self.rank));
                }
                let priority = self.problem.priority(&instance);
                let slot = self
                    .idle_slot()
                    .expect("task arrived while every explorer slot is occupied");
                let handle = self.trees[slot].set_root(instance, priority);
                self.slots[slot].pending_root = Some(handle);
                self.pending_tasks += 1;
                self.report.tasks_planted += 1;
                self.phase = Phase::Engaged;
            }
            Tag::TaskAck => match msg.ack_round() {
                None => {
                    debug_assert!(self.nb_sent > 0, "acknowledgement without an open send");
                    self.nb_sent = self.nb_sent.saturating_sub(1);
                    if msg.source == 0 {
                        self.outstanding_push = false;
                        self.maybe_push();
                    }
                }
                Some(_) => debug_assert!(false, "shutdown accept addressed to a worker"),
            },
            Tag::Terminate => {
                let (round, phase) = msg.terminate_parts();
                match phase {
                    TerminatePhase::Prepare => {
                        if self.fully_idle() && self.nb_sent == 0 {
                            self.latch = Some(round);
                            self.send(0, Message::accept_termination(self.rank, round));
                        } else {
                            self.send(0, Message::empty(Tag::TerminateRefuse, self.rank));
                        }
                    }
                    TerminatePhase::Verify => {
                        // A task that slipped in after the accept cleared
                        // the latch; answer from the latch alone.
                        if self.latch == Some(round) {
                            self.send(0, Message::accept_termination(self.rank, round));
                        } else {
                            self.send(0, Message::empty(Tag::TerminateRefuse, self.rank));
                        }
                    }
                    TerminatePhase::Confirm => {
                        debug_assert_eq!(self.latch, Some(round), "confirm for an unaccepted round");
                        if self.latch == Some(round) {
                            self.exiting = true;
                        }
                    }
                    TerminatePhase::Hard => self.exiting = true,
                }
            }
            Tag::QueueFull => {
                debug_assert_eq!(self.cfg.scheduler, SchedulerKind::Central);
                debug_assert!(self.queue_open, "queue flag must strictly alternate");
                self.queue_open = false;
            }
            Tag::QueueOpen => {
                debug_assert_eq!(self.cfg.scheduler, SchedulerKind::Central);
                debug_assert!(!self.queue_open, "queue flag must strictly alternate");
                self.queue_open = true;
                self.maybe_push();
            }
            Tag::Available | Tag::StartedRunning | Tag::Metadata | Tag::TerminateRefuse
            | Tag::TaskPush => {
                debug_assert!(false, "worker cannot receive {:?}", msg.tag);
            }
        }
    }

    /// Per-iteration communication duties, in an order the protocol leans
    /// on: announce the best value before anything that could make the
    /// center consider this worker done.
    pub fn duties(&mut self, now: u64) {
        if self.exiting {
            return;
        }
        if let Some(value) = self.announce_pending.take() {
            self.send(0, Message::best_val(self.rank, value));
        }
        if self.cfg.scheduler == SchedulerKind::Semi {
            let load = self.pending_tasks;
            let due = now.saturating_sub(self.last_meta_time) >= self.cfg.metadata_min_interval;
            let changed = self.last_meta != Some(load);
            let worth_starting = load > 0 || self.last_meta.is_some();
            if changed && due && worth_starting {
                self.send(0, Message::metadata(self.rank, load));
                self.last_meta = Some(load);
                self.last_meta_time = now;
            }
        }
        // Serve promised ranks first, oldest promise from the best front.
        while !self.waiting.is_empty() {
            let Some((tree, _)) = self.best_front() else { break };
            let (instance, _) = self.trees[tree].take_highest_priority().expect("front was pending");
            let dest = self.waiting.pop_front().expect("checked non-empty");
            let bytes = self.problem.serialize_instance(&instance);
            self.send(dest, Message::work(self.rank, bytes));
            self.nb_sent += 1;
            self.pending_tasks -= 1;
            self.report.tasks_sent += 1;
        }
        // Then keep idle sibling slots busy.
        while let (Some(slot), Some((tree, _))) = (self.idle_slot(), self.best_front()) {
            debug_assert_ne!(slot, tree, "an idle slot's tree has no front");
            let (instance, priority) =
                self.trees[tree].take_highest_priority().expect("front was pending");
            self.report.tasks_refed += 1;
            let handle = self.trees[slot].set_root(instance, priority);
            self.slots[slot].pending_root = Some(handle);
            self.report.tasks_planted += 1;
        }
        self.maybe_push();
        if self.phase == Phase::Engaged && self.fully_idle() {
            self.send(0, Message::empty(Tag::Available, self.rank));
            self.phase = Phase::Parked;
        }
    }

    /// Centralized scheduler: offer the best pending task to the center,
    /// one unacknowledged offer at a time, only while the queue is open.
    fn maybe_push(&mut self) {
        if self.cfg.scheduler != SchedulerKind::Central
            || !self.queue_open
            || self.outstanding_push
            || self.exiting
        {
            return;
        }
        let Some((tree, _)) = self.best_front() else { return };
        let (instance, priority) =
            self.trees[tree].take_highest_priority().expect("front was pending");
        let bytes = self.problem.serialize_instance(&instance);
        self.send(0, Message::task_push(self.rank, priority, &bytes));
        self.outstanding_push = true;
        self.nb_sent += 1;
        self.pending_tasks -= 1;
        self.report.tasks_pushed += 1;
    }

    /// Take the next instance for explorer `slot`, marking it claimed. The
    /// caller branches it without holding any lock and hands the outcome to
    /// [`finish_work`](Self::finish_work). Returns the instance and the
    /// bound to branch against, or `None` when the slot has nothing to do.
    pub fn claim_work(&mut self, slot: usize) -> Option<(P::Instance, i64)> {
        if self.exiting {
            return None;
        }
        debug_assert!(self.slots[slot].claimed.is_none(), "slot {slot} claimed twice");
        loop {
            let step = {
                let s = &mut self.slots[slot];
                if let Some(h) = s.pending_root.take() {
                    ClaimStep::Root(h)
                } else if let Some(frame) = s.stack.last_mut() {
                    if frame.next < frame.children.len() {
                        let h = frame.children[frame.next];
                        frame.next += 1;
                        ClaimStep::Child(h)
                    } else {
                        let node = frame.node;
                        s.stack.pop();
                        ClaimStep::PopFrame(node)
                    }
                } else {
                    ClaimStep::Idle
                }
            };
            match step {
                ClaimStep::Root(h) | ClaimStep::Child(h) => {
                    if let BeginSearch::Run(instance) = self.trees[slot].begin_search(h) {
                        self.slots[slot].claimed = Some(h);
                        self.pending_tasks -= 1;
                        return Some((instance, self.best_known));
                    }
                    // Shipped away while we walked the frame; skip it.
                }
                ClaimStep::PopFrame(node) => {
                    // Every child is explored or stolen; the subtree is
                    // done. The handle may be stale after a re-root, which
                    // complete() tolerates.
                    self.trees[slot].complete(node);
                }
                ClaimStep::Idle => return None,
            }
        }
    }

    /// Record the outcome of branching the instance claimed on `slot`.
    pub fn finish_work(&mut self, slot: usize, outcome: BranchOutcome<P::Instance, P::Solution>) {
        let node = self.slots[slot].claimed.take().expect("finish without a claim");
        self.report.tasks_explored += 1;
        match outcome {
            BranchOutcome::Pruned => self.trees[slot].complete(node),
            BranchOutcome::Solution(solution) => {
                let value = self.problem.solution_value(&solution);
                self.report.solutions_found += 1;
                if value < self.best_known {
                    self.best_known = value;
                    self.announce_pending = Some(value);
                    self.best_local = Some((value, self.problem.serialize_solution(&solution)));
                }
                self.trees[slot].complete(node);
            }
            BranchOutcome::Children(children) => {
                debug_assert!(!children.is_empty(), "childless outcomes must prune or solve");
                debug_assert!(children.len() <= self.problem.max_branching_factor());
                let pairs: Vec<(P::Instance, i64)> = children
                    .into_iter()
                    .map(|c| {
                        let priority = self.problem.priority(&c);
                        (c, priority)
                    })
                    .collect();
                let count = pairs.len();
                let handles = self.trees[slot]
                    .register_children(Some(node), pairs)
                    .expect("claimed node vanished under its explorer");
                self.pending_tasks += count as i64;
                self.report.tasks_registered += count as u64;
                self.slots[slot].stack.push(Frame { node, children: handles, next: 0 });
                self.maybe_push();
            }
        }
    }

    /// Claim, branch, finish: one unit of exploration for the lockstep
    /// driver. Returns whether anything was done.
    pub fn explorer_step(&mut self, slot: usize) -> bool {
        let Some((instance, best)) = self.claim_work(slot) else {
            return false;
        };
        let outcome = self.problem.branch(&instance, best);
        self.finish_work(slot, outcome);
        true
    }
}
