//! Shutdown-round bookkeeping shared by both schedulers' centers.
//!
//! A round is a prepare broadcast followed by two reply sweeps: accepts,
//! then verifies (see [`TerminatePhase`] for why accepts alone are not
//! enough). This type keeps the counting straight; deciding when to open,
//! abort, or hard-kill a round stays with each center.
//!
//! The two sweeps of one round cannot be confused even though both replies
//! ride the same round-stamped acknowledgement: the verify sweep starts
//! only after every worker's accept is consumed, and a worker sends exactly
//! one reply per sweep. Replies stamped with any other round are stale by
//! definition and dropped.

use crate::transport::{Message, Rank, TerminatePhase};

/// Effect of one worker reply on the open round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RoundStep {
    /// Recorded; the current sweep is still collecting.
    Pending,
    /// Every accept is in; the verify sweep was broadcast.
    Verifying,
    /// Every verify is in; confirms were broadcast, the run is over.
    Done,
    /// No round open, or a stale round number; dropped.
    Stale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sweep {
    Accepts,
    Verifies,
}

struct Collect {
    round: u64,
    sweep: Sweep,
    replied: Vec<bool>,
    count: usize,
}

pub(crate) struct ShutdownRounds {
    num_workers: usize,
    opened: u64,
    collect: Option<Collect>,
}

impl ShutdownRounds {
    pub fn new(num_workers: usize) -> ShutdownRounds {
        ShutdownRounds { num_workers, opened: 0, collect: None }
    }

    pub fn collecting(&self) -> bool {
        self.collect.is_some()
    }

    /// Open a fresh round and broadcast its prepare. Round numbers never
    /// repeat, so replies to dead rounds stay dead.
    pub fn open(&mut self, outbox: &mut Vec<(Rank, Message)>) {
        self.opened += 1;
        self.collect = Some(Collect {
            round: self.opened,
            sweep: Sweep::Accepts,
            replied: vec![false; self.num_workers + 1],
            count: 0,
        });
        self.broadcast(outbox, self.opened, TerminatePhase::Prepare);
    }

    /// Broadcast an unconditional stop, dropping any round in progress.
    pub fn hard(&mut self, outbox: &mut Vec<(Rank, Message)>) {
        self.opened += 1;
        self.collect = None;
        self.broadcast(outbox, self.opened, TerminatePhase::Hard);
    }

    /// Record a round-stamped acknowledgement from `src`.
    pub fn note_reply(
        &mut self,
        src: Rank,
        round: u64,
        outbox: &mut Vec<(Rank, Message)>,
    ) -> RoundStep {
        let Some(collect) = self.collect.as_mut() else {
            return RoundStep::Stale;
        };
        if collect.round != round {
            return RoundStep::Stale;
        }
        if !collect.replied[src as usize] {
            collect.replied[src as usize] = true;
            collect.count += 1;
        }
        if collect.count < self.num_workers {
            return RoundStep::Pending;
        }
        if collect.sweep == Sweep::Accepts {
            collect.sweep = Sweep::Verifies;
            collect.replied.iter_mut().for_each(|r| *r = false);
            collect.count = 0;
            self.broadcast(outbox, round, TerminatePhase::Verify);
            RoundStep::Verifying
        } else {
            self.collect = None;
            self.broadcast(outbox, round, TerminatePhase::Confirm);
            RoundStep::Done
        }
    }

    /// Drop the open round, if any; returns whether one was open.
    pub fn abort(&mut self) -> bool {
        self.collect.take().is_some()
    }

    fn broadcast(&self, outbox: &mut Vec<(Rank, Message)>, round: u64, phase: TerminatePhase) {
        for w in 1..=self.num_workers as Rank {
            outbox.push((w, Message::terminate(0, round, phase)));
        }
    }
}
