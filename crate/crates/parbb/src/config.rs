//! Tunables for the center, the workers, and the run drivers.

use std::str::FromStr;

/// Which scheduler owns task placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedulerKind {
    /// Center tracks statuses only; tasks travel worker to worker under
    /// center-brokered assignments.
    Semi,
    /// Center holds a priority queue of serialized tasks and dispatches
    /// them itself.
    Central,
}

impl SchedulerKind {
    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::Semi => "semi",
            SchedulerKind::Central => "central",
        }
    }
}

impl FromStr for SchedulerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "semi" => Ok(SchedulerKind::Semi),
            "central" => Ok(SchedulerKind::Central),
            other => Err(format!("unknown scheduler '{other}' (semi, central)")),
        }
    }
}

/// How the run is allowed to end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationMode {
    /// A single hard shutdown once the center has seen no traffic for the
    /// quiet window. Sound only when the window comfortably exceeds any
    /// message delay.
    Timeout,
    /// Round-stamped shutdown handshake: the center proposes, every worker
    /// must accept while provably idle, then re-confirm on a verify sweep;
    /// any refusal or sign of life aborts the round. Sound under arbitrary
    /// delays.
    AckHandshake,
    /// Handshake rounds, with a hard shutdown as a last resort if quiet
    /// persists far beyond the window.
    Both,
}

impl TerminationMode {
    pub fn name(self) -> &'static str {
        match self {
            TerminationMode::Timeout => "timeout",
            TerminationMode::AckHandshake => "handshake",
            TerminationMode::Both => "both",
        }
    }
}

impl FromStr for TerminationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "timeout" => Ok(TerminationMode::Timeout),
            "handshake" => Ok(TerminationMode::AckHandshake),
            "both" => Ok(TerminationMode::Both),
            other => Err(format!("unknown termination mode '{other}' (timeout, handshake, both)")),
        }
    }
}

/// How the center picks which running worker feeds an idle one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeederPolicy {
    /// The eligible worker with the most pending tasks on its last load
    /// announcement, ties to the lowest rank.
    #[default]
    MostLoaded,
    /// The eligible worker with the lowest rank. Easiest to trace by hand.
    LowestRank,
}

/// Center-side settings shared by both schedulers.
#[derive(Debug, Clone)]
pub struct CenterConfig {
    pub termination: TerminationMode,
    /// Time units (sim ticks, milliseconds under real transports) with no
    /// inbound traffic before the center moves to end the run.
    pub quiet_window: u64,
    /// Under [`TerminationMode::Both`], quiet persisting this many windows
    /// past the first attempt forces a hard shutdown.
    pub hard_quiet_windows: u64,
    pub feeder_policy: FeederPolicy,
    /// Worker that builds the root task from its locally loaded instance.
    pub seed_rank: u16,
}

impl Default for CenterConfig {
    fn default() -> Self {
        CenterConfig {
            termination: TerminationMode::Both,
            quiet_window: 500,
            hard_quiet_windows: 20,
            feeder_policy: FeederPolicy::default(),
            seed_rank: 1,
        }
    }
}

/// Extra settings for the fully centralized scheduler.
#[derive(Debug, Clone)]
pub struct CentralConfig {
    pub center: CenterConfig,
    /// Queue capacity is this many tasks per worker.
    pub tasks_per_worker: usize,
    /// Byte budget across all queued serialized tasks.
    pub memory_limit_bytes: usize,
    /// Ignore priorities and dispatch in arrival order.
    pub fifo: bool,
}

impl Default for CentralConfig {
    fn default() -> Self {
        CentralConfig {
            center: CenterConfig::default(),
            tasks_per_worker: 1000,
            memory_limit_bytes: 10 << 30,
            fifo: false,
        }
    }
}

impl CentralConfig {
    pub fn task_limit(&self, num_workers: usize) -> usize {
        self.tasks_per_worker.saturating_mul(num_workers)
    }
}

/// Worker-side settings.
#[derive(Debug, Clone)]
pub struct WorkerConfig {
    pub scheduler: SchedulerKind,
    /// Exploration threads (or interleaved explorer slots under the
    /// simulator) per worker.
    pub explorers: usize,
    /// Minimum time units between load announcements.
    pub metadata_min_interval: u64,
}

impl Default for WorkerConfig {
    fn default() -> Self {
        WorkerConfig {
            scheduler: SchedulerKind::Semi,
            explorers: 1,
            metadata_min_interval: 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for kind in [SchedulerKind::Semi, SchedulerKind::Central] {
            assert_eq!(kind.name().parse::<SchedulerKind>().unwrap(), kind);
        }
        for mode in
            [TerminationMode::Timeout, TerminationMode::AckHandshake, TerminationMode::Both]
        {
            assert_eq!(mode.name().parse::<TerminationMode>().unwrap(), mode);
        }
        assert!("psychic".parse::<SchedulerKind>().is_err());
    }
}
