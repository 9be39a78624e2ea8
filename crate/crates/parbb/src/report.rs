//! Run outcome structures shared by the simulator, the threaded runtime,
//! and the multi-process harness (which moves them as JSON lines).

use serde::{Deserialize, Serialize};

use crate::transport::Rank;

/// Everything one worker can account for when it exits.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WorkerReport {
    pub rank: Rank,
    /// Root tasks planted into a tree (received or fed locally).
    pub tasks_planted: u64,
    /// Child tasks registered by explorers.
    pub tasks_registered: u64,
    /// Branch calls, i.e. tasks taken out of a tree and expanded.
    pub tasks_explored: u64,
    /// Tasks extracted and shipped to another worker.
    pub tasks_sent: u64,
    /// Tasks extracted and re-planted for an idle local explorer.
    pub tasks_refed: u64,
    /// Tasks pushed to the central queue (central scheduler only).
    pub tasks_pushed: u64,
    /// Feed directives that arrived while this worker had nothing
    /// stealable. Service was deferred, not refused.
    pub cold_directives: u64,
    /// Feed directives this worker dropped or bounced. The protocol has no
    /// such path; anything nonzero is a bug.
    pub dropped_directives: u64,
    pub solutions_found: u64,
    /// Value of the best solution this worker itself found.
    pub best_local_value: Option<i64>,
    /// Serialized form of that solution.
    pub best_local_solution: Option<Vec<u8>>,
    /// Unacknowledged outbound task messages at exit. Must be zero.
    pub nb_sent_final: u32,
    /// Tasks still sitting in trees at exit. Must be zero.
    pub pending_final: usize,
    /// Feed directives still queued at exit (vacuous once global work is
    /// exhausted).
    pub waiting_final: usize,
}

impl WorkerReport {
    pub fn new(rank: Rank) -> Self {
        WorkerReport {
            rank,
            tasks_planted: 0,
            tasks_registered: 0,
            tasks_explored: 0,
            tasks_sent: 0,
            tasks_refed: 0,
            tasks_pushed: 0,
            cold_directives: 0,
            dropped_directives: 0,
            solutions_found: 0,
            best_local_value: None,
            best_local_solution: None,
            nb_sent_final: 0,
            pending_final: 0,
            waiting_final: 0,
        }
    }
}

/// What the center saw over the whole run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CenterReport {
    pub best_value: Option<i64>,
    /// Worker that announced the final best value first.
    pub best_holder: Option<Rank>,
    pub bestval_broadcasts: u64,
    pub messages_received: u64,
    /// Feed directives brokered at runtime (startup assignments excluded).
    pub directives_brokered: u64,
    /// Directives sent toward a worker not believed to be running. By
    /// construction this stays zero.
    pub misdirected_directives: u64,
    /// Shutdown rounds opened.
    pub termination_attempts: u64,
    /// Shutdown rounds aborted by a refusal or by signs of life.
    pub termination_aborts: u64,
    /// Whether the run ended by handshake or by quiet-window timeout.
    pub ended_by: String,
    /// Every accepted best value in arrival order, for monotonicity checks.
    pub bestval_trace: Vec<(u64, i64, Rank)>,
    /// Central scheduler only: peak queue length and byte footprint.
    pub queue_peak_len: usize,
    pub queue_peak_bytes: usize,
    /// Central scheduler only: queue-flag broadcasts in order (true=full).
    pub flag_transitions: Vec<bool>,
}

impl Default for CenterReport {
    fn default() -> Self {
        CenterReport {
            best_value: None,
            best_holder: None,
            bestval_broadcasts: 0,
            messages_received: 0,
            directives_brokered: 0,
            misdirected_directives: 0,
            termination_attempts: 0,
            termination_aborts: 0,
            ended_by: String::new(),
            bestval_trace: Vec::new(),
            queue_peak_len: 0,
            queue_peak_bytes: 0,
            flag_transitions: Vec::new(),
        }
    }
}

/// A whole run, as assembled by a driver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub scheduler: String,
    pub workers: Vec<WorkerReport>,
    pub center: CenterReport,
    pub wall_seconds: f64,
    /// Simulator runs: virtual ticks elapsed.
    pub ticks: Option<u64>,
    pub best_value: Option<i64>,
    /// Serialized best solution, fetched from the worker the center named.
    pub best_solution: Option<Vec<u8>>,
}

impl RunReport {
    /// Global conservation: every task that entered a tree was either
    /// expanded somewhere or was still in transit bookkeeping that a clean
    /// exit forbids. Returns a description of the first violation.
    pub fn check_conservation(&self) -> Result<(), String> {
        let mut created = 0u64;
        let mut consumed = 0u64;
        for w in &self.workers {
            created += w.tasks_planted + w.tasks_registered;
            consumed += w.tasks_explored + w.tasks_sent + w.tasks_refed + w.tasks_pushed;
            if w.nb_sent_final != 0 {
                return Err(format!(
                    "worker {} exited with {} unacknowledged sends",
                    w.rank, w.nb_sent_final
                ));
            }
            if w.pending_final != 0 {
                return Err(format!(
                    "worker {} exited with {} tasks still in its trees",
                    w.rank, w.pending_final
                ));
            }
            if w.dropped_directives != 0 {
                return Err(format!(
                    "worker {} dropped {} feed directives",
                    w.rank, w.dropped_directives
                ));
            }
        }
        if created != consumed {
            return Err(format!("created {created} tasks but consumed {consumed}"));
        }
        Ok(())
    }

    /// Best value of any worker's locally found solution.
    pub fn min_worker_value(&self) -> Option<i64> {
        self.workers.iter().filter_map(|w| w.best_local_value).min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservation_balances_shipping_against_expansion() {
        let mut report = RunReport {
            scheduler: "semi".into(),
            workers: vec![WorkerReport::new(1), WorkerReport::new(2)],
            center: CenterReport::default(),
            wall_seconds: 0.0,
            ticks: None,
            best_value: Some(3),
            best_solution: None,
        };
        {
            let w1 = &mut report.workers[0];
            w1.tasks_planted = 1; // the seed
            w1.tasks_registered = 2;
            w1.tasks_explored = 2;
            w1.tasks_sent = 1;
        }
        {
            let w2 = &mut report.workers[1];
            w2.tasks_planted = 1; // the shipped task
            w2.tasks_explored = 1;
        }
        report.check_conservation().unwrap();
        report.workers[1].tasks_explored = 0;
        assert!(report.check_conservation().is_err());
    }

    #[test]
    fn unfinished_state_is_flagged() {
        let mut report = RunReport {
            scheduler: "semi".into(),
            workers: vec![WorkerReport::new(1)],
            center: CenterReport::default(),
            wall_seconds: 0.0,
            ticks: None,
            best_value: None,
            best_solution: None,
        };
        report.workers[0].nb_sent_final = 1;
        let err = report.check_conservation().unwrap_err();
        assert!(err.contains("unacknowledged"));
    }

    #[test]
    fn reports_serialize_as_json() {
        let report = RunReport {
            scheduler: "central".into(),
            workers: vec![WorkerReport::new(1)],
            center: CenterReport::default(),
            wall_seconds: 1.5,
            ticks: Some(42),
            best_value: Some(7),
            best_solution: Some(vec![1, 2, 3]),
        };
        let line = serde_json::to_string(&report).unwrap();
        let back: RunReport = serde_json::from_str(&line).unwrap();
        assert_eq!(back.best_value, Some(7));
        assert_eq!(back.ticks, Some(42));
    }
}
