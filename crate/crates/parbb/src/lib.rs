//! Parallel branch-and-bound runtime with semi-centralized load balancing.
//!
//! A run consists of one coordinator rank (rank 0) and `p` worker ranks. The
//! coordinator never holds tasks: it tracks worker statuses and the best
//! value found so far, and brokers who-feeds-whom assignments. Tasks travel
//! directly between workers. Each worker keeps its pending sub-instances in a
//! per-thread [`tasktree::TaskTree`] shaped by the search recursion, from
//! which the shallowest (largest) pending task is peeled off when another
//! worker needs food.
//!
//! * [`problem`] — the trait a branching search implements to run here.
//! * [`transport`] — wire format plus the simulated and TCP message fabrics.
//! * [`tasktree`] — the recursion-shaped pending-task store.
//! * [`center`] — coordinator state machine for the semi-centralized scheduler.
//! * [`central`] — fully centralized queue scheduler, kept as a baseline.
//! * [`worker`] — worker state machine and the exploration engine.
//! * [`sim`] — deterministic single-process lockstep driver.
//! * [`run`] — thread-per-rank drivers for real transports.
//! * [`toy`] — tiny synthetic searches for exercising the machinery.

pub mod center;
pub mod central;
pub mod config;
pub mod problem;
pub mod report;
pub mod run;
mod shutdown;
pub mod sim;
pub mod tasktree;
pub mod toy;
pub mod transport;
pub mod worker;

pub use config::{CenterConfig, CentralConfig, FeederPolicy, SchedulerKind, TerminationMode, WorkerConfig};
pub use problem::{BranchOutcome, Problem};
pub use transport::Rank;
