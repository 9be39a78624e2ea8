//! Contract between the runtime and a branching search problem.
//!
//! The runtime is minimization-first: smaller solution values win, and the
//! incumbent bound passed to [`Problem::branch`] starts at `i64::MAX`.
//! Maximization problems plug in by negating their objective.

use std::fmt;

/// Result of expanding one instance.
#[derive(Debug, Clone)]
pub enum BranchOutcome<I, S> {
    /// The instance cannot beat the incumbent; drop it.
    Pruned,
    /// The instance is fully solved.
    Solution(S),
    /// Sub-instances to explore, ordered; the runtime visits them
    /// left to right and steals from the left as well.
    Children(Vec<I>),
}

#[derive(Debug, thiserror::Error)]
pub enum ProblemError {
    #[error("malformed instance bytes: {0}")]
    BadInstance(String),
    #[error("malformed solution bytes: {0}")]
    BadSolution(String),
}

/// A branching search problem the runtime can distribute.
///
/// Implementations must be deterministic: the same instance and bound always
/// produce the same outcome, and `serialize_instance` must be a canonical
/// form (deserializing and re-serializing yields identical bytes). Priorities
/// order pending tasks for stealing; larger means more urgent, and for
/// tree searches "bigger subproblem" is the usual choice.
pub trait Problem: Send + Sync + 'static {
    type Instance: Clone + Send + 'static;
    type Solution: Clone + Send + 'static;

    /// The instance the whole search starts from. Only the seed worker
    /// calls this; everyone else receives instances over the wire.
    fn root_instance(&self) -> Self::Instance;

    /// Expand `instance` against the incumbent `best` (minimization).
    fn branch(&self, instance: &Self::Instance, best: i64) -> BranchOutcome<Self::Instance, Self::Solution>;

    fn serialize_instance(&self, instance: &Self::Instance) -> Vec<u8>;
    fn deserialize_instance(&self, bytes: &[u8]) -> Result<Self::Instance, ProblemError>;

    fn serialize_solution(&self, solution: &Self::Solution) -> Vec<u8>;
    fn deserialize_solution(&self, bytes: &[u8]) -> Result<Self::Solution, ProblemError>;

    /// Stealing priority of a pending instance; larger is taken first.
    fn priority(&self, instance: &Self::Instance) -> i64;

    /// Objective value of a solution; smaller is better.
    fn solution_value(&self, solution: &Self::Solution) -> i64;

    /// Upper bound on `Children` fan-out. Also sizes the startup
    /// waiting-list tree, so it must be at least 2.
    fn max_branching_factor(&self) -> usize;

    /// When true, the engine re-expands an instance once after recording its
    /// solution (with the solution's value as the bound), for problems where
    /// a solved instance still has descendants worth visiting. Off by
    /// default: a solution normally ends its branch.
    fn keep_exploring_after_solution(&self) -> bool {
        false
    }
}

/// One problem with everything the validator found wrong about it.
pub struct ValidationReport {
    pub samples_checked: usize,
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "adapter ok ({} samples)", self.samples_checked)
        } else {
            writeln!(f, "adapter violations ({} samples):", self.samples_checked)?;
            for v in &self.violations {
                writeln!(f, "  - {v}")?;
            }
            Ok(())
        }
    }
}

/// Exercise a problem implementation against its own contract on the given
/// sample instances: round-trip fidelity, canonical serialization, non-empty
/// task bytes, fan-out within `1..=max_branching_factor`, priority stability,
/// and solution round-trips for any solutions encountered.
pub fn validate_adapter<P: Problem>(problem: &P, samples: &[P::Instance]) -> ValidationReport {
    let mut violations = Vec::new();
    let max_b = problem.max_branching_factor();
    if max_b < 2 {
        violations.push(format!("max_branching_factor() = {max_b}, must be >= 2"));
    }
    for (i, inst) in samples.iter().enumerate() {
        let bytes = problem.serialize_instance(inst);
        if bytes.is_empty() {
            violations.push(format!("sample {i}: serializes to zero bytes"));
            continue;
        }
        match problem.deserialize_instance(&bytes) {
            Err(e) => {
                violations.push(format!("sample {i}: deserialize failed on own bytes: {e}"));
                continue;
            }
            Ok(back) => {
                if problem.serialize_instance(&back) != bytes {
                    violations.push(format!("sample {i}: serialize is not canonical under round-trip"));
                }
                if problem.priority(&back) != problem.priority(inst) {
                    violations.push(format!("sample {i}: priority changed across round-trip"));
                }
            }
        }
        if problem.priority(inst) != problem.priority(inst) {
            violations.push(format!("sample {i}: priority is unstable"));
        }
        match problem.branch(inst, i64::MAX) {
            BranchOutcome::Pruned => {
                violations.push(format!("sample {i}: pruned against an infinite bound"));
            }
            BranchOutcome::Solution(s) => {
                let sb = problem.serialize_solution(&s);
                match problem.deserialize_solution(&sb) {
                    Err(e) => violations.push(format!("sample {i}: solution round-trip failed: {e}")),
                    Ok(s2) => {
                        if problem.solution_value(&s2) != problem.solution_value(&s) {
                            violations.push(format!("sample {i}: solution value changed across round-trip"));
                        }
                    }
                }
            }
            BranchOutcome::Children(kids) => {
                if kids.is_empty() {
                    violations.push(format!("sample {i}: branch returned zero children"));
                }
                if kids.len() > max_b {
                    violations.push(format!(
                        "sample {i}: branch returned {} children, max_branching_factor is {max_b}",
                        kids.len()
                    ));
                }
                for (j, kid) in kids.iter().enumerate() {
                    if problem.serialize_instance(kid).is_empty() {
                        violations.push(format!("sample {i}: child {j} serializes to zero bytes"));
                    }
                }
            }
        }
    }
    ValidationReport {
        samples_checked: samples.len(),
        violations,
    }
}
