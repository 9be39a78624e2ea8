//! Tiny synthetic searches with known shapes, for exercising the runtime
//! without dragging a real solver in.
//!
//! [`FullTree`] walks a complete tree and never prunes, so node totals are
//! exact and conservation checks can be made to the task. [`PruningTree`]
//! is a real branch-and-bound in miniature: leaf costs depend on a seeded
//! target pattern, bounds tighten as solutions surface, and how much of the
//! tree gets cut depends on message timing, which makes it a good stressor
//! for the best-value broadcast path. Its optimum is always zero, so every
//! run still has a checkable answer.

use crate::problem::{BranchOutcome, Problem, ProblemError};

fn encode_pair(inst: &(u32, u64)) -> Vec<u8> {
    let mut out = inst.0.to_le_bytes().to_vec();
    out.extend_from_slice(&inst.1.to_le_bytes());
    out
}

fn decode_pair(bytes: &[u8]) -> Result<(u32, u64), ProblemError> {
    if bytes.len() != 12 {
        return Err(ProblemError::BadInstance("expected 12 bytes".into()));
    }
    Ok((
        u32::from_le_bytes(bytes[..4].try_into().unwrap()),
        u64::from_le_bytes(bytes[4..].try_into().unwrap()),
    ))
}

/// Complete tree of known shape: an instance is (levels left, node id),
/// every leaf is a solution worth its id. With depth `d` and fanout `f`
/// the whole search explores exactly `(f^(d+1) - 1) / (f - 1)` nodes and
/// the best value is 0, whatever the schedule.
#[derive(Debug, Clone, Copy)]
pub struct FullTree {
    pub depth: u32,
    pub fanout: usize,
}

impl FullTree {
    /// Node count of the complete tree: what `tasks_explored` must sum to.
    pub fn total_nodes(&self) -> u64 {
        let f = self.fanout as u64;
        (0..=self.depth).map(|l| f.pow(l)).sum()
    }
}

impl Problem for FullTree {
    type Instance = (u32, u64);
    type Solution = u64;

    fn root_instance(&self) -> (u32, u64) {
        (self.depth, 0)
    }

    fn branch(&self, inst: &(u32, u64), _best: i64) -> BranchOutcome<(u32, u64), u64> {
        let &(left, id) = inst;
        if left == 0 {
            BranchOutcome::Solution(id)
        } else {
            BranchOutcome::Children(
                (0..self.fanout as u64)
                    .map(|j| (left - 1, id * self.fanout as u64 + j))
                    .collect(),
            )
        }
    }

    fn serialize_instance(&self, inst: &(u32, u64)) -> Vec<u8> {
        encode_pair(inst)
    }

    fn deserialize_instance(&self, bytes: &[u8]) -> Result<(u32, u64), ProblemError> {
        decode_pair(bytes)
    }

    fn serialize_solution(&self, sol: &u64) -> Vec<u8> {
        sol.to_le_bytes().to_vec()
    }

    fn deserialize_solution(&self, bytes: &[u8]) -> Result<u64, ProblemError> {
        bytes
            .try_into()
            .map(u64::from_le_bytes)
            .map_err(|_| ProblemError::BadSolution("expected 8 bytes".into()))
    }

    fn priority(&self, inst: &(u32, u64)) -> i64 {
        inst.0 as i64
    }

    fn solution_value(&self, sol: &u64) -> i64 {
        *sol as i64
    }

    fn max_branching_factor(&self) -> usize {
        self.fanout
    }
}

/// Binary branch-and-bound over bit strings: a leaf's cost is the Hamming
/// distance between its id and a hidden pattern. A subtree rooted at
/// `(left, id)` can still reach any suffix, so its lower bound is the
/// distance on the already-fixed prefix; subtrees that cannot beat the
/// incumbent are cut. The optimum is 0 (the pattern itself), but how many
/// nodes die to the bound depends on when incumbents arrive, which is the
/// point.
#[derive(Debug, Clone, Copy)]
pub struct PruningTree {
    pub depth: u32,
    /// Hidden target; only the low `depth` bits matter.
    pub pattern: u64,
}

impl PruningTree {
    fn mask(&self) -> u64 {
        if self.depth >= 64 { !0 } else { (1u64 << self.depth) - 1 }
    }

    fn lower_bound(&self, left: u32, id: u64) -> i64 {
        (id ^ ((self.pattern & self.mask()) >> left)).count_ones() as i64
    }
}

impl Problem for PruningTree {
    type Instance = (u32, u64);
    type Solution = u64;

    fn root_instance(&self) -> (u32, u64) {
        (self.depth, 0)
    }

    fn branch(&self, inst: &(u32, u64), best: i64) -> BranchOutcome<(u32, u64), u64> {
        let &(left, id) = inst;
        if left == 0 {
            return BranchOutcome::Solution(id);
        }
        if self.lower_bound(left, id) >= best {
            return BranchOutcome::Pruned;
        }
        BranchOutcome::Children(vec![(left - 1, id << 1), (left - 1, (id << 1) | 1)])
    }

    fn serialize_instance(&self, inst: &(u32, u64)) -> Vec<u8> {
        encode_pair(inst)
    }

    fn deserialize_instance(&self, bytes: &[u8]) -> Result<(u32, u64), ProblemError> {
        decode_pair(bytes)
    }

    fn serialize_solution(&self, sol: &u64) -> Vec<u8> {
        sol.to_le_bytes().to_vec()
    }

    fn deserialize_solution(&self, bytes: &[u8]) -> Result<u64, ProblemError> {
        bytes
            .try_into()
            .map(u64::from_le_bytes)
            .map_err(|_| ProblemError::BadSolution("expected 8 bytes".into()))
    }

    fn priority(&self, inst: &(u32, u64)) -> i64 {
        inst.0 as i64
    }

    fn solution_value(&self, sol: &u64) -> i64 {
        (*sol ^ (self.pattern & self.mask())).count_ones() as i64
    }

    fn max_branching_factor(&self) -> usize {
        2
    }
}
