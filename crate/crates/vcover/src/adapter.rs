//! Plugs the cover search into the `parbb` runtime.

use crate::bitset::BitSet;
use crate::branch::branch_step;
use crate::encode::{decode_basic, decode_optimized, encode_basic, encode_optimized, Encoding};
use crate::graph::Graph;
use parbb::problem::{BranchOutcome, Problem, ProblemError};
use std::sync::Arc;

/// Minimum vertex cover as a distributable problem. Carries the root graph
/// so the optimized decoder can rebuild induced subgraphs locally; every
/// rank constructs this from the same instance file.
pub struct VertexCover {
    base: Arc<Graph>,
    encoding: Encoding,
}

impl VertexCover {
    pub fn new(base: Arc<Graph>, encoding: Encoding) -> Self {
        VertexCover { base, encoding }
    }

    pub fn base(&self) -> &Arc<Graph> {
        &self.base
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }
}

impl Problem for VertexCover {
    type Instance = Graph;
    type Solution = BitSet;

    /// The instance a search starts from: the base graph, nothing committed.
    fn root_instance(&self) -> Graph {
        (*self.base).clone()
    }

    fn branch(&self, instance: &Graph, best: i64) -> BranchOutcome<Graph, BitSet> {
        branch_step(instance, best)
    }

    fn serialize_instance(&self, instance: &Graph) -> Vec<u8> {
        match self.encoding {
            Encoding::Basic => encode_basic(instance),
            Encoding::Optimized => encode_optimized(instance),
        }
    }

    fn deserialize_instance(&self, bytes: &[u8]) -> Result<Graph, ProblemError> {
        match self.encoding {
            Encoding::Basic => decode_basic(bytes),
            Encoding::Optimized => decode_optimized(bytes, &self.base),
        }
        .map_err(|e| ProblemError::BadInstance(e.to_string()))
    }

    fn serialize_solution(&self, solution: &BitSet) -> Vec<u8> {
        solution.to_bytes()
    }

    fn deserialize_solution(&self, bytes: &[u8]) -> Result<BitSet, ProblemError> {
        BitSet::from_bytes(self.base.n(), bytes)
            .ok_or_else(|| ProblemError::BadSolution("wrong length for cover bits".into()))
    }

    /// Bigger subgraphs first: stealing prefers the shallowest work, and
    /// shallow instances have the most vertices left.
    fn priority(&self, instance: &Graph) -> i64 {
        instance.num_present() as i64
    }

    fn solution_value(&self, solution: &BitSet) -> i64 {
        solution.count() as i64
    }

    fn max_branching_factor(&self) -> usize {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::gen_gnp;
    use parbb::problem::validate_adapter;

    #[test]
    fn both_encodings_validate_cleanly() {
        let base = Arc::new(gen_gnp(24, 0.3, 11));
        for encoding in [Encoding::Basic, Encoding::Optimized] {
            let problem = VertexCover::new(base.clone(), encoding);
            // Samples: the root plus a few descendants down the left spine.
            let mut samples = vec![problem.root_instance()];
            for _ in 0..3 {
                let last = samples.last().unwrap();
                if let BranchOutcome::Children(kids) = problem.branch(last, i64::MAX) {
                    samples.push(kids.into_iter().next().unwrap());
                } else {
                    break;
                }
            }
            let report = validate_adapter(&problem, &samples);
            assert!(report.is_ok(), "{encoding:?}: {report}");
        }
    }

    #[test]
    fn priority_is_presence_count() {
        let base = Arc::new(gen_gnp(16, 0.4, 3));
        let problem = VertexCover::new(base.clone(), Encoding::Optimized);
        let mut inst = problem.root_instance();
        assert_eq!(problem.priority(&inst), 16);
        inst.take_into_cover(0);
        assert_eq!(problem.priority(&inst), 15);
    }
}
