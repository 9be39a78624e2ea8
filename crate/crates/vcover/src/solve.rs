//! Sequential exact solver and the subset-enumeration oracle.
//!
//! [`brute_force_mvc`] is deliberately independent of the reduction and
//! branching code: it enumerates vertex subsets by increasing cardinality
//! and takes the first one covering every edge. It exists to pin down
//! correct answers in tests, so it must not share logic with the solver
//! under test.

use crate::bitset::BitSet;
use crate::branch::branch_step;
use crate::graph::Graph;
use parbb::problem::BranchOutcome;
use std::time::Instant;

/// Largest present-vertex count the brute force will touch.
pub const BRUTE_FORCE_LIMIT: usize = 26;

/// Minimum vertex cover by subset enumeration, smallest cardinality first.
/// Returns `None` when the graph is too large (over [`BRUTE_FORCE_LIMIT`]
/// present vertices). Ignores any partial cover carried by `g`; the answer
/// covers the present subgraph only.
pub fn brute_force_mvc(g: &Graph) -> Option<(usize, BitSet)> {
    let verts: Vec<usize> = g.present().iter().collect();
    let n = verts.len();
    if n > BRUTE_FORCE_LIMIT {
        return None;
    }
    let edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .map(|&(u, v)| {
            let iu = verts.binary_search(&u).unwrap();
            let iv = verts.binary_search(&v).unwrap();
            (iu, iv)
        })
        .collect();

    let covers = |mask: u32| edges.iter().all(|&(u, v)| mask >> u & 1 == 1 || mask >> v & 1 == 1);

    for k in 0..=n {
        // Gosper's hack walks all n-bit masks of popcount k in increasing order.
        let mut mask: u32 = if k == 0 { 0 } else { (1 << k) - 1 };
        loop {
            if covers(mask) {
                let mut cover = BitSet::new(g.n());
                for (i, &v) in verts.iter().enumerate() {
                    if mask >> i & 1 == 1 {
                        cover.insert(v);
                    }
                }
                return Some((k, cover));
            }
            if k == 0 {
                break;
            }
            let c = mask & mask.wrapping_neg();
            let r = mask + c;
            let next = (((r ^ mask) >> 2) / c) | r;
            if next >= 1 << n {
                break;
            }
            mask = next;
        }
    }
    unreachable!("the full vertex set always covers");
}

#[derive(Debug, Clone)]
pub struct SequentialResult {
    pub size: usize,
    pub cover: BitSet,
    /// Number of branching steps taken (one per instance expanded).
    pub nodes: u64,
}

/// Plain depth-first exact solve; drives [`branch_step`] directly with no
/// scheduler in the way. This is the single-thread baseline the parallel
/// runs are compared against.
pub fn mvc_sequential(g: &Graph) -> SequentialResult {
    mvc_sequential_with_deadline(g, None).expect("no deadline given")
}

/// Same, but gives up and returns `None` once `deadline` passes. The check
/// runs every few thousand nodes, so overshoot is bounded.
pub fn mvc_sequential_with_deadline(
    g: &Graph,
    deadline: Option<Instant>,
) -> Option<SequentialResult> {
    struct Search {
        best: i64,
        cover: Option<BitSet>,
        nodes: u64,
        deadline: Option<Instant>,
    }

    impl Search {
        fn run(&mut self, g: &Graph) -> bool {
            self.nodes += 1;
            if self.nodes % 4096 == 0 {
                if let Some(d) = self.deadline {
                    if Instant::now() >= d {
                        return false;
                    }
                }
            }
            match branch_step(g, self.best) {
                BranchOutcome::Pruned => {}
                BranchOutcome::Solution(c) => {
                    self.best = c.count() as i64;
                    self.cover = Some(c);
                }
                BranchOutcome::Children(kids) => {
                    for kid in &kids {
                        if !self.run(kid) {
                            return false;
                        }
                    }
                }
            }
            true
        }
    }

    let mut s = Search {
        best: i64::MAX,
        cover: None,
        nodes: 0,
        deadline,
    };
    if !s.run(g) {
        return None;
    }
    let cover = s.cover.expect("search always finds some cover");
    Some(SequentialResult {
        size: cover.count(),
        cover,
        nodes: s.nodes,
    })
}
