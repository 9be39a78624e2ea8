//! One branching step of the exact cover search.
//!
//! The step reduces first, then checks the bound and the solved condition,
//! then splits on a maximum-degree vertex `u`: either `u` is in the cover
//! (left child), or all of its neighbors are (right child). The left child
//! goes first; stealing order and sequential order both respect that.

use crate::graph::Graph;
use crate::reduce::reduce;
use parbb::problem::BranchOutcome;

/// Cover solutions are just the cover bit set; its size is the value.
pub type Cover = crate::bitset::BitSet;

/// Expand `g` against the incumbent `best` (strictly smaller covers win).
pub fn branch_step(g: &Graph, best: i64) -> BranchOutcome<Graph, Cover> {
    if g.cover_size() as i64 >= best {
        return BranchOutcome::Pruned;
    }
    let mut g = g.clone();
    reduce(&mut g);
    if g.cover_size() as i64 >= best {
        return BranchOutcome::Pruned;
    }
    if !g.has_edges() {
        return BranchOutcome::Solution(g.cover().clone());
    }
    let u = g
        .max_degree_vertex()
        .expect("graph with edges has a max-degree vertex");

    let mut take_u = g.clone();
    take_u.take_into_cover(u);

    let mut take_nbrs = g;
    let nbrs: Vec<usize> = take_nbrs.neighbors(u).iter().collect();
    for v in nbrs {
        take_nbrs.take_into_cover(v);
    }
    // u is now isolated in the right child; its own reduction pass drops it.

    BranchOutcome::Children(vec![take_u, take_nbrs])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bound_prunes_before_any_work() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert!(matches!(branch_step(&g, 0), BranchOutcome::Pruned));
    }

    #[test]
    fn prune_fires_at_equality() {
        // Take one vertex into the cover, then bound at exactly that size.
        let mut g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        g.take_into_cover(0);
        assert!(matches!(branch_step(&g, 1), BranchOutcome::Pruned));
    }

    #[test]
    fn reduction_can_finish_the_instance() {
        // A star solves entirely in the reduction; the step reports the
        // solution rather than branching.
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]);
        match branch_step(&g, i64::MAX) {
            BranchOutcome::Solution(c) => assert_eq!(c.iter().collect::<Vec<_>>(), vec![0]),
            other => panic!("expected solution, got {other:?}"),
        }
    }

    #[test]
    fn children_split_on_max_degree_vertex() {
        // C4 is irreducible; all degrees equal, so vertex 0 is chosen.
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        match branch_step(&g, i64::MAX) {
            BranchOutcome::Children(kids) => {
                assert_eq!(kids.len(), 2);
                // Left child committed vertex 0 itself.
                assert!(kids[0].cover().get(0));
                assert!(!kids[0].is_present(0));
                // Right child committed N(0) = {1, 3}.
                assert!(kids[1].cover().get(1) && kids[1].cover().get(3));
                assert!(kids[1].is_present(0), "u stays until the child reduces");
                for k in &kids {
                    k.check_invariants().unwrap();
                }
            }
            other => panic!("expected children, got {other:?}"),
        }
    }
}
