//! Degree-based reductions applied before every branching step.
//!
//! Three rules, applied in order with a rescan after any change, until none
//! fires:
//!
//! 1. a vertex with no neighbors is never in a minimum cover: delete it;
//! 2. for a vertex `u` with exactly one neighbor `v`, some minimum cover
//!    takes `v`: put `v` in the cover, delete `u` and `v`;
//! 3. for a vertex `u` whose two neighbors `v`, `w` are adjacent to each
//!    other, some minimum cover takes both: put `v` and `w` in the cover,
//!    delete all three.

use crate::graph::Graph;

/// Run the rules to a fixed point, mutating `g` (presence, edges, cover).
pub fn reduce(g: &mut Graph) {
    loop {
        if drop_isolated(g) {
            continue;
        }
        if fold_degree_one(g) {
            continue;
        }
        if fold_triangle_tip(g) {
            continue;
        }
        break;
    }
}

/// Rule 1. Isolated vertices do not interact, so one pass removes them all.
fn drop_isolated(g: &mut Graph) -> bool {
    let isolated: Vec<usize> = g.present().iter().filter(|&v| g.degree(v) == 0).collect();
    for v in &isolated {
        g.remove_vertex(*v);
    }
    !isolated.is_empty()
}

/// Rule 2, first match only; the caller rescans.
fn fold_degree_one(g: &mut Graph) -> bool {
    for u in g.present().iter() {
        if g.degree(u) == 1 {
            let v = g.neighbors(u).first().unwrap();
            g.take_into_cover(v);
            g.remove_vertex(u);
            return true;
        }
    }
    false
}

/// Rule 3, first match only; the caller rescans.
fn fold_triangle_tip(g: &mut Graph) -> bool {
    for u in g.present().iter() {
        if g.degree(u) == 2 {
            let mut nbrs = g.neighbors(u).iter();
            let v = nbrs.next().unwrap();
            let w = nbrs.next().unwrap();
            if g.has_edge(v, w) {
                g.take_into_cover(v);
                g.take_into_cover(w);
                g.remove_vertex(u);
                return true;
            }
        }
    }
    false
}
