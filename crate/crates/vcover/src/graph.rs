//! Undirected graph with a fixed vertex universe and bitset adjacency rows.
//!
//! Vertices are never renumbered: deleting a vertex clears its presence bit
//! and its adjacency row/column, so ids mean the same thing in every instance
//! derived from the same root. Each instance also carries the partial cover
//! accumulated on its branch of the search; that set is always disjoint from
//! the present vertices.

use crate::bitset::BitSet;

#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    present: BitSet,
    adj: Vec<BitSet>,
    cover: BitSet,
}

impl Graph {
    /// Graph on universe `{0..n}` with every vertex present and no edges.
    pub fn new(n: usize) -> Self {
        Graph {
            n,
            present: {
                let mut p = BitSet::new(n);
                for v in 0..n {
                    p.insert(v);
                }
                p
            },
            adj: (0..n).map(|_| BitSet::new(n)).collect(),
            cover: BitSet::new(n),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Graph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    /// Rebuild a graph from raw parts; used by the wire decoders.
    /// Fails if any structural invariant does not hold.
    pub fn from_parts(
        n: usize,
        present: BitSet,
        adj: Vec<BitSet>,
        cover: BitSet,
    ) -> Result<Self, &'static str> {
        if present.nbits() != n || cover.nbits() != n || adj.len() != n {
            return Err("part widths disagree with the vertex universe");
        }
        if !present.is_disjoint(&cover) {
            return Err("cover contains a present vertex");
        }
        for u in 0..n {
            if adj[u].nbits() != n {
                return Err("part widths disagree with the vertex universe");
            }
            if adj[u].get(u) {
                return Err("self-loop in adjacency");
            }
            if !adj[u].is_empty() && !present.get(u) {
                return Err("absent vertex with incident edges");
            }
            for v in adj[u].iter() {
                if !adj[v].get(u) {
                    return Err("asymmetric adjacency");
                }
                if !present.get(v) {
                    return Err("edge endpoint not present");
                }
            }
        }
        Ok(Graph {
            n,
            present,
            adj,
            cover,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn present(&self) -> &BitSet {
        &self.present
    }

    pub fn is_present(&self, v: usize) -> bool {
        self.present.get(v)
    }

    pub fn num_present(&self) -> usize {
        self.present.count()
    }

    pub fn cover(&self) -> &BitSet {
        &self.cover
    }

    pub fn cover_size(&self) -> usize {
        self.cover.count()
    }

    pub fn neighbors(&self, v: usize) -> &BitSet {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].get(v)
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v, "self-loops are not representable");
        assert!(
            self.present.get(u) && self.present.get(v),
            "both endpoints must be present"
        );
        self.adj[u].insert(v);
        self.adj[v].insert(u);
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(BitSet::count).sum::<usize>() / 2
    }

    pub fn has_edges(&self) -> bool {
        self.adj.iter().any(|row| !row.is_empty())
    }

    /// Edges as `(u, v)` pairs with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in self.present.iter() {
            for v in self.adj[u].iter() {
                if u < v {
                    out.push((u, v));
                }
            }
        }
        out
    }

    /// Delete `v` from the graph without touching the cover.
    pub fn remove_vertex(&mut self, v: usize) {
        debug_assert!(self.present.get(v));
        let row = std::mem::replace(&mut self.adj[v], BitSet::new(self.n));
        for u in row.iter() {
            self.adj[u].remove(v);
        }
        self.present.remove(v);
    }

    /// Put `v` into the partial cover and delete it from the graph.
    pub fn take_into_cover(&mut self, v: usize) {
        self.remove_vertex(v);
        self.cover.insert(v);
    }

    /// Present vertex of maximum degree; ties go to the lowest id.
    /// `None` when the graph has no edges.
    pub fn max_degree_vertex(&self) -> Option<usize> {
        let mut best: Option<(usize, usize)> = None;
        for v in self.present.iter() {
            let d = self.degree(v);
            if d > 0 && best.map_or(true, |(bd, _)| d > bd) {
                best = Some((d, v));
            }
        }
        best.map(|(_, v)| v)
    }

    /// Check the structural invariants; used liberally in tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.present.is_disjoint(&self.cover) {
            return Err("cover and present overlap".into());
        }
        for u in 0..self.n {
            if self.adj[u].get(u) {
                return Err(format!("self-loop at {u}"));
            }
            if !self.present.get(u) && !self.adj[u].is_empty() {
                return Err(format!("absent vertex {u} has edges"));
            }
            for v in self.adj[u].iter() {
                if !self.adj[v].get(u) {
                    return Err(format!("edge {u}-{v} not symmetric"));
                }
                if !self.present.get(v) {
                    return Err(format!("edge {u}-{v} reaches absent vertex"));
                }
            }
        }
        Ok(())
    }
}

/// Does `cover` hit every edge of `base`? Checked against the **original**
/// graph a search started from, not a reduced descendant.
pub fn is_vertex_cover(base: &Graph, cover: &BitSet) -> bool {
    base.edges()
        .iter()
        .all(|&(u, v)| cover.get(u) || cover.get(v))
}

impl std::fmt::Debug for Graph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Graph(n={}, present={}, edges={}, cover={:?})",
            self.n,
            self.num_present(),
            self.edge_count(),
            self.cover
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c5() -> Graph {
        Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)])
    }

    #[test]
    fn degrees_and_edges() {
        let g = c5();
        assert_eq!(g.edge_count(), 5);
        for v in 0..5 {
            assert_eq!(g.degree(v), 2);
        }
        assert_eq!(g.edges().len(), 5);
        g.check_invariants().unwrap();
    }

    #[test]
    fn removal_clears_row_and_column() {
        let mut g = c5();
        g.remove_vertex(0);
        assert!(!g.is_present(0));
        assert_eq!(g.degree(1), 1);
        assert_eq!(g.degree(4), 1);
        assert_eq!(g.edge_count(), 3);
        g.check_invariants().unwrap();
    }

    #[test]
    fn cover_stays_disjoint_from_present() {
        let mut g = c5();
        g.take_into_cover(2);
        assert!(g.cover().get(2));
        assert!(!g.is_present(2));
        g.check_invariants().unwrap();
    }

    #[test]
    fn max_degree_breaks_ties_low() {
        // Star plus an extra edge: degree(0) = 3, degree(4) = 3 after adding edges.
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (4, 1), (4, 2), (4, 3)]);
        assert_eq!(g.max_degree_vertex(), Some(0));
        let empty = Graph::new(3);
        assert_eq!(empty.max_degree_vertex(), None);
    }

    #[test]
    fn cover_check_uses_base_edges() {
        let g = c5();
        let mut c = BitSet::new(5);
        c.insert(0);
        c.insert(2);
        assert!(!is_vertex_cover(&g, &c));
        c.insert(3);
        assert!(is_vertex_cover(&g, &c));
    }

    #[test]
    fn from_parts_rejects_broken_invariants() {
        let g = c5();
        let mut cover = BitSet::new(5);
        cover.insert(0); // still present -> must be rejected
        assert!(Graph::from_parts(
            5,
            g.present().clone(),
            (0..5).map(|v| g.neighbors(v).clone()).collect(),
            cover
        )
        .is_err());

        let mut asym: Vec<BitSet> = (0..3).map(|_| BitSet::new(3)).collect();
        asym[0].insert(1); // 0->1 without 1->0
        let mut present = BitSet::new(3);
        for v in 0..3 {
            present.insert(v);
        }
        assert!(Graph::from_parts(3, present, asym, BitSet::new(3)).is_err());
    }
}
