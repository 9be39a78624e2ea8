//! Seeded Erdős–Rényi graph generation.
//!
//! Uses ChaCha8 so the same seed produces the same graph on every platform
//! and every run; the benchmark harness leans on that for reproducible
//! instance corpora.

use crate::graph::Graph;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// G(n, p): each of the `n(n-1)/2` vertex pairs is an edge independently
/// with probability `p`. Pairs are visited in lexicographic order, one RNG
/// draw per pair, so the output is a pure function of `(n, p, seed)`.
pub fn gen_gnp(n: usize, p: f64, seed: u64) -> Graph {
    assert!((0.0..=1.0).contains(&p), "edge probability out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::new(n);
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_graph() {
        let a = gen_gnp(40, 0.3, 7);
        let b = gen_gnp(40, 0.3, 7);
        assert_eq!(a, b);
        let c = gen_gnp(40, 0.3, 8);
        assert_ne!(a, c, "different seeds should virtually never collide");
    }

    #[test]
    fn extreme_probabilities() {
        let empty = gen_gnp(10, 0.0, 1);
        assert_eq!(empty.edge_count(), 0);
        let full = gen_gnp(10, 1.0, 1);
        assert_eq!(full.edge_count(), 45);
    }

    #[test]
    fn edge_count_tracks_expectation() {
        // Mean edge count over seeds must sit within 3 sigma of n(n-1)/2 * p.
        let n = 60;
        let p = 0.25;
        let pairs = (n * (n - 1) / 2) as f64;
        let runs = 100;
        let total: usize = (0..runs).map(|s| gen_gnp(n, p, s as u64).edge_count()).sum();
        let mean = total as f64 / runs as f64;
        let sigma = (pairs * p * (1.0 - p) / runs as f64).sqrt();
        let expect = pairs * p;
        assert!(
            (mean - expect).abs() < 3.0 * sigma,
            "mean {mean} vs expected {expect} (sigma {sigma})"
        );
    }
}
