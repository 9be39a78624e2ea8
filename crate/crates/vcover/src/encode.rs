//! Wire formats for shipping cover instances between workers.
//!
//! Two encodings, selectable per run:
//!
//! * **Basic** is self-contained: vertex count, presence bits, the full
//!   adjacency matrix row by row, then the partial-cover bits. Roughly
//!   `n^2 / 8` bytes.
//! * **Optimized** exploits that every task is an induced subgraph of the
//!   root instance every rank already has: it ships only the presence bits
//!   and the partial-cover bits (`2 * ceil(n/8)` bytes) and the decoder
//!   rebuilds the adjacency from its local copy of the base graph.
//!
//! Bit order within bytes follows [`BitSet::to_bytes`]. All integers are
//! little-endian.

use crate::bitset::BitSet;
use crate::graph::Graph;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Basic,
    Optimized,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Basic => "basic",
            Encoding::Optimized => "optimized",
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "basic" => Ok(Encoding::Basic),
            "optimized" => Ok(Encoding::Optimized),
            other => Err(format!("unknown encoding '{other}' (basic|optimized)")),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("instance bytes truncated: expected {expected}, got {got}")]
    Truncated { expected: usize, got: usize },
    #[error("instance bytes malformed: {0}")]
    Malformed(&'static str),
}

/// `[u32 n][present][row 0..n][cover]`, each bit section `ceil(n/8)` bytes.
pub fn encode_basic(g: &Graph) -> Vec<u8> {
    let n = g.n();
    let section = n.div_ceil(8);
    let mut out = Vec::with_capacity(4 + section * (n + 2));
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&g.present().to_bytes());
    for v in 0..n {
        out.extend_from_slice(&g.neighbors(v).to_bytes());
    }
    out.extend_from_slice(&g.cover().to_bytes());
    out
}

pub fn decode_basic(bytes: &[u8]) -> Result<Graph, CodecError> {
    if bytes.len() < 4 {
        return Err(CodecError::Truncated { expected: 4, got: bytes.len() });
    }
    let n = u32::from_le_bytes(bytes[..4].try_into().unwrap()) as usize;
    let section = n.div_ceil(8);
    let expected = 4 + section * (n + 2);
    if bytes.len() != expected {
        return Err(CodecError::Truncated { expected, got: bytes.len() });
    }
    let take = |i: usize| &bytes[4 + i * section..4 + (i + 1) * section];
    let present =
        BitSet::from_bytes(n, take(0)).ok_or(CodecError::Malformed("bad presence bits"))?;
    let mut adj = Vec::with_capacity(n);
    for v in 0..n {
        adj.push(
            BitSet::from_bytes(n, take(1 + v)).ok_or(CodecError::Malformed("bad adjacency row"))?,
        );
    }
    let cover =
        BitSet::from_bytes(n, take(1 + n)).ok_or(CodecError::Malformed("bad cover bits"))?;
    Graph::from_parts(n, present, adj, cover).map_err(CodecError::Malformed)
}

/// `[present][cover]`, each `ceil(n/8)` bytes; `n` comes from the base graph.
pub fn encode_optimized(g: &Graph) -> Vec<u8> {
    let mut out = g.present().to_bytes();
    out.extend_from_slice(&g.cover().to_bytes());
    out
}

/// Rebuild the induced subgraph of `base` on the encoded present set.
/// Only correct for instances derived from `base` by vertex deletion,
/// which is the only way the search ever makes instances.
pub fn decode_optimized(bytes: &[u8], base: &Graph) -> Result<Graph, CodecError> {
    let n = base.n();
    let section = n.div_ceil(8);
    if bytes.len() != 2 * section {
        return Err(CodecError::Truncated { expected: 2 * section, got: bytes.len() });
    }
    let present = BitSet::from_bytes(n, &bytes[..section])
        .ok_or(CodecError::Malformed("bad presence bits"))?;
    let cover = BitSet::from_bytes(n, &bytes[section..])
        .ok_or(CodecError::Malformed("bad cover bits"))?;
    let mut adj = Vec::with_capacity(n);
    for v in 0..n {
        let mut row = if present.get(v) {
            base.neighbors(v).clone()
        } else {
            BitSet::new(n)
        };
        row.intersect_with(&present);
        adj.push(row);
    }
    Graph::from_parts(n, present, adj, cover).map_err(CodecError::Malformed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Graph {
        // C6 with two vertices already committed and removed, leaving a path.
        let mut g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        g.take_into_cover(0);
        g.take_into_cover(3);
        g
    }

    #[test]
    fn basic_round_trip_preserves_everything() {
        let g = sample();
        let back = decode_basic(&encode_basic(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn basic_preserves_isolated_present_vertices() {
        // Vertex 2 present with degree 0: presence must survive the trip.
        let mut g = Graph::from_edges(3, &[(0, 1), (1, 2)]);
        g.remove_vertex(1); // isolates 0 and 2, both still present
        let back = decode_basic(&encode_basic(&g)).unwrap();
        assert_eq!(back, g);
        assert!(back.is_present(0) && back.is_present(2));
    }

    #[test]
    fn optimized_round_trip_against_base() {
        let base = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        let g = sample();
        let bytes = encode_optimized(&g);
        assert_eq!(bytes.len(), 2 * 6usize.div_ceil(8));
        let back = decode_optimized(&bytes, &base).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn decoders_reject_truncation_and_garbage() {
        let g = sample();
        let mut basic = encode_basic(&g);
        basic.pop();
        assert!(matches!(decode_basic(&basic), Err(CodecError::Truncated { .. })));
        assert!(decode_basic(&[]).is_err());

        let base = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]);
        assert!(decode_optimized(&[0xff], &base).is_err());

        // Overlapping present and cover bits must be rejected.
        let section = 6usize.div_ceil(8);
        let overlap = vec![0x01u8; 2 * section];
        assert!(decode_optimized(&overlap, &base).is_err());
    }

    #[test]
    fn optimized_is_a_flat_factor_smaller() {
        let n = 256;
        let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        let g = Graph::from_edges(n, &edges);
        let basic = encode_basic(&g).len();
        let optimized = encode_optimized(&g).len();
        assert_eq!(optimized, 2 * n.div_ceil(8));
        assert!(basic >= optimized * (n / 4), "basic {basic}, optimized {optimized}");
    }
}
