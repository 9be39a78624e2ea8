//! Exact minimum vertex cover over bitset adjacency matrices.
//!
//! The pieces fit together like this: [`graph::Graph`] keeps a fixed vertex
//! universe and marks deletions in a presence bit vector, so vertex ids stay
//! stable from the root instance all the way down the branching tree.
//! [`reduce`] applies the three degree-based kernelization rules,
//! [`branch`] produces the two-way split on a maximum-degree vertex, and
//! [`solve`] wraps that into a plain sequential solver plus a subset-
//! enumeration brute force used as an oracle in tests.
//!
//! [`encode`] provides the two wire formats for shipping instances between
//! workers, [`dimacs`] reads and writes the usual `p edge` files, and
//! [`adapter`] plugs everything into the `parbb` runtime.

pub mod adapter;
pub mod bitset;
pub mod branch;
pub mod dimacs;
pub mod encode;
pub mod gen;
pub mod graph;
pub mod reduce;
pub mod solve;

pub use adapter::VertexCover;
pub use bitset::BitSet;
pub use encode::Encoding;
pub use graph::Graph;
