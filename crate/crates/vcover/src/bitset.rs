//! Fixed-width bit set backed by `u64` blocks.
//!
//! Sized once at construction; all binary operations require equal widths.
//! Bit `i` lives in block `i / 64` at position `i % 64`, and the byte
//! serialization used by the wire encodings follows the same order (bit `i`
//! goes to byte `i / 8`, bit `i % 8`), so a set's byte image is stable.

const BLOCK_BITS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitSet {
    nbits: usize,
    blocks: Vec<u64>,
}

impl BitSet {
    pub fn new(nbits: usize) -> Self {
        BitSet {
            nbits,
            blocks: vec![0; nbits.div_ceil(BLOCK_BITS)],
        }
    }

    pub fn nbits(&self) -> usize {
        self.nbits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.nbits);
        self.blocks[i / BLOCK_BITS] >> (i % BLOCK_BITS) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        debug_assert!(i < self.nbits);
        self.blocks[i / BLOCK_BITS] |= 1 << (i % BLOCK_BITS);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        debug_assert!(i < self.nbits);
        self.blocks[i / BLOCK_BITS] &= !(1 << (i % BLOCK_BITS));
    }

    pub fn clear(&mut self) {
        self.blocks.fill(0);
    }

    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    pub fn first(&self) -> Option<usize> {
        for (bi, &b) in self.blocks.iter().enumerate() {
            if b != 0 {
                return Some(bi * BLOCK_BITS + b.trailing_zeros() as usize);
            }
        }
        None
    }

    pub fn intersects(&self, other: &BitSet) -> bool {
        debug_assert_eq!(self.nbits, other.nbits);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .any(|(a, b)| a & b != 0)
    }

    pub fn is_disjoint(&self, other: &BitSet) -> bool {
        !self.intersects(other)
    }

    pub fn union_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= b;
        }
    }

    pub fn intersect_with(&mut self, other: &BitSet) {
        debug_assert_eq!(self.nbits, other.nbits);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a &= b;
        }
    }

    /// Iterate set bit positions in increasing order.
    pub fn iter(&self) -> Ones<'_> {
        Ones {
            set: self,
            block: 0,
            bits: self.blocks.first().copied().unwrap_or(0),
        }
    }

    /// Byte image, `ceil(nbits / 8)` bytes, bit `i` at byte `i / 8` bit `i % 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.nbits.div_ceil(8);
        let mut out = vec![0u8; nbytes];
        for (i, byte) in out.iter_mut().enumerate() {
            let block = self.blocks[i * 8 / BLOCK_BITS];
            *byte = (block >> (i * 8 % BLOCK_BITS)) as u8;
        }
        out
    }

    /// Inverse of [`to_bytes`](Self::to_bytes). Fails if the slice is the
    /// wrong length or sets bits at or beyond `nbits`.
    pub fn from_bytes(nbits: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != nbits.div_ceil(8) {
            return None;
        }
        let mut set = BitSet::new(nbits);
        for (i, &byte) in bytes.iter().enumerate() {
            set.blocks[i * 8 / BLOCK_BITS] |= (byte as u64) << (i * 8 % BLOCK_BITS);
        }
        // Trailing padding bits must be zero, and no bit may exceed nbits.
        let tail = nbits % BLOCK_BITS;
        if tail != 0 {
            let last = *set.blocks.last().unwrap();
            if last >> tail != 0 {
                return None;
            }
        }
        Some(set)
    }
}

impl std::fmt::Debug for BitSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

pub struct Ones<'a> {
    set: &'a BitSet,
    block: usize,
    bits: u64,
}

impl Iterator for Ones<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        loop {
            if self.bits != 0 {
                let tz = self.bits.trailing_zeros() as usize;
                self.bits &= self.bits - 1;
                return Some(self.block * BLOCK_BITS + tz);
            }
            self.block += 1;
            if self.block >= self.set.blocks.len() {
                return None;
            }
            self.bits = self.set.blocks[self.block];
        }
    }
}
