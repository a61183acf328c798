//! Fixed-length bit vectors packed into 64-bit words.
//!
//! Reports, state sequences and node-state vectors are all short binary
//! vectors; everything downstream reduces to XOR + popcount on these.

use crate::error::{Error, Result};

/// A fixed-length bit vector. Bit `i` of the vector lives at bit `i % 64`
/// of word `i / 64`, so index 0 is the least-significant bit of word 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        let nwords = len.div_ceil(64).max(1);
        BitVec {
            len,
            words: vec![0; nwords],
        }
    }

    /// Build from the low `len` bits of `word` (bit `i` of `word` becomes bit `i`).
    pub fn from_word(len: usize, word: u64) -> Self {
        assert!(len <= 64, "from_word supports at most 64 bits");
        let mask = if len == 64 {
            u64::MAX
        } else {
            (1u64 << len) - 1
        };
        BitVec {
            len,
            words: vec![word & mask],
        }
    }

    /// Build from a slice of 0/1 values, index 0 first.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            debug_assert!(b <= 1);
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    /// Parse a string of '0'/'1' characters, index 0 first.
    pub fn from_str01(s: &str) -> Self {
        let bits: Vec<u8> = s
            .chars()
            .map(|c| match c {
                '0' => 0,
                '1' => 1,
                _ => panic!("bit string may contain only '0' and '1', got {c:?}"),
            })
            .collect();
        BitVec::from_bits(&bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range (len {})",
            self.len
        );
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range (len {})",
            self.len
        );
        let w = &mut self.words[i / 64];
        if value {
            *w |= 1u64 << (i % 64);
        } else {
            *w &= !(1u64 << (i % 64));
        }
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Hamming distance to another vector of the same length.
    pub fn hamming(&self, other: &BitVec) -> Result<u32> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum())
    }

    /// Bitwise complement within the vector length.
    pub fn complement(&self) -> BitVec {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    /// The first word; the whole vector when `len <= 64`.
    pub fn word0(&self) -> u64 {
        self.words[0]
    }

    fn mask_tail(&mut self) {
        let used = self.len % 64;
        if used != 0 {
            let last = self.words.len() - 1;
            self.words[last] &= (1u64 << used) - 1;
        }
        if self.len == 0 {
            self.words[0] = 0;
        }
    }
}

impl std::fmt::Display for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}
