use std::fmt;

use serde::{Deserialize, Serialize};

/// Binary failure vector over the asset registry, bit `i` set when asset
/// `i` has failed.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemState {
    len: usize,
    words: Vec<u64>,
}

impl SystemState {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut s = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    /// State with exactly the listed assets failed.
    pub fn with_failures(len: usize, failed: &[usize]) -> Self {
        let mut s = Self::zeros(len);
        for &i in failed {
            s.set(i, true);
        }
        s
    }

    /// The low `len` bits of `mask` as a state; for exhaustive enumeration.
    pub fn from_mask(len: usize, mask: u64) -> Self {
        assert!(len <= 64);
        let mut s = Self::zeros(len);
        if len > 0 {
            s.words[0] = if len == 64 {
                mask
            } else {
                mask & ((1u64 << len) - 1)
            };
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, failed: bool) {
        assert!(i < self.len, "asset index {i} out of range {}", self.len);
        let bit = 1u64 << (i % 64);
        if failed {
            self.words[i / 64] |= bit;
        } else {
            self.words[i / 64] &= !bit;
        }
    }

    pub fn failure_count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_intact(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Indices of failed assets in ascending order.
    pub fn failed(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

impl fmt::Debug for SystemState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SystemState(")?;
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        write!(f, ")")
    }
}
