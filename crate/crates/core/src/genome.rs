//! Fixed-length binary genomes stored as packed bit vectors.

use rand::Rng;
use std::fmt;

/// A fixed-length binary string. The length is set at construction and
/// never changes; bits are packed into `u64` words, with unused high bits
/// kept at zero so that equality, hashing and popcounts stay exact.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Genome {
    len: usize,
    words: Vec<u64>,
}

impl Genome {
    pub fn zeros(len: usize) -> Self {
        Genome {
            len,
            words: vec![0u64; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut g = Genome::zeros(len);
        for w in &mut g.words {
            *w = u64::MAX;
        }
        g.mask_tail();
        g
    }

    /// Uniform random genome: every bit is 0 or 1 with probability 1/2.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut g = Genome::zeros(len);
        for w in &mut g.words {
            *w = rng.next_u64();
        }
        g.mask_tail();
        g
    }

    /// Builds a genome from a string of '0'/'1' characters.
    ///
    /// Panics on any other character; intended for tests and small fixtures.
    pub fn from_bit_str(s: &str) -> Self {
        let mut g = Genome::zeros(s.len());
        for (j, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => g.set(j, true),
                _ => panic!("invalid bit character {ch:?} in genome string"),
            }
        }
        g
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut g = Genome::zeros(bits.len());
        for (j, &b) in bits.iter().enumerate() {
            g.set(j, b);
        }
        g
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
    pub fn get(&self, j: usize) -> bool {
        debug_assert!(j < self.len);
        (self.words[j / 64] >> (j % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, j: usize, value: bool) {
        debug_assert!(j < self.len);
        let (w, b) = (j / 64, j % 64);
        if value {
            self.words[w] |= 1u64 << b;
        } else {
            self.words[w] &= !(1u64 << b);
        }
    }

    #[inline]
    pub fn flip(&mut self, j: usize) {
        debug_assert!(j < self.len);
        self.words[j / 64] ^= 1u64 << (j % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// The bitwise complement, at the same length.
    pub fn complement(&self) -> Self {
        let mut g = self.clone();
        for w in &mut g.words {
            *w = !*w;
        }
        g.mask_tail();
        g
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |j| self.get(j))
    }

    pub fn to_bit_string(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    fn mask_tail(&mut self) {
        let used = self.len % 64;
        if used != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << used) - 1;
            }
        }
        if self.len == 0 {
            self.words.clear();
        }
    }
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({})", self.to_bit_string())
    }
}
