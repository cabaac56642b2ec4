//! Fixed-length codewords for tokens and conditional next-bit probabilities.
//!
//! Codewords are `ell = ceil(log2 |A|)` bits long and assigned by a seeded
//! Fisher-Yates shuffle of `[0, 2^ell)`, truncated to the alphabet size.
//! Index draws use Lemire's unbiased multiply-shift rejection over
//! ChaCha8 `next_u64`, see [`crate::probmodel::noise_rng`].
//!
//! Unused codewords carry zero probability mass; they never appear in a
//! conditioning set.

use rand_core::RngCore;
use thiserror::Error;

use crate::probmodel::{noise_rng, ProbVector};

pub const MAX_ALPHABET: u32 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodebookError {
    #[error("alphabet size {0} is below 2")]
    AlphabetTooSmall(u32),
    #[error("alphabet size {0} exceeds {MAX_ALPHABET}")]
    AlphabetTooLarge(u32),
    #[error("token {token} outside alphabet of size {alphabet_size}")]
    UnknownToken { token: u32, alphabet_size: u32 },
    #[error("codeword {0:#b} is not assigned to any token")]
    UnknownCodeword(u32),
    #[error("no token codeword extends prefix {0:?}")]
    EmptyPrefixSet(BitPrefix),
    #[error("prefix of length {len} is not shorter than the codeword length {ell}")]
    PrefixTooLong { len: u32, ell: u32 },
    #[error("probability vector has {got} entries, alphabet has {expected}")]
    SizeMismatch { got: usize, expected: u32 },
}

/// The first `len` bits of a codeword, most significant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitPrefix {
    pub value: u32,
    pub len: u32,
}

impl BitPrefix {
    pub const EMPTY: BitPrefix = BitPrefix { value: 0, len: 0 };

    pub fn from_bits(bits: &[bool]) -> Self {
        bits.iter().fold(BitPrefix::EMPTY, |p, &b| p.push(b))
    }

    pub fn push(self, bit: bool) -> Self {
        BitPrefix { value: (self.value << 1) | bit as u32, len: self.len + 1 }
    }
}

/// Unbiased draw from `[0, bound)`.
fn bounded(rng: &mut impl RngCore, bound: u64) -> u64 {
    let threshold = bound.wrapping_neg() % bound;
    loop {
        let m = rng.next_u64() as u128 * bound as u128;
        if (m as u64) >= threshold {
            return (m >> 64) as u64;
        }
    }
}

pub fn codeword_len(alphabet_size: u32) -> u32 {
    32 - (alphabet_size - 1).leading_zeros()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    alphabet_size: u32,
    ell: u32,
    seed: u64,
    token_to_code: Vec<u32>,
    /// Token ids ordered by codeword value.
    sorted_tokens: Vec<u32>,
    /// Codewords in increasing order, parallel to `sorted_tokens`.
    sorted_codes: Vec<u32>,
}

impl Codebook {
    pub fn build(alphabet_size: u32, seed: u64) -> Result<Self, CodebookError> {
        if alphabet_size < 2 {
            return Err(CodebookError::AlphabetTooSmall(alphabet_size));
        }
        if alphabet_size > MAX_ALPHABET {
            return Err(CodebookError::AlphabetTooLarge(alphabet_size));
        }
        let ell = codeword_len(alphabet_size);
        let space = 1u32 << ell;
        let mut codes: Vec<u32> = (0..space).collect();
        let mut rng = noise_rng(seed);
        for i in (1..space as usize).rev() {
            let j = bounded(&mut rng, i as u64 + 1) as usize;
            codes.swap(i, j);
        }
        codes.truncate(alphabet_size as usize);

        let mut sorted_tokens: Vec<u32> = (0..alphabet_size).collect();
        sorted_tokens.sort_unstable_by_key(|&t| codes[t as usize]);
        let sorted_codes = sorted_tokens.iter().map(|&t| codes[t as usize]).collect();
        Ok(Codebook { alphabet_size, ell, seed, token_to_code: codes, sorted_tokens, sorted_codes })
    }

    pub fn alphabet_size(&self) -> u32 {
        self.alphabet_size
    }

    /// Codeword length in bits.
    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn code(&self, token: u32) -> Result<u32, CodebookError> {
        self.token_to_code
            .get(token as usize)
            .copied()
            .ok_or(CodebookError::UnknownToken { token, alphabet_size: self.alphabet_size })
    }

    /// The codeword of `token`, most significant bit first.
    pub fn token_bits(&self, token: u32) -> Result<Vec<bool>, CodebookError> {
        let code = self.code(token)?;
        Ok((0..self.ell).rev().map(|i| code >> i & 1 == 1).collect())
    }

    pub fn token_of_code(&self, code: u32) -> Result<u32, CodebookError> {
        self.sorted_codes
            .binary_search(&code)
            .map(|i| self.sorted_tokens[i])
            .map_err(|_| CodebookError::UnknownCodeword(code))
    }

    pub fn bits_token(&self, bits: &[bool]) -> Result<u32, CodebookError> {
        self.token_of_code(BitPrefix::from_bits(bits).value)
    }

    pub fn sorted_tokens(&self) -> &[u32] {
        &self.sorted_tokens
    }

    /// Indices into the codeword-sorted order covered by `prefix`, split at
    /// the next bit: `(start, first_one, end)`.
    pub(crate) fn prefix_span(&self, prefix: BitPrefix) -> (usize, usize, usize) {
        let rest = self.ell - prefix.len;
        let lo = prefix.value << rest;
        let hi = (prefix.value as u64 + 1) << rest;
        let mid = lo | (1 << (rest - 1));
        let find = |c: u64| self.sorted_codes.partition_point(|&x| (x as u64) < c);
        (find(lo as u64), find(mid as u64), find(hi))
    }

    /// Reorder `probs` into codeword order.
    pub fn sorted_masses(&self, probs: &ProbVector) -> Result<SortedMasses, CodebookError> {
        let mut m = SortedMasses::default();
        self.fill_masses(probs.values(), &mut m)?;
        Ok(m)
    }

    pub(crate) fn fill_masses(&self, probs: &[f64], out: &mut SortedMasses) -> Result<(), CodebookError> {
        if probs.len() != self.alphabet_size as usize {
            return Err(CodebookError::SizeMismatch { got: probs.len(), expected: self.alphabet_size });
        }
        out.0.clear();
        out.0.extend(self.sorted_tokens.iter().map(|&t| probs[t as usize]));
        Ok(())
    }

    /// `P(next bit = 1 | codeword starts with prefix)`.
    pub fn conditional_bit_prob(&self, masses: &SortedMasses, prefix: BitPrefix) -> Result<f64, CodebookError> {
        if prefix.len >= self.ell {
            return Err(CodebookError::PrefixTooLong { len: prefix.len, ell: self.ell });
        }
        let (lo, mid, hi) = self.prefix_span(prefix);
        if lo == hi {
            return Err(CodebookError::EmptyPrefixSet(prefix));
        }
        if mid == lo {
            return Ok(1.0);
        }
        if mid == hi {
            return Ok(0.0);
        }
        let zeros = masses.sum(lo, mid);
        let ones = masses.sum(mid, hi);
        Ok(ones / (zeros + ones))
    }

    /// Whether the bit after `prefix` is forced by the codebook alone.
    pub fn structural_bit(&self, prefix: BitPrefix) -> Option<bool> {
        let (lo, mid, hi) = self.prefix_span(prefix);
        if mid == lo {
            Some(true)
        } else if mid == hi {
            Some(false)
        } else {
            None
        }
    }
}

/// Probabilities permuted into codeword order.
///
/// Branch masses are summed directly over the contiguous slice for each
/// query rather than taken as differences of one cumulative table: a deep
/// prefix can hold very little mass, and subtracting two large prefix sums
/// would leave only a few significant digits of it. Walking one codeword
/// touches about `2|A|` entries in total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SortedMasses(Vec<f64>);

impl SortedMasses {
    fn sum(&self, lo: usize, hi: usize) -> f64 {
        self.0[lo..hi].iter().sum()
    }
}
