//! Binary range coder with exact integer probabilities.
//!
//! Normative behaviour (the container payload depends on it):
//!
//! * state is a 40-bit window: `range` starts at `2^40 - 1` and is kept in
//!   `[2^32, 2^40)` after every renormalization; `low` carries one extra bit
//!   for carry propagation.
//! * a bit with `P(1) = num/den` splits the range as
//!   `split = range * num / den` (truncating division). Bit 1 takes
//!   `[low, low + split)`, bit 0 takes `[low + split, low + range)`.
//! * while `range < 2^32` the top byte of the window is shifted out; carries
//!   are resolved with a cached byte plus a run of pending `0xFF` bytes.
//! * `finish` shifts out the full window, emitting exactly five bytes more
//!   than the number of renormalization shifts performed while coding.
//!
//! With `den <= 2^24` and `range >= 2^32` both branches hold at least 256
//! values, so a split can never be empty.

use thiserror::Error;

/// Largest permitted probability denominator.
pub const MAX_DENOMINATOR: u32 = 1 << 24;

const WINDOW_BITS: u32 = 40;
const RANGE_INIT: u64 = (1 << WINDOW_BITS) - 1;
const RENORM_BELOW: u64 = 1 << 32;
const LOW_KEEP: u64 = (1 << 32) - 1;
const TOP_SHIFT: u32 = 32;
const CARRY: u64 = 1 << WINDOW_BITS;
/// Bytes consumed by the decoder before the first bit.
const PRIMING_BYTES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoderError {
    #[error("invalid binary probability {num}/{den}")]
    InvalidProb { num: u32, den: u32 },
    #[error("input exhausted after {consumed} bytes")]
    InputExhausted { consumed: usize },
}

/// `P(bit = 1) = num / den` with `0 < num < den <= 2^24`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BinaryProb {
    num: u32,
    den: u32,
}

impl BinaryProb {
    pub fn new(num: u32, den: u32) -> Result<Self, CoderError> {
        if num == 0 || num >= den || den > MAX_DENOMINATOR {
            return Err(CoderError::InvalidProb { num, den });
        }
        Ok(BinaryProb { num, den })
    }

    pub const HALF: BinaryProb = BinaryProb { num: 1, den: 2 };

    pub fn num(&self) -> u32 {
        self.num
    }

    pub fn den(&self) -> u32 {
        self.den
    }

    /// Ideal code length, in bits, of `bit` under this probability.
    pub fn cost_bits(&self, bit: bool) -> f64 {
        let branch = if bit { self.num } else { self.den - self.num };
        (self.den as f64 / branch as f64).log2()
    }

    #[inline]
    fn split(&self, range: u64) -> u64 {
        range * self.num as u64 / self.den as u64
    }
}

#[derive(Debug, Clone)]
pub struct Encoder {
    low: u64,
    range: u64,
    cache: Option<u8>,
    pending: u64,
    output: Vec<u8>,
}

impl Default for Encoder {
    fn default() -> Self {
        Self::new()
    }
}

impl Encoder {
    pub fn new() -> Self {
        Encoder { low: 0, range: RANGE_INIT, cache: None, pending: 0, output: Vec::new() }
    }

    pub fn encode_bit(&mut self, bit: bool, prob_one: BinaryProb) {
        let split = prob_one.split(self.range);
        if bit {
            self.range = split;
        } else {
            self.low += split;
            self.range -= split;
        }
        while self.range < RENORM_BELOW {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if self.low < (0xFF << TOP_SHIFT) || self.low >= CARRY {
            let carry = (self.low >> WINDOW_BITS) as u8;
            if let Some(c) = self.cache {
                self.output.push(c.wrapping_add(carry));
            }
            for _ in 0..self.pending {
                self.output.push(0xFFu8.wrapping_add(carry));
            }
            self.pending = 0;
            self.cache = Some(((self.low >> TOP_SHIFT) & 0xFF) as u8);
        } else {
            self.pending += 1;
        }
        self.low = (self.low & LOW_KEEP) << 8;
    }

    /// Bytes emitted so far (not counting cached or pending bytes).
    pub fn bytes_written(&self) -> usize {
        self.output.len()
    }

    /// Current `(low, range)`, for lockstep checks against a [`Decoder`].
    pub fn interval(&self) -> (u64, u64) {
        (self.low, self.range)
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..=PRIMING_BYTES {
            self.shift_low();
        }
        self.output
    }
}

#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    input: &'a [u8],
    pos: usize,
    low: u64,
    range: u64,
    code: u64,
}

impl<'a> Decoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self, CoderError> {
        let mut dec = Decoder { input, pos: 0, low: 0, range: RANGE_INIT, code: 0 };
        for _ in 0..PRIMING_BYTES {
            dec.code = (dec.code << 8) | dec.next_byte()? as u64;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8, CoderError> {
        let b = *self
            .input
            .get(self.pos)
            .ok_or(CoderError::InputExhausted { consumed: self.pos })?;
        self.pos += 1;
        Ok(b)
    }

    pub fn decode_bit(&mut self, prob_one: BinaryProb) -> Result<bool, CoderError> {
        let split = prob_one.split(self.range);
        let bit = self.code < split;
        if bit {
            self.range = split;
        } else {
            self.code -= split;
            self.low += split;
            self.range -= split;
        }
        while self.range < RENORM_BELOW {
            self.range <<= 8;
            self.low = (self.low & LOW_KEEP) << 8;
            self.code = ((self.code << 8) | self.next_byte()? as u64) & (CARRY - 1);
        }
        Ok(bit)
    }

    /// Current `(low, range)`; equals the encoder's after the same events.
    pub fn interval(&self) -> (u64, u64) {
        (self.low, self.range)
    }

    pub fn bytes_consumed(&self) -> usize {
        self.pos
    }
}
