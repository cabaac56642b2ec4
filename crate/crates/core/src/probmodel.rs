//! Logit and probability vectors, mismatch injection, and the conditional
//! total-variation oracle.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`, seeded with
//! `SeedableRng::seed_from_u64`). Uniform reals are drawn as
//! `(next_u64() >> 11) * 2^-53`, so noise sequences replay identically on
//! every platform.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::rational::Rational;

pub type NoiseRng = ChaCha8Rng;

pub fn noise_rng(seed: u64) -> NoiseRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from `[0, 1)`.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Largest alphabet accepted by [`cond_tv_bruteforce`].
pub const MAX_BRUTEFORCE_ALPHABET: usize = 20;

/// Clamp margin for adversarial per-bit offsets.
pub const ADVERSARIAL_TINY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("alphabet of size {0} is too large for brute-force enumeration")]
    AlphabetTooLarge(usize),
    #[error("distributions have different sizes ({0} vs {1})")]
    SizeMismatch(usize, usize),
    #[error("logit vector contains a non-finite value at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitVector(Vec<f64>);

impl LogitVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ProbError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ProbError::NonFinite(i));
        }
        Ok(LogitVector(values))
    }

    pub fn uniform(n: usize) -> Self {
        LogitVector(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Wrap already-normalized probabilities; used by tests and oracles.
    pub fn from_probs(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|&p| p >= 0.0));
        ProbVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Softmax with the usual max-shift. Entries are floored at
/// `f64::MIN_POSITIVE` so they stay strictly positive for extreme logits.
pub fn softmax(logits: &LogitVector) -> ProbVector {
    let mut out = Vec::with_capacity(logits.len());
    softmax_into(logits.values(), &mut out);
    ProbVector(out)
}

pub(crate) fn softmax_into(logits: &[f64], out: &mut Vec<f64>) {
    out.clear();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for &u in logits {
        let e = (u - max).exp();
        total += e;
        out.push(e);
    }
    for e in out.iter_mut() {
        *e = (*e / total).max(f64::MIN_POSITIVE);
    }
}

/// Add IID `Uniform[-eps, eps]` noise to every logit.
pub fn inject_uniform_noise(logits: &LogitVector, eps: f64, seed: u64) -> LogitVector {
    let mut rng = noise_rng(seed);
    perturb_logits(logits, eps, &mut rng)
}

/// Same as [`inject_uniform_noise`] but drawing from a caller-owned stream.
/// The floating-point difference `out - in` never exceeds `eps`.
pub fn perturb_logits(logits: &LogitVector, eps: f64, rng: &mut impl RngCore) -> LogitVector {
    assert!(eps >= 0.0, "noise magnitude must be non-negative");
    let out = logits
        .values()
        .iter()
        .map(|&x| {
            if eps == 0.0 {
                return x;
            }
            let u = eps * (2.0 * unit_f64(rng) - 1.0);
            let mut y = x + u;
            // Rounding in the addition can overshoot by an ulp.
            while (y - x).abs() > eps {
                y = if y > x { y.next_down() } else { y.next_up() };
            }
            y
        })
        .collect();
    LogitVector(out)
}

/// Shift a per-bit probability by exactly `direction * delta` (up to the
/// rounding of `delta` itself), clamped to `[1e-12, 1 - 1e-12]`.
///
/// The result satisfies `|out - p| <= delta` as an exact real inequality.
pub fn inject_adversarial_bit_offset(p: f64, delta: Rational, direction: i8) -> f64 {
    use num_bigint::BigInt;
    use num_rational::BigRational;

    let d = delta.to_f64();
    let sign = if direction >= 0 { 1.0 } else { -1.0 };
    let mut out = (p + sign * d).clamp(ADVERSARIAL_TINY, 1.0 - ADVERSARIAL_TINY);

    let exact_p = BigRational::from_float(p).expect("finite probability");
    let bound = BigRational::new(BigInt::from(delta.numer()), BigInt::from(delta.denom()));
    loop {
        let exact_out = BigRational::from_float(out).expect("finite probability");
        let diff = exact_out - &exact_p;
        let dist = if diff < BigRational::from_integer(0.into()) { -diff } else { diff };
        if dist <= bound {
            break out;
        }
        out = if out > p { out.next_down() } else { out.next_up() };
    }
}

/// `max_{S, S* ⊆ S} |p(S*|S) - q(S*|S)|` by enumerating every nonempty
/// conditioning set `S` as a bitmask.
///
/// For a fixed `S` the inner maximum is taken in closed form: with
/// `d_k = p_k / p(S) - q_k / q(S)` the best `S*` collects exactly the
/// positive `d_k` (or the negative ones; both sums have equal magnitude
/// because the `d_k` sum to zero). That makes the cost `O(2^|A| |A|)`.
pub fn cond_tv_bruteforce(p: &ProbVector, q: &ProbVector) -> Result<f64, ProbError> {
    let n = p.len();
    if n != q.len() {
        return Err(ProbError::SizeMismatch(n, q.len()));
    }
    if n > MAX_BRUTEFORCE_ALPHABET {
        return Err(ProbError::AlphabetTooLarge(n));
    }
    let (p, q) = (p.values(), q.values());
    let mut best = 0.0f64;
    for set in 1u32..(1u32 << n) {
        let mut ps = 0.0;
        let mut qs = 0.0;
        for k in 0..n {
            if set >> k & 1 == 1 {
                ps += p[k];
                qs += q[k];
            }
        }
        let mut pos = 0.0;
        let mut neg = 0.0;
        for k in 0..n {
            if set >> k & 1 == 1 {
                let d = p[k] / ps - q[k] / qs;
                if d > 0.0 {
                    pos += d;
                } else {
                    neg -= d;
                }
            }
        }
        best = best.max(pos).max(neg);
    }
    Ok(best)
}

/// Total variation distance.
pub fn tv_distance(p: &ProbVector, q: &ProbVector) -> f64 {
    0.5 * p.values().iter().zip(q.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// `tanh(eps / 2)`, the conditional-TV bound implied by `||u - v||_inf <= eps`.
pub fn prop1_bound(eps: f64) -> f64 {
    (eps / 2.0).tanh()
}
