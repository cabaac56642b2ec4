use rand_core::RngCore;

use super::{Predictor, PredictorError};
use crate::probmodel::{inject_adversarial_bit_offset, noise_rng, perturb_logits, LogitVector, NoiseRng};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MismatchMode {
    /// IID `Uniform[-eps, eps]` noise added to every logit.
    UniformLogit { eps: f64 },
    /// Every conditional next-bit probability shifted by exactly `+delta`
    /// or `-delta`, sign drawn per bit.
    AdversarialBit { delta: Rational },
}

/// Wraps a predictor to simulate a decoder whose predictions drift from the
/// encoder's. The noise stream is seeded and advances with each call, so a
/// run replays exactly.
pub struct MismatchWrapper<P> {
    inner: P,
    mode: MismatchMode,
    seed: u64,
    rng: NoiseRng,
}

impl<P: Predictor> MismatchWrapper<P> {
    pub fn new(inner: P, mode: MismatchMode, seed: u64) -> Self {
        if let MismatchMode::UniformLogit { eps } = mode {
            assert!(eps >= 0.0, "noise magnitude must be non-negative");
        }
        MismatchWrapper { inner, mode, seed, rng: noise_rng(seed) }
    }

    pub fn uniform_logit(inner: P, eps: f64, seed: u64) -> Self {
        Self::new(inner, MismatchMode::UniformLogit { eps }, seed)
    }

    pub fn adversarial_bit(inner: P, delta: Rational, seed: u64) -> Self {
        Self::new(inner, MismatchMode::AdversarialBit { delta }, seed)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    pub fn into_inner(self) -> P {
        self.inner
    }
}

impl<P: Predictor> Predictor for MismatchWrapper<P> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn id(&self) -> String {
        self.inner.id()
    }

    fn predict(&mut self, context: &[u32]) -> Result<LogitVector, PredictorError> {
        let clean = self.inner.predict(context)?;
        match self.mode {
            MismatchMode::UniformLogit { eps } => {
                let noisy = perturb_logits(&clean, eps, &mut self.rng);
                debug_assert!(clean.values().iter().zip(noisy.values()).all(|(a, b)| (a - b).abs() <= eps));
                Ok(noisy)
            }
            MismatchMode::AdversarialBit { .. } => Ok(clean),
        }
    }

    fn observe(&mut self, context: &[u32], token: u32) {
        self.inner.observe(context, token)
    }

    fn reset(&mut self) -> Result<(), PredictorError> {
        self.rng = noise_rng(self.seed);
        self.inner.reset()
    }

    fn perturb_bit_prob(&mut self, p: f64) -> f64 {
        match self.mode {
            MismatchMode::UniformLogit { .. } => self.inner.perturb_bit_prob(p),
            MismatchMode::AdversarialBit { delta } => {
                let direction = if self.rng.next_u32() & 1 == 1 { 1 } else { -1 };
                inject_adversarial_bit_offset(self.inner.perturb_bit_prob(p), delta, direction)
            }
        }
    }
}
