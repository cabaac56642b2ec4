//! Next-token predictors: anything that maps a context to one logit per
//! alphabet symbol.
//!
//! Online predictors learn through [`Predictor::observe`], which the stream
//! layer calls after each token has been coded (encoder) or decoded
//! (decoder). Predicting before updating is part of the contract: an
//! encoder that updated first would use information its decoder cannot have.

mod bridge;
mod mismatch;
mod ngram;

pub use bridge::{BridgeClient, DEFAULT_BRIDGE_TIMEOUT, PROTOCOL_VERSION};
pub use mismatch::{MismatchMode, MismatchWrapper};
pub use ngram::NGramModel;

use thiserror::Error;

use crate::probmodel::LogitVector;

#[derive(Debug, Error)]
pub enum PredictorError {
    #[error("predictor bridge did not answer within {0:?}")]
    BridgeTimeout(std::time::Duration),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("vocabulary mismatch: expected {expected}, predictor reports {got}")]
    VocabMismatch { expected: usize, got: usize },
    #[error("predictor returned {got} logits for a vocabulary of {expected}")]
    WrongDimension { expected: usize, got: usize },
    #[error("unknown predictor id {0:?}")]
    UnknownPredictor(String),
    #[error("bridge i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub trait Predictor {
    fn vocab_size(&self) -> usize;

    /// Identity written into container headers.
    fn id(&self) -> String;

    fn predict(&mut self, context: &[u32]) -> Result<LogitVector, PredictorError>;

    /// Learn from `token` having followed `context`.
    fn observe(&mut self, _context: &[u32], _token: u32) {}

    fn reset(&mut self) -> Result<(), PredictorError>;

    /// Hook applied by the decoder to each conditional next-bit probability.
    /// Identity except for test wrappers that model per-bit mismatch.
    fn perturb_bit_prob(&mut self, p: f64) -> f64 {
        p
    }
}

impl<P: Predictor + ?Sized> Predictor for Box<P> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn id(&self) -> String {
        (**self).id()
    }
    fn predict(&mut self, context: &[u32]) -> Result<LogitVector, PredictorError> {
        (**self).predict(context)
    }
    fn observe(&mut self, context: &[u32], token: u32) {
        (**self).observe(context, token)
    }
    fn reset(&mut self) -> Result<(), PredictorError> {
        (**self).reset()
    }
    fn perturb_bit_prob(&mut self, p: f64) -> f64 {
        (**self).perturb_bit_prob(p)
    }
}

impl<P: Predictor + ?Sized> Predictor for &mut P {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn id(&self) -> String {
        (**self).id()
    }
    fn predict(&mut self, context: &[u32]) -> Result<LogitVector, PredictorError> {
        (**self).predict(context)
    }
    fn observe(&mut self, context: &[u32], token: u32) {
        (**self).observe(context, token)
    }
    fn reset(&mut self) -> Result<(), PredictorError> {
        (**self).reset()
    }
    fn perturb_bit_prob(&mut self, p: f64) -> f64 {
        (**self).perturb_bit_prob(p)
    }
}

/// All-zero logits; the `byte-uniform` predictor.
#[derive(Debug, Clone)]
pub struct UniformPredictor {
    vocab: usize,
}

impl UniformPredictor {
    pub const ID: &'static str = "byte-uniform";

    pub fn new(vocab: usize) -> Self {
        UniformPredictor { vocab }
    }
}

impl Predictor for UniformPredictor {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn id(&self) -> String {
        Self::ID.to_string()
    }

    fn predict(&mut self, _context: &[u32]) -> Result<LogitVector, PredictorError> {
        Ok(LogitVector::uniform(self.vocab))
    }

    fn reset(&mut self) -> Result<(), PredictorError> {
        Ok(())
    }
}

/// Rebuild a built-in predictor from its header id.
///
/// `external` cannot be rebuilt from the id alone and is rejected here; the
/// caller connects a [`BridgeClient`] instead.
pub fn from_id(id: &str, vocab: usize) -> Result<Box<dyn Predictor>, PredictorError> {
    if id == UniformPredictor::ID {
        return Ok(Box::new(UniformPredictor::new(vocab)));
    }
    if let Some(model) = NGramModel::from_id(id, vocab) {
        return Ok(Box::new(model));
    }
    Err(PredictorError::UnknownPredictor(id.to_string()))
}
