use std::collections::HashMap;

use super::{Predictor, PredictorError};
use crate::probmodel::LogitVector;

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    counts: HashMap<u32, u64>,
}

/// Additively smoothed n-gram model, updated online.
///
/// The key is the last `order` tokens of the (already truncated) context,
/// or all of it when shorter. Logits are
/// `ln((count + alpha) / (total + alpha * |A|))`.
#[derive(Debug, Clone)]
pub struct NGramModel {
    vocab: usize,
    order: usize,
    alpha: f64,
    table: HashMap<Vec<u32>, ContextCounts>,
}

impl NGramModel {
    pub const DEFAULT_ORDER: usize = 2;
    pub const DEFAULT_ALPHA: f64 = 0.5;

    pub fn new(vocab: usize, order: usize, alpha: f64) -> Self {
        assert!(alpha > 0.0 && alpha.is_finite(), "smoothing must be positive");
        NGramModel { vocab, order, alpha, table: HashMap::new() }
    }

    pub fn with_defaults(vocab: usize) -> Self {
        Self::new(vocab, Self::DEFAULT_ORDER, Self::DEFAULT_ALPHA)
    }

    pub(super) fn from_id(id: &str, vocab: usize) -> Option<Self> {
        let rest = id.strip_prefix("ngram:order=")?;
        let (order, alpha) = rest.split_once(":alpha=")?;
        let order: usize = order.parse().ok()?;
        let alpha: f64 = alpha.parse().ok()?;
        (alpha > 0.0 && alpha.is_finite()).then(|| Self::new(vocab, order, alpha))
    }

    fn key<'a>(&self, context: &'a [u32]) -> &'a [u32] {
        &context[context.len().saturating_sub(self.order)..]
    }
}

impl Predictor for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab
    }

    fn id(&self) -> String {
        format!("ngram:order={}:alpha={}", self.order, self.alpha)
    }

    fn predict(&mut self, context: &[u32]) -> Result<LogitVector, PredictorError> {
        let Some(entry) = self.table.get(self.key(context)) else {
            return Ok(LogitVector::uniform(self.vocab));
        };
        let denom = entry.total as f64 + self.alpha * self.vocab as f64;
        let mut logits = vec![(self.alpha / denom).ln(); self.vocab];
        for (&token, &count) in &entry.counts {
            logits[token as usize] = ((count as f64 + self.alpha) / denom).ln();
        }
        Ok(LogitVector::new(logits).expect("finite by construction"))
    }

    fn observe(&mut self, context: &[u32], token: u32) {
        let key = self.key(context).to_vec();
        let entry = self.table.entry(key).or_default();
        entry.total += 1;
        *entry.counts.entry(token).or_insert(0) += 1;
    }

    fn reset(&mut self) -> Result<(), PredictorError> {
        self.table.clear();
        Ok(())
    }
}
