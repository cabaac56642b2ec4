//! Token streams through the range coder.
//!
//! Per token the encoder asks the predictor for logits, takes the softmax,
//! and walks the token's codeword. For each bit it codes a helper bit with
//! the fixed probability `delta / r`, then the bit itself with the agreed
//! quantized probability. The decoder mirrors this with its own predictor
//! and recovers the same quantized values as long as its per-bit
//! conditionals lie within `delta` of the encoder's.
//!
//! [`CodingMode::Plain`] drops helper bits and quantization and codes the
//! raw conditionals at 24-bit precision. It is the no-mismatch baseline and
//! the demonstration of what goes wrong without PMATIC.

use serde::{Deserialize, Serialize};

use crate::codebook::{BitPrefix, Codebook, CodebookError, SortedMasses};
use crate::params::PmaticParams;
use crate::predictor::{Predictor, PredictorError};
use crate::probmodel::softmax_into;
use crate::quantize::{clamp_open, classify_encoder, quantize_decoder};
use crate::rangecoder::{BinaryProb, Decoder, Encoder, MAX_DENOMINATOR};
use crate::Error;

/// Rolling context: once the context holds `max_window` tokens it is cut
/// back to the most recent `keep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextPolicy {
    pub max_window: u16,
    pub keep: u16,
}

impl ContextPolicy {
    pub const DEFAULT: ContextPolicy = ContextPolicy { max_window: 512, keep: 256 };

    pub fn new(max_window: u16, keep: u16) -> Result<Self, Error> {
        if keep > max_window {
            return Err(Error::InvalidContextPolicy { max_window, keep });
        }
        Ok(ContextPolicy { max_window, keep })
    }
}

impl Default for ContextPolicy {
    fn default() -> Self {
        Self::DEFAULT
    }
}

#[derive(Debug, Clone, Default)]
pub struct ContextWindow {
    policy: ContextPolicy,
    tokens: Vec<u32>,
}

impl ContextWindow {
    pub fn new(policy: ContextPolicy) -> Self {
        ContextWindow { policy, tokens: Vec::new() }
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.tokens
    }

    pub fn push(&mut self, token: u32) {
        self.tokens.push(token);
        if self.tokens.len() >= self.policy.max_window as usize {
            let drop = self.tokens.len() - self.policy.keep as usize;
            self.tokens.drain(..drop);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CodingMode {
    Pmatic,
    Plain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub params: PmaticParams,
    pub context: ContextPolicy,
    pub mode: CodingMode,
    /// Skip bits whose value the codebook alone determines. Both sides must
    /// agree; the container format always codes them.
    pub skip_structural: bool,
}

impl StreamConfig {
    pub fn new(params: PmaticParams) -> Self {
        StreamConfig { params, context: ContextPolicy::DEFAULT, mode: CodingMode::Pmatic, skip_structural: false }
    }

    pub fn plain(params: PmaticParams) -> Self {
        StreamConfig { mode: CodingMode::Plain, ..Self::new(params) }
    }

    pub fn with_context(mut self, context: ContextPolicy) -> Self {
        self.context = context;
        self
    }
}

/// Cost accounting collected while encoding. Costs are ideal code lengths
/// of the events actually coded; the payload adds at most a few bytes.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EncodeStats {
    pub tokens: u64,
    pub token_bits: u64,
    pub helper_ones: u64,
    pub helper_cost_bits: f64,
    pub token_cost_bits: f64,
    /// `-log2` of each token's probability under the encoder predictor.
    pub model_cost_bits: f64,
}

impl EncodeStats {
    pub fn total_cost_bits(&self) -> f64 {
        self.helper_cost_bits + self.token_cost_bits
    }
}

#[derive(Debug, Clone)]
pub struct EncodedStream {
    pub payload: Vec<u8>,
    pub stats: EncodeStats,
}

/// Baseline coder probability: `round(p * 2^24)` kept inside `[1, 2^24 - 1]`.
pub fn plain_prob(p: f64) -> BinaryProb {
    let scaled = (p * MAX_DENOMINATOR as f64).round();
    let num = scaled.clamp(1.0, (MAX_DENOMINATOR - 1) as f64) as u32;
    BinaryProb::new(num, MAX_DENOMINATOR).expect("clamped into range")
}

fn check_vocab(predictor: &impl Predictor, codebook: &Codebook) -> Result<(), Error> {
    let got = predictor.vocab_size();
    if got != codebook.alphabet_size() as usize {
        return Err(PredictorError::VocabMismatch { expected: codebook.alphabet_size() as usize, got }.into());
    }
    Ok(())
}

/// Per-stream scratch buffers shared by the token loops.
struct Scratch {
    probs: Vec<f64>,
    masses: SortedMasses,
}

impl Scratch {
    fn new() -> Self {
        Scratch { probs: Vec::new(), masses: SortedMasses::default() }
    }

    fn load(&mut self, predictor: &mut impl Predictor, context: &[u32], codebook: &Codebook) -> Result<(), Error> {
        let logits = predictor.predict(context)?;
        let n = codebook.alphabet_size() as usize;
        if logits.len() != n {
            return Err(PredictorError::WrongDimension { expected: n, got: logits.len() }.into());
        }
        softmax_into(logits.values(), &mut self.probs);
        codebook.fill_masses(&self.probs, &mut self.masses)?;
        Ok(())
    }
}

pub struct StreamEncoder<'a, P> {
    config: StreamConfig,
    codebook: &'a Codebook,
    predictor: P,
    coder: Encoder,
    context: ContextWindow,
    scratch: Scratch,
    stats: EncodeStats,
}

impl<'a, P: Predictor> StreamEncoder<'a, P> {
    pub fn new(config: StreamConfig, codebook: &'a Codebook, predictor: P) -> Result<Self, Error> {
        check_vocab(&predictor, codebook)?;
        Ok(StreamEncoder {
            config,
            codebook,
            predictor,
            coder: Encoder::new(),
            context: ContextWindow::new(config.context),
            scratch: Scratch::new(),
            stats: EncodeStats::default(),
        })
    }

    pub fn encode_token(&mut self, token: u32) -> Result<(), Error> {
        let cb = self.codebook;
        let code = cb.code(token).map_err(|_| Error::TokenOutOfRange { token, alphabet_size: cb.alphabet_size() })?;
        self.scratch.load(&mut self.predictor, self.context.as_slice(), cb)?;
        self.stats.model_cost_bits -= self.scratch.probs[token as usize].log2();

        let params = &self.config.params;
        let mut prefix = BitPrefix::EMPTY;
        for j in (0..cb.ell()).rev() {
            let bit = (code >> j) & 1 == 1;
            if self.config.skip_structural && cb.structural_bit(prefix).is_some() {
                prefix = prefix.push(bit);
                continue;
            }
            let p = cb.conditional_bit_prob(&self.scratch.masses, prefix)?;
            let prob = match self.config.mode {
                CodingMode::Pmatic => {
                    let quant = classify_encoder(clamp_open(p), params)?;
                    let helper = params.helper_prob();
                    self.coder.encode_bit(quant.helper_bit, helper);
                    self.stats.helper_ones += quant.helper_bit as u64;
                    self.stats.helper_cost_bits += helper.cost_bits(quant.helper_bit);
                    quant.prob()
                }
                CodingMode::Plain => plain_prob(p),
            };
            self.coder.encode_bit(bit, prob);
            self.stats.token_cost_bits += prob.cost_bits(bit);
            self.stats.token_bits += 1;
            prefix = prefix.push(bit);
        }

        self.predictor.observe(self.context.as_slice(), token);
        self.context.push(token);
        self.stats.tokens += 1;
        Ok(())
    }

    pub fn stats(&self) -> &EncodeStats {
        &self.stats
    }

    pub fn finish(self) -> EncodedStream {
        EncodedStream { payload: self.coder.finish(), stats: self.stats }
    }
}

pub struct StreamDecoder<'a, 'b, P> {
    config: StreamConfig,
    codebook: &'a Codebook,
    predictor: P,
    coder: Decoder<'b>,
    context: ContextWindow,
    scratch: Scratch,
}

impl<'a, 'b, P: Predictor> StreamDecoder<'a, 'b, P> {
    pub fn new(config: StreamConfig, codebook: &'a Codebook, predictor: P, payload: &'b [u8]) -> Result<Self, Error> {
        check_vocab(&predictor, codebook)?;
        Ok(StreamDecoder {
            config,
            codebook,
            predictor,
            coder: Decoder::new(payload)?,
            context: ContextWindow::new(config.context),
            scratch: Scratch::new(),
        })
    }

    pub fn decode_token(&mut self) -> Result<u32, Error> {
        let cb = self.codebook;
        self.scratch.load(&mut self.predictor, self.context.as_slice(), cb)?;

        let params = &self.config.params;
        let mut prefix = BitPrefix::EMPTY;
        while prefix.len < cb.ell() {
            if self.config.skip_structural {
                if let Some(bit) = cb.structural_bit(prefix) {
                    prefix = prefix.push(bit);
                    continue;
                }
            }
            let q = match cb.conditional_bit_prob(&self.scratch.masses, prefix) {
                Ok(q) => self.predictor.perturb_bit_prob(q),
                // Only reachable once decoding has already gone wrong.
                Err(CodebookError::EmptyPrefixSet(_)) => {
                    return Err(CodebookError::UnknownCodeword(prefix.value).into());
                }
                Err(e) => return Err(e.into()),
            };
            let prob = match self.config.mode {
                CodingMode::Pmatic => {
                    let helper = self.coder.decode_bit(params.helper_prob())?;
                    quantize_decoder(clamp_open(q), helper, params)?.prob()
                }
                CodingMode::Plain => plain_prob(q),
            };
            let bit = self.coder.decode_bit(prob)?;
            prefix = prefix.push(bit);
        }
        let token = cb.token_of_code(prefix.value)?;

        self.predictor.observe(self.context.as_slice(), token);
        self.context.push(token);
        Ok(token)
    }
}

pub fn encode_stream<P: Predictor>(
    tokens: &[u32],
    codebook: &Codebook,
    config: &StreamConfig,
    predictor: P,
) -> Result<EncodedStream, Error> {
    let mut enc = StreamEncoder::new(*config, codebook, predictor)?;
    for &t in tokens {
        enc.encode_token(t)?;
    }
    Ok(enc.finish())
}

pub fn decode_stream<P: Predictor>(
    payload: &[u8],
    token_count: u64,
    codebook: &Codebook,
    config: &StreamConfig,
    predictor: P,
) -> Result<Vec<u32>, Error> {
    let mut dec = StreamDecoder::new(*config, codebook, predictor, payload)?;
    (0..token_count).map(|_| dec.decode_token()).collect()
}
