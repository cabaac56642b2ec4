//! Compression benchmark harness.
//!
//! For every file and parameter setting the harness encodes with PMATIC,
//! decodes with a noisy copy of the predictor, and compares against plain
//! arithmetic coding with the same predictor and no mismatch. It also runs
//! plain coding under the same noise to count how often that breaks.

use serde::Serialize;

use crate::codebook::Codebook;
use crate::codec::{decode_stream, encode_stream, ContextPolicy, StreamConfig};
use crate::params::PmaticParams;
use crate::predictor::{self, MismatchWrapper, Predictor};
use crate::Error;

/// Roughly the chunk size used when splitting text into files.
pub const DEFAULT_CHUNK_BYTES: usize = 5000;

#[derive(Debug, Clone)]
pub struct BenchFile {
    pub name: String,
    pub tokens: Vec<u32>,
    /// Size of the original file, for bits per character and ratios.
    pub raw_bytes: u64,
}

impl BenchFile {
    /// Cut a byte string into files of at most `chunk` bytes, one token per byte.
    pub fn split_bytes(name: &str, bytes: &[u8], chunk: usize) -> Vec<BenchFile> {
        bytes
            .chunks(chunk.max(1))
            .enumerate()
            .map(|(i, c)| BenchFile {
                name: format!("{name}.{i:04}"),
                tokens: c.iter().map(|&b| b as u32).collect(),
                raw_bytes: c.len() as u64,
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub alphabet_size: u32,
    pub predictor_id: String,
    pub codebook_seed: u64,
    pub context: ContextPolicy,
    /// Decoder logit noise; `None` means `2 * delta` for each setting.
    pub mismatch_eps: Option<f64>,
    pub mismatch_seed: u64,
    pub skip_structural: bool,
}

impl BenchOptions {
    pub fn new(alphabet_size: u32, predictor_id: impl Into<String>) -> Self {
        BenchOptions {
            alphabet_size,
            predictor_id: predictor_id.into(),
            codebook_seed: 0,
            context: ContextPolicy::DEFAULT,
            mismatch_eps: None,
            mismatch_seed: 1,
            skip_structural: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub file: String,
    pub setting: String,
    pub tokens: u64,
    pub raw_bytes: u64,
    pub compressed_bytes: u64,
    pub bits_per_token: f64,
    pub bits_per_character: f64,
    pub compression_ratio: f64,
    pub helper_overhead_bits_per_token: f64,
    pub helper_one_fraction: f64,
    /// Plain arithmetic coding, same predictor, no mismatch.
    pub baseline_bits_per_token: f64,
    pub overhead_bits_per_token: f64,
    pub decode_success: bool,
    /// Whether plain coding under the same noise failed to round-trip.
    pub plain_mismatch_failed: bool,
    pub mismatch_eps: f64,
    pub mismatch_seed: u64,
    pub codebook_seed: u64,
    pub predictor_id: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub rows: Vec<BenchReport>,
    pub aggregate: Vec<BenchReport>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn make(id: &str, vocab: u32) -> Result<Box<dyn Predictor>, Error> {
    Ok(predictor::from_id(id, vocab as usize)?)
}

fn bench_one(
    file: &BenchFile,
    setting: &str,
    params: PmaticParams,
    codebook: &Codebook,
    opts: &BenchOptions,
) -> Result<BenchReport, Error> {
    let n = opts.alphabet_size;
    let eps = opts.mismatch_eps.unwrap_or(2.0 * params.delta().to_f64());
    let mut config = StreamConfig::new(params).with_context(opts.context);
    config.skip_structural = opts.skip_structural;
    let plain = StreamConfig { mode: crate::codec::CodingMode::Plain, ..config };
    let count = file.tokens.len() as u64;

    let enc = encode_stream(&file.tokens, codebook, &config, make(&opts.predictor_id, n)?)?;
    let noisy = MismatchWrapper::uniform_logit(make(&opts.predictor_id, n)?, eps, opts.mismatch_seed);
    let decode_success = match decode_stream(&enc.payload, count, codebook, &config, noisy) {
        Ok(out) => out == file.tokens,
        Err(e) if e.is_decode_failure() => false,
        Err(e) => return Err(e),
    };

    let base = encode_stream(&file.tokens, codebook, &plain, make(&opts.predictor_id, n)?)?;
    let noisy = MismatchWrapper::uniform_logit(make(&opts.predictor_id, n)?, eps, opts.mismatch_seed);
    let plain_mismatch_failed = match decode_stream(&base.payload, count, codebook, &plain, noisy) {
        Ok(out) => out != file.tokens,
        Err(e) if e.is_decode_failure() => true,
        Err(e) => return Err(e),
    };

    let bits = enc.payload.len() as f64 * 8.0;
    let base_bits = base.payload.len() as f64 * 8.0;
    let t = count as f64;
    Ok(BenchReport {
        file: file.name.clone(),
        setting: setting.to_string(),
        tokens: count,
        raw_bytes: file.raw_bytes,
        compressed_bytes: enc.payload.len() as u64,
        bits_per_token: ratio(bits, t),
        bits_per_character: ratio(bits, file.raw_bytes as f64),
        compression_ratio: ratio(enc.payload.len() as f64, file.raw_bytes as f64),
        helper_overhead_bits_per_token: ratio(enc.stats.helper_cost_bits, t),
        helper_one_fraction: ratio(enc.stats.helper_ones as f64, enc.stats.token_bits as f64),
        baseline_bits_per_token: ratio(base_bits, t),
        overhead_bits_per_token: ratio(bits - base_bits, t),
        decode_success,
        plain_mismatch_failed,
        mismatch_eps: eps,
        mismatch_seed: opts.mismatch_seed,
        codebook_seed: opts.codebook_seed,
        predictor_id: opts.predictor_id.clone(),
    })
}

/// Fold per-file rows of one setting into a total row.
fn aggregate(rows: &[BenchReport], setting: &str) -> Option<BenchReport> {
    let rows: Vec<&BenchReport> = rows.iter().filter(|r| r.setting == setting).collect();
    let first = rows.first()?;
    let tokens: u64 = rows.iter().map(|r| r.tokens).sum();
    let raw: u64 = rows.iter().map(|r| r.raw_bytes).sum();
    let bytes: u64 = rows.iter().map(|r| r.compressed_bytes).sum();
    let weighted = |f: fn(&BenchReport) -> f64| ratio(rows.iter().map(|r| f(r) * r.tokens as f64).sum(), tokens as f64);
    let helper_ones: f64 = rows.iter().map(|r| r.helper_one_fraction * r.tokens as f64).sum();
    let t = tokens as f64;
    Some(BenchReport {
        file: format!("total ({} files)", rows.len()),
        setting: setting.to_string(),
        tokens,
        raw_bytes: raw,
        compressed_bytes: bytes,
        bits_per_token: ratio(bytes as f64 * 8.0, t),
        bits_per_character: ratio(bytes as f64 * 8.0, raw as f64),
        compression_ratio: ratio(bytes as f64, raw as f64),
        helper_overhead_bits_per_token: weighted(|r| r.helper_overhead_bits_per_token),
        helper_one_fraction: ratio(helper_ones, t),
        baseline_bits_per_token: weighted(|r| r.baseline_bits_per_token),
        overhead_bits_per_token: weighted(|r| r.overhead_bits_per_token),
        decode_success: rows.iter().all(|r| r.decode_success),
        plain_mismatch_failed: rows.iter().all(|r| r.plain_mismatch_failed),
        ..(*first).clone()
    })
}

pub fn run(files: &[BenchFile], settings: &[(String, PmaticParams)], opts: &BenchOptions) -> Result<BenchSummary, Error> {
    let codebook = Codebook::build(opts.alphabet_size, opts.codebook_seed)?;
    let mut rows = Vec::new();
    for (name, params) in settings {
        for file in files {
            rows.push(bench_one(file, name, *params, &codebook, opts)?);
        }
    }
    let aggregate = settings.iter().filter_map(|(name, _)| aggregate(&rows, name)).collect();
    Ok(BenchSummary { rows, aggregate })
}
