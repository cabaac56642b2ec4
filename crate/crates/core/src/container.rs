//! Self-describing container: a fixed little-endian header followed by the
//! range-coder payload.
//!
//! ```text
//! magic            4   "PMTC"
//! version          1   1
//! alphabet_size    4   u32
//! codebook_seed    8   u64
//! delta            16  i64 numerator, u64 denominator
//! m                4   u32 bin count (r = 1/(2m) is not stored)
//! predictor_id     2+n u16 length, UTF-8 bytes
//! context_max      2   u16
//! context_keep     2   u16
//! token_count      8   u64
//! payload_length   8   u64
//! payload          payload_length bytes
//! ```

use serde::Serialize;

use crate::codebook::Codebook;
use crate::codec::{decode_stream, encode_stream, ContextPolicy, EncodeStats, StreamConfig};
use crate::params::PmaticParams;
use crate::predictor::{self, Predictor};
use crate::rational::Rational;
use crate::Error;

pub const MAGIC: [u8; 4] = *b"PMTC";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContainerHeader {
    pub alphabet_size: u32,
    pub codebook_seed: u64,
    pub delta: Rational,
    pub bins: u32,
    pub predictor_id: String,
    pub context: ContextPolicy,
    pub token_count: u64,
    pub payload_length: u64,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], Error> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or(Error::TruncatedHeader)?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], Error> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u16(&mut self) -> Result<u16, Error> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, Error> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> Result<u64, Error> {
        Ok(u64::from_le_bytes(self.array()?))
    }
}

impl ContainerHeader {
    /// Parameters rebuilt from `(delta, m)`, validated the same way as on
    /// the encoding side.
    pub fn params(&self) -> Result<PmaticParams, Error> {
        Ok(PmaticParams::from_delta_and_bins(self.delta, self.bins)?)
    }

    pub fn write_to(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&self.alphabet_size.to_le_bytes());
        out.extend_from_slice(&self.codebook_seed.to_le_bytes());
        out.extend_from_slice(&self.delta.numer().to_le_bytes());
        out.extend_from_slice(&self.delta.denom().to_le_bytes());
        out.extend_from_slice(&self.bins.to_le_bytes());
        let id = self.predictor_id.as_bytes();
        let len = u16::try_from(id.len()).expect("predictor id checked at construction");
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(id);
        out.extend_from_slice(&self.context.max_window.to_le_bytes());
        out.extend_from_slice(&self.context.keep.to_le_bytes());
        out.extend_from_slice(&self.token_count.to_le_bytes());
        out.extend_from_slice(&self.payload_length.to_le_bytes());
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out);
        out
    }

    /// Parse a header, returning it with the number of bytes it occupied.
    /// Parameters are validated before anything else is trusted.
    pub fn parse(bytes: &[u8]) -> Result<(Self, usize), Error> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.array::<4>()?;
        if magic != MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let version = r.array::<1>()?[0];
        if version != VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let alphabet_size = r.u32()?;
        let codebook_seed = r.u64()?;
        let num = i64::from_le_bytes(r.array()?);
        let den = r.u64()?;
        let delta = Rational::new(num, den).map_err(crate::params::ParamsError::from)?;
        let bins = r.u32()?;
        let id_len = r.u16()? as usize;
        let predictor_id = std::str::from_utf8(r.take(id_len)?)
            .map_err(|_| Error::MalformedHeader("predictor id is not UTF-8".into()))?
            .to_string();
        let context = ContextPolicy::new(r.u16()?, r.u16()?)?;
        let header = ContainerHeader {
            alphabet_size,
            codebook_seed,
            delta,
            bins,
            predictor_id,
            context,
            token_count: r.u64()?,
            payload_length: r.u64()?,
        };
        header.params()?;
        Ok((header, r.pos))
    }
}

/// Settings fixed at compression time and echoed into the header.
#[derive(Debug, Clone, Copy)]
pub struct CompressOptions {
    pub params: PmaticParams,
    pub codebook_seed: u64,
    pub context: ContextPolicy,
}

impl CompressOptions {
    pub fn new(params: PmaticParams) -> Self {
        CompressOptions { params, codebook_seed: 0, context: ContextPolicy::DEFAULT }
    }

    fn stream_config(&self) -> StreamConfig {
        StreamConfig::new(self.params).with_context(self.context)
    }
}

#[derive(Debug, Clone)]
pub struct Compressed {
    pub bytes: Vec<u8>,
    pub header: ContainerHeader,
    pub stats: EncodeStats,
}

pub fn compress<P: Predictor>(
    tokens: &[u32],
    alphabet_size: u32,
    options: &CompressOptions,
    predictor: P,
) -> Result<Compressed, Error> {
    let predictor_id = predictor.id();
    if predictor_id.len() > u16::MAX as usize {
        return Err(Error::MalformedHeader("predictor id longer than 65535 bytes".into()));
    }
    let codebook = Codebook::build(alphabet_size, options.codebook_seed)?;
    let encoded = encode_stream(tokens, &codebook, &options.stream_config(), predictor)?;
    let header = ContainerHeader {
        alphabet_size,
        codebook_seed: options.codebook_seed,
        delta: options.params.delta(),
        bins: options.params.bins(),
        predictor_id,
        context: options.context,
        token_count: tokens.len() as u64,
        payload_length: encoded.payload.len() as u64,
    };
    let mut bytes = Vec::with_capacity(64 + encoded.payload.len());
    header.write_to(&mut bytes);
    bytes.extend_from_slice(&encoded.payload);
    Ok(Compressed { bytes, header, stats: encoded.stats })
}

/// Split a container into its header and payload.
pub fn open(bytes: &[u8]) -> Result<(ContainerHeader, &[u8]), Error> {
    let (header, used) = ContainerHeader::parse(bytes)?;
    let payload = &bytes[used..];
    if payload.len() as u64 != header.payload_length {
        return Err(Error::PayloadLength { declared: header.payload_length, actual: payload.len() as u64 });
    }
    Ok((header, payload))
}

/// Decode with a caller-supplied predictor, which must match the header's
/// vocabulary. Use this for external predictors and mismatch experiments.
pub fn decompress<P: Predictor>(bytes: &[u8], predictor: P) -> Result<Vec<u32>, Error> {
    let (header, payload) = open(bytes)?;
    let params = header.params()?;
    let codebook = Codebook::build(header.alphabet_size, header.codebook_seed)?;
    let config = StreamConfig::new(params).with_context(header.context);
    decode_stream(payload, header.token_count, &codebook, &config, predictor)
}

/// Decode with the built-in predictor named in the header.
pub fn decompress_builtin(bytes: &[u8]) -> Result<Vec<u32>, Error> {
    let (header, _) = open(bytes)?;
    let predictor = predictor::from_id(&header.predictor_id, header.alphabet_size as usize)?;
    decompress(bytes, predictor)
}
