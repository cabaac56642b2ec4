//! Mismatch-tolerant arithmetic coding.
//!
//! An encoder and a decoder that run "the same" model rarely compute
//! bit-identical probabilities across machines. Plain arithmetic coding
//! falls apart on the first disagreement. This crate snaps every next-bit
//! probability to a coarse grid and sends a cheap helper bit that tells the
//! decoder how to snap its own estimate, so both sides feed the coder the
//! same rational as long as their estimates are within `delta`.
//!
//! ```
//! use pmatic::{compress, decompress_builtin, CompressOptions, NGramModel, Setting};
//!
//! let tokens: Vec<u32> = b"abracadabra abracadabra".iter().map(|&b| b as u32).collect();
//! let opts = CompressOptions::new(Setting::One.params());
//! let packed = compress(&tokens, 256, &opts, NGramModel::with_defaults(256)).unwrap();
//! assert_eq!(decompress_builtin(&packed.bytes).unwrap(), tokens);
//! ```

pub mod analysis;
pub mod bench;
pub mod codebook;
pub mod codec;
pub mod container;
pub mod corpus;
pub mod params;
pub mod predictor;
pub mod probmodel;
pub mod quantize;
pub mod rangecoder;
pub mod rational;
pub mod verify;

use thiserror::Error;

pub use analysis::{binary_entropy, binary_kl, loss_bounds, optimal_r, AnalysisError, LossBounds, OptimalRadius};
pub use codebook::{BitPrefix, Codebook, CodebookError};
pub use codec::{
    decode_stream, encode_stream, CodingMode, ContextPolicy, EncodeStats, EncodedStream, StreamConfig,
};
pub use container::{compress, decompress, decompress_builtin, CompressOptions, Compressed, ContainerHeader};
pub use params::{ParamsError, PmaticParams, Setting};
pub use predictor::{
    BridgeClient, MismatchMode, MismatchWrapper, NGramModel, Predictor, PredictorError, UniformPredictor,
};
pub use probmodel::{softmax, LogitVector, ProbError, ProbVector};
pub use quantize::{classify_encoder, quantize_decoder, QuantPoint, Quantization, QuantizeError};
pub use rangecoder::{BinaryProb, CoderError};
pub use rational::{Rational, RationalError};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Coder(#[from] CoderError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Predictor(#[from] PredictorError),
    #[error("token {token} is outside the alphabet of size {alphabet_size}")]
    TokenOutOfRange { token: u32, alphabet_size: u32 },
    #[error("context keep {keep} exceeds the window {max_window}")]
    InvalidContextPolicy { max_window: u16, keep: u16 },
    #[error("not a PMTC container (magic {0:02x?})")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),
    #[error("container header is truncated")]
    TruncatedHeader,
    #[error("malformed container header: {0}")]
    MalformedHeader(String),
    #[error("header declares a {declared}-byte payload but {actual} bytes follow")]
    PayloadLength { declared: u64, actual: u64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether the error means the payload did not decode, as opposed to bad
    /// input or configuration.
    pub fn is_decode_failure(&self) -> bool {
        matches!(
            self,
            Error::Coder(CoderError::InputExhausted { .. })
                | Error::Codebook(CodebookError::UnknownCodeword(_))
                | Error::PayloadLength { .. }
        )
    }

    pub fn is_bridge_failure(&self) -> bool {
        matches!(
            self,
            Error::Predictor(
                PredictorError::BridgeTimeout(_)
                    | PredictorError::ProtocolError(_)
                    | PredictorError::Io(_)
                    | PredictorError::WrongDimension { .. }
            )
        )
    }
}
