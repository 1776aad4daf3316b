//! Tokenization audit toolkit for numeric and temporal text.
//!
//! * [`bpe`]: byte-level BPE (GPT-2 file formats, training, encode/decode with spans)
//! * [`pretokenize`]: pre-token splitting patterns
//! * [`audit`]: detectors for numeric tokenization pitfalls and alignment metrics
//! * [`ingest`]: WISDM-style accelerometer rows, preprocessing, serialization
//! * [`numtok`]: a digit-level tokenizer with consistent numeric segmentation
//! * [`reference`]: the bundled r50k vocabulary

pub mod audit;
pub mod bpe;
pub mod encoding;
pub mod ingest;
pub mod numtok;
pub mod pretokenize;
pub mod reference;
pub mod span;

pub use encoding::{DecodeError, EncodeError, Encoding, Token, TokenId, Tokenize};
pub use span::Span;

pub use ingest::SerializedBatch;

/// Accelerometer row with `f64` readings.
pub type SensorRow = ingest::SensorRow<f64>;
/// Accelerometer row with `f32` readings.
pub type SensorRow32 = ingest::SensorRow<f32>;

