//! Byte-level (and char-level) byte-pair encoding.

pub mod byte_map;
mod merges;
mod tokenizer;
mod train;
mod vocab;

pub use merges::{load_merges, MergeTable};
pub use tokenizer::{BpeTokenizer, Mode, TokenizerConfig, Utf8Policy};
pub use train::{train_bpe, TrainConfig, TrainError};
pub use vocab::{load_vocab, Vocab};

pub use crate::encoding::TokenId;

/// Errors from loading or assembling a vocabulary and merge table.
#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("malformed vocab JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate token {0:?} in vocab")]
    DuplicateToken(String),
    #[error("duplicate id {id} in vocab ({first:?} and {second:?})")]
    DuplicateId {
        id: TokenId,
        first: String,
        second: String,
    },
    #[error("merges line {line}: expected 2 space-separated symbols, found {fields}")]
    MergeLine { line: usize, fields: usize },
    #[error("merges line {line}: duplicate pair ({left:?}, {right:?})")]
    DuplicateMerge {
        line: usize,
        left: String,
        right: String,
    },
    #[error("merge rank {rank} refers to symbol {symbol:?}, which is not in the vocab")]
    MissingSymbol { rank: usize, symbol: String },
    #[error("byte-level vocab lacks the symbol for byte {0:#04x}")]
    MissingByte(u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
