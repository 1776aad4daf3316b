use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::span::{self, Span};

pub type TokenId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub id: TokenId,
    pub span: Span,
}

/// Token IDs paired with the byte spans they cover in the source text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Encoding {
    tokens: Vec<Token>,
}

impl Encoding {
    pub fn new(tokens: Vec<Token>) -> Self {
        Self { tokens }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ids(&self) -> Vec<TokenId> {
        self.tokens.iter().map(|t| t.id).collect()
    }

    pub fn spans(&self) -> Vec<Span> {
        self.tokens.iter().map(|t| t.span).collect()
    }

    /// Every token start and end offset.
    pub fn boundaries(&self) -> BTreeSet<usize> {
        self.tokens
            .iter()
            .flat_map(|t| [t.span.start, t.span.end])
            .collect()
    }

    /// Tokens whose span overlaps `field`.
    pub fn covering(&self, field: Span) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(move |t| t.span.overlaps(&field))
    }

    /// True when spans are contiguous, ordered, and cover `[0, len)`.
    pub fn tiles(&self, len: usize) -> bool {
        span::tiles(self.tokens.iter().map(|t| t.span), len)
    }

    pub(crate) fn extend_shifted(&mut self, other: Encoding, offset: usize) {
        self.tokens.extend(other.tokens.into_iter().map(|t| Token {
            id: t.id,
            span: t.span.shift(offset),
        }));
    }

    pub(crate) fn push(&mut self, id: TokenId, span: Span) {
        self.tokens.push(Token { id, span });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("symbol {0:?} is not in the vocabulary")]
    UnknownSymbol(String),
    #[error("input is not valid UTF-8 (offset {offset})")]
    InvalidUtf8 { offset: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("token id {0} is not in the vocabulary")]
    UnknownId(TokenId),
    #[error("token {token:?} (id {id}) contains characters outside the byte alphabet")]
    NotByteSymbol { id: TokenId, token: String },
    #[error("decoded bytes are not valid UTF-8 (offset {offset})")]
    InvalidUtf8 { offset: usize },
}

/// Shared surface of every tokenizer the audit can drive.
///
/// Implementations are immutable after construction and safe to share across
/// threads.
pub trait Tokenize: Send + Sync {
    /// Short label used in reports.
    fn name(&self) -> &str;

    fn encode(&self, text: &str) -> Result<Encoding, EncodeError>;

    /// One past the largest token ID this tokenizer can emit.
    fn id_bound(&self) -> TokenId;

    fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>, DecodeError>;

    fn decode(&self, ids: &[TokenId]) -> Result<String, DecodeError> {
        let bytes = self.decode_bytes(ids)?;
        String::from_utf8(bytes).map_err(|e| DecodeError::InvalidUtf8 {
            offset: e.utf8_error().valid_up_to(),
        })
    }
}

impl<T: Tokenize + ?Sized> Tokenize for &T {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn encode(&self, text: &str) -> Result<Encoding, EncodeError> {
        (**self).encode(text)
    }
    fn id_bound(&self) -> TokenId {
        (**self).id_bound()
    }
    fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>, DecodeError> {
        (**self).decode_bytes(ids)
    }
    fn decode(&self, ids: &[TokenId]) -> Result<String, DecodeError> {
        (**self).decode(ids)
    }
}

impl<T: Tokenize + ?Sized> Tokenize for std::sync::Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn encode(&self, text: &str) -> Result<Encoding, EncodeError> {
        (**self).encode(text)
    }
    fn id_bound(&self) -> TokenId {
        (**self).id_bound()
    }
    fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>, DecodeError> {
        (**self).decode_bytes(ids)
    }
    fn decode(&self, ids: &[TokenId]) -> Result<String, DecodeError> {
        (**self).decode(ids)
    }
}
