use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::byte_map;
use super::{load_merges, load_vocab, LoadError, MergeTable, TokenId, Vocab};
use crate::encoding::{DecodeError, EncodeError, Encoding, Tokenize};
use crate::pretokenize::{self, Pattern};
use crate::span::Span;

/// Symbol alphabet the merges operate on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Input bytes are remapped to the 256-character printable alphabet.
    #[default]
    ByteLevel,
    /// Code points are used directly; unknown characters are errors.
    CharLevel,
}

/// What `decode` does when the recovered bytes are not valid UTF-8.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Utf8Policy {
    #[default]
    Error,
    /// Replace invalid sequences with U+FFFD.
    Lossy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub mode: Mode,
    pub pattern: Pattern,
    pub utf8: Utf8Policy,
}

#[derive(Debug, Clone, Copy)]
struct MergeRule {
    rank: u32,
    merged: TokenId,
}

/// An immutable BPE tokenizer: vocabulary, ranked merges, and pre-tokenizer.
pub struct BpeTokenizer {
    name: String,
    vocab: Vocab,
    merges: MergeTable,
    rules: HashMap<(TokenId, TokenId), MergeRule>,
    byte_ids: Option<Box<[TokenId; 256]>>,
    config: TokenizerConfig,
}

impl fmt::Debug for BpeTokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BpeTokenizer")
            .field("name", &self.name)
            .field("vocab", &self.vocab.len())
            .field("merges", &self.merges.len())
            .field("config", &self.config)
            .finish()
    }
}

impl BpeTokenizer {
    /// Assemble a tokenizer, checking that every merge operand and result is
    /// in the vocab (and, in byte-level mode, that all 256 byte symbols are).
    pub fn new(vocab: Vocab, merges: MergeTable, config: TokenizerConfig) -> Result<Self, LoadError> {
        let lookup = |rank: usize, symbol: &str| {
            vocab.id(symbol).ok_or_else(|| LoadError::MissingSymbol {
                rank,
                symbol: symbol.to_owned(),
            })
        };
        let mut rules = HashMap::with_capacity(merges.len());
        for (rank, (left, right)) in merges.iter().enumerate() {
            let l = lookup(rank, left)?;
            let r = lookup(rank, right)?;
            let merged = lookup(rank, &format!("{left}{right}"))?;
            rules.insert(
                (l, r),
                MergeRule {
                    rank: rank as u32,
                    merged,
                },
            );
        }
        let byte_ids = match config.mode {
            Mode::ByteLevel => {
                let mut ids = Box::new([0; 256]);
                for b in 0..=255u8 {
                    let mut buf = [0u8; 4];
                    let symbol = byte_map::byte_to_char(b).encode_utf8(&mut buf);
                    ids[b as usize] = vocab.id(symbol).ok_or(LoadError::MissingByte(b))?;
                }
                Some(ids)
            }
            Mode::CharLevel => None,
        };
        Ok(Self {
            name: "bpe".to_owned(),
            vocab,
            merges,
            rules,
            byte_ids,
            config,
        })
    }

    /// Load `vocab.json` + `merges.txt` from disk in the default
    /// configuration (byte-level, GPT-2 pattern).
    pub fn from_files(vocab: impl AsRef<Path>, merges: impl AsRef<Path>) -> Result<Self, LoadError> {
        let v = load_vocab(std::fs::File::open(vocab)?)?;
        let m = load_merges(std::fs::File::open(merges)?)?;
        Self::new(v, m, TokenizerConfig::default())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn merges(&self) -> &MergeTable {
        &self.merges
    }

    pub fn config(&self) -> TokenizerConfig {
        self.config
    }

    /// Token string as stored in the vocab (remapped alphabet in byte-level mode).
    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.vocab.token(id)
    }

    /// Encode arbitrary bytes. Byte-level mode never fails; char-level mode
    /// requires valid UTF-8 and known characters.
    pub fn encode_bytes(&self, bytes: &[u8]) -> Result<Encoding, EncodeError> {
        let mut out = Encoding::default();
        match &self.byte_ids {
            Some(byte_ids) => {
                for pre in pretokenize::pretokenize_lossless(bytes, self.config.pattern) {
                    let symbols = bytes[pre.span.range()]
                        .iter()
                        .map(|&b| (byte_ids[b as usize], 1))
                        .collect();
                    self.emit(symbols, pre.span.start, &mut out);
                }
            }
            None => {
                let text = std::str::from_utf8(bytes).map_err(|e| EncodeError::InvalidUtf8 {
                    offset: e.valid_up_to(),
                })?;
                for pre in pretokenize::pretokenize(text, self.config.pattern) {
                    let piece = &text[pre.span.range()];
                    let symbols = piece
                        .chars()
                        .map(|c| {
                            let mut buf = [0u8; 4];
                            let s = c.encode_utf8(&mut buf);
                            self.vocab
                                .id(s)
                                .map(|id| (id, c.len_utf8()))
                                .ok_or_else(|| EncodeError::UnknownSymbol(s.to_owned()))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    self.emit(symbols, pre.span.start, &mut out);
                }
            }
        }
        Ok(out)
    }

    /// Apply merges inside one pre-token: repeatedly take the lowest-ranked
    /// adjacent pair and merge every occurrence of it, left to right.
    fn emit(&self, mut symbols: Vec<(TokenId, usize)>, start: usize, out: &mut Encoding) {
        while symbols.len() > 1 {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.rules.get(&(w[0].0, w[1].0)).map(|r| (r.rank, (w[0].0, w[1].0))))
                .min_by_key(|&(rank, _)| rank);
            let Some((_, (left, right))) = best else {
                break;
            };
            let merged = self.rules[&(left, right)].merged;
            let mut next = Vec::with_capacity(symbols.len() - 1);
            let mut i = 0;
            while i < symbols.len() {
                if i + 1 < symbols.len() && symbols[i].0 == left && symbols[i + 1].0 == right {
                    next.push((merged, symbols[i].1 + symbols[i + 1].1));
                    i += 2;
                } else {
                    next.push(symbols[i]);
                    i += 1;
                }
            }
            symbols = next;
        }
        let mut pos = start;
        for (id, len) in symbols {
            out.push(id, Span::new(pos, pos + len));
            pos += len;
        }
    }

    fn token_bytes(&self, id: TokenId) -> Result<Vec<u8>, DecodeError> {
        let token = self.vocab.token(id).ok_or(DecodeError::UnknownId(id))?;
        match self.config.mode {
            Mode::ByteLevel => byte_map::decode_str(token).map_err(|_| DecodeError::NotByteSymbol {
                id,
                token: token.to_owned(),
            }),
            Mode::CharLevel => Ok(token.as_bytes().to_vec()),
        }
    }
}

impl Tokenize for BpeTokenizer {
    fn name(&self) -> &str {
        &self.name
    }

    fn encode(&self, text: &str) -> Result<Encoding, EncodeError> {
        self.encode_bytes(text.as_bytes())
    }

    fn id_bound(&self) -> TokenId {
        self.vocab.max_id().map_or(0, |m| m + 1)
    }

    fn decode_bytes(&self, ids: &[TokenId]) -> Result<Vec<u8>, DecodeError> {
        let mut out = Vec::new();
        for &id in ids {
            out.extend(self.token_bytes(id)?);
        }
        Ok(out)
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, DecodeError> {
        let bytes = self.decode_bytes(ids)?;
        match self.config.utf8 {
            Utf8Policy::Error => String::from_utf8(bytes).map_err(|e| DecodeError::InvalidUtf8 {
                offset: e.utf8_error().valid_up_to(),
            }),
            Utf8Policy::Lossy => Ok(String::from_utf8_lossy(&bytes).into_owned()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bpe::train::byte_alphabet;

    /// Byte alphabet plus merges spelling "play" and "ing".
    fn toy() -> BpeTokenizer {
        let mut vocab = byte_alphabet();
        let pairs = [("a", "y"), ("p", "l"), ("pl", "ay"), ("i", "n"), ("in", "g")];
        for (l, r) in pairs {
            vocab.push(format!("{l}{r}"));
        }
        let merges = MergeTable::from_pairs(pairs).unwrap();
        BpeTokenizer::new(vocab, merges, TokenizerConfig::default()).unwrap()
    }

    fn pieces(tok: &BpeTokenizer, text: &str) -> Vec<String> {
        tok.encode(text)
            .unwrap()
            .ids()
            .into_iter()
            .map(|id| tok.token(id).unwrap().to_owned())
            .collect()
    }

    #[test]
    fn merges_apply_by_rank() {
        let tok = toy();
        assert_eq!(pieces(&tok, "playing"), ["play", "ing"]);
        assert_eq!(pieces(&tok, "pay"), ["p", "ay"]);
    }

    #[test]
    fn spans_and_roundtrip() {
        let tok = toy();
        let enc = tok.encode("playing ay").unwrap();
        assert_eq!(
            enc.spans(),
            [Span::new(0, 4), Span::new(4, 7), Span::new(7, 8), Span::new(8, 10)]
        );
        assert!(enc.tiles(10));
        assert_eq!(tok.decode(&enc.ids()).unwrap(), "playing ay");
    }

    #[test]
    fn empty_input_and_ids() {
        let tok = toy();
        assert!(tok.encode("").unwrap().is_empty());
        assert_eq!(tok.decode(&[]).unwrap(), "");
    }

    #[test]
    fn unknown_id_is_named() {
        let tok = toy();
        assert_eq!(tok.decode(&[99_999]), Err(DecodeError::UnknownId(99_999)));
    }

    #[test]
    fn invalid_utf8_policy() {
        let tok = toy();
        let enc = tok.encode_bytes(b"a\xff").unwrap();
        assert_eq!(tok.decode_bytes(&enc.ids()).unwrap(), b"a\xff");
        assert!(matches!(tok.decode(&enc.ids()), Err(DecodeError::InvalidUtf8 { offset: 1 })));

        let lossy_cfg = TokenizerConfig {
            utf8: Utf8Policy::Lossy,
            ..Default::default()
        };
        let lossy = BpeTokenizer::new(tok.vocab().clone(), tok.merges().clone(), lossy_cfg).unwrap();
        assert_eq!(lossy.decode(&enc.ids()).unwrap(), "a\u{FFFD}");
    }

    #[test]
    fn missing_merge_symbol_is_integrity_error() {
        let vocab = Vocab::from_entries([("a", 0), ("b", 1)]).unwrap();
        let merges = MergeTable::from_pairs([("a", "b")]).unwrap();
        let cfg = TokenizerConfig {
            mode: Mode::CharLevel,
            ..Default::default()
        };
        let err = BpeTokenizer::new(vocab, merges, cfg).unwrap_err();
        assert!(matches!(err, LoadError::MissingSymbol { rank: 0, symbol } if symbol == "ab"));
    }

    #[test]
    fn byte_level_requires_full_alphabet() {
        let vocab = Vocab::from_entries([("a", 0)]).unwrap();
        let err = BpeTokenizer::new(vocab, MergeTable::new(), TokenizerConfig::default()).unwrap_err();
        assert!(matches!(err, LoadError::MissingByte(0)));
    }

    #[test]
    fn char_level_unknown_symbol() {
        let vocab = Vocab::from_entries([("a", 0), ("b", 1), ("ab", 2)]).unwrap();
        let merges = MergeTable::from_pairs([("a", "b")]).unwrap();
        let cfg = TokenizerConfig {
            mode: Mode::CharLevel,
            pattern: Pattern::Whitespace,
            ..Default::default()
        };
        let tok = BpeTokenizer::new(vocab, merges, cfg).unwrap();
        assert_eq!(tok.encode("ab").unwrap().ids(), [2]);
        assert_eq!(tok.encode("abc"), Err(EncodeError::UnknownSymbol("c".into())));
    }
}
