use std::collections::HashMap;
use std::fmt;
use std::io::{Read, Write};

use serde::de::{Deserializer, MapAccess, Visitor};

use super::{LoadError, TokenId};

/// Bidirectional token-string ↔ ID mapping.
///
/// Loaded vocabularies keep file IDs verbatim, so the ID space may be sparse.
/// Trained vocabularies are dense in `[0, len)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    by_token: HashMap<String, TokenId>,
    by_id: HashMap<TokenId, String>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from `(token, id)` pairs, rejecting duplicate tokens or IDs.
    pub fn from_entries<I, S>(entries: I) -> Result<Self, LoadError>
    where
        I: IntoIterator<Item = (S, TokenId)>,
        S: Into<String>,
    {
        let mut vocab = Self::new();
        for (token, id) in entries {
            vocab.insert(token.into(), id)?;
        }
        Ok(vocab)
    }

    pub(crate) fn insert(&mut self, token: String, id: TokenId) -> Result<(), LoadError> {
        if self.by_token.contains_key(&token) {
            return Err(LoadError::DuplicateToken(token));
        }
        if let Some(existing) = self.by_id.get(&id) {
            return Err(LoadError::DuplicateId {
                id,
                first: existing.clone(),
                second: token,
            });
        }
        self.by_id.insert(id, token.clone());
        self.by_token.insert(token, id);
        Ok(())
    }

    /// Append a token with the next dense ID.
    pub(crate) fn push(&mut self, token: String) -> TokenId {
        let id = self.len() as TokenId;
        self.by_id.insert(id, token.clone());
        self.by_token.insert(token, id);
        id
    }

    pub fn len(&self) -> usize {
        self.by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_token.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.by_token.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.by_id.get(&id).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.by_token.contains_key(token)
    }

    pub fn max_id(&self) -> Option<TokenId> {
        self.by_id.keys().copied().max()
    }

    /// Entries sorted by ID.
    pub fn entries(&self) -> Vec<(&str, TokenId)> {
        let mut entries: Vec<_> = self
            .by_token
            .iter()
            .map(|(t, &id)| (t.as_str(), id))
            .collect();
        entries.sort_by_key(|&(_, id)| id);
        entries
    }

    /// Write as a `vocab.json` object, entries in ID order.
    pub fn write_json<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"{")?;
        for (i, (token, id)) in self.entries().into_iter().enumerate() {
            if i > 0 {
                out.write_all(b",")?;
            }
            serde_json::to_writer(&mut out, token)?;
            write!(out, ":{id}")?;
        }
        out.write_all(b"}")
    }
}

/// Parse a `vocab.json` object (token string → integer ID).
pub fn load_vocab<R: Read>(mut source: R) -> Result<Vocab, LoadError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    parse_vocab(&text)
}

pub(crate) fn parse_vocab(text: &str) -> Result<Vocab, LoadError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let result = de
        .deserialize_map(VocabVisitor)
        .and_then(|vocab| de.end().map(|()| vocab));
    match result {
        Ok(Ok(vocab)) => Ok(vocab),
        Ok(Err(integrity)) => Err(integrity),
        Err(e) => Err(LoadError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }),
    }
}

// Maps would silently drop duplicate keys, so entries are inserted one at a
// time and integrity failures are carried out of the visitor separately.
struct VocabVisitor;

impl<'de> Visitor<'de> for VocabVisitor {
    type Value = Result<Vocab, LoadError>;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a JSON object mapping token strings to non-negative integer IDs")
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
        let mut vocab = Vocab::new();
        let mut failure = None;
        while let Some((token, id)) = map.next_entry::<String, TokenId>()? {
            if failure.is_none() {
                if let Err(e) = vocab.insert(token, id) {
                    failure = Some(e);
                }
            }
        }
        Ok(match failure {
            Some(e) => Err(e),
            None => Ok(vocab),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_small_vocab_with_ids_preserved() {
        let vocab = load_vocab(r#"{"!": 0, ",": 11, ".": 13}"#.as_bytes()).unwrap();
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.id(","), Some(11));
        assert_eq!(vocab.id("."), Some(13));
        assert_eq!(vocab.token(0), Some("!"));
        assert_eq!(vocab.max_id(), Some(13));
    }

    #[test]
    fn empty_object_is_empty_vocab() {
        let vocab = load_vocab("{}".as_bytes()).unwrap();
        assert!(vocab.is_empty());
    }

    #[test]
    fn duplicate_token_is_integrity_error() {
        let err = load_vocab(r#"{"a": 0, "a": 1}"#.as_bytes()).unwrap_err();
        assert!(matches!(err, LoadError::DuplicateToken(t) if t == "a"));
    }

    #[test]
    fn duplicate_id_is_integrity_error() {
        let err = load_vocab(r#"{"a": 0, "b": 0}"#.as_bytes()).unwrap_err();
        assert!(matches!(err, LoadError::DuplicateId { id: 0, .. }));
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = load_vocab("{\n\"a\": 0,\n\"b\": }".as_bytes()).unwrap_err();
        match err {
            LoadError::Json { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_vocab(r#"{"a": -1}"#.as_bytes()),
            Err(LoadError::Json { .. })
        ));
        assert!(matches!(
            load_vocab(r#"["a"]"#.as_bytes()),
            Err(LoadError::Json { .. })
        ));
        assert!(matches!(
            load_vocab(r#"{"a": 0} x"#.as_bytes()),
            Err(LoadError::Json { .. })
        ));
    }

    #[test]
    fn json_writer_roundtrips() {
        let vocab = Vocab::from_entries([("a", 0), ("\"q\"", 1), ("Ġb", 2)]).unwrap();
        let mut buf = Vec::new();
        vocab.write_json(&mut buf).unwrap();
        assert_eq!(load_vocab(buf.as_slice()).unwrap(), vocab);
    }
}
