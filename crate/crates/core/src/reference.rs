//! The bundled GPT-2 (r50k) vocabulary and merges.

use std::sync::{Arc, OnceLock};

use crate::bpe::{BpeTokenizer, MergeTable, TokenizerConfig, Vocab};

pub const R50K_VOCAB_JSON: &str = include_str!("../data/r50k/vocab.json");
pub const R50K_MERGES_TXT: &str = include_str!("../data/r50k/merges.txt");

/// Shared r50k tokenizer, parsed on first use.
pub fn r50k() -> Arc<BpeTokenizer> {
    static TOK: OnceLock<Arc<BpeTokenizer>> = OnceLock::new();
    TOK.get_or_init(|| {
        let vocab: Vocab = crate::bpe::load_vocab(R50K_VOCAB_JSON.as_bytes()).expect("bundled vocab parses");
        let merges: MergeTable =
            crate::bpe::load_merges(R50K_MERGES_TXT.as_bytes()).expect("bundled merges parse");
        let tok = BpeTokenizer::new(vocab, merges, TokenizerConfig::default()).expect("bundled files agree");
        Arc::new(tok.with_name("r50k"))
    })
    .clone()
}
