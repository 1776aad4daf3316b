use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use tokaudit::audit::TokenizerInfo;
use tokaudit::bpe::BpeTokenizer;
use tokaudit::numtok::{Fallback, NumericPolicy, NumericTokenizer};
use tokaudit::reference::r50k;
use tokaudit::Tokenize;

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum FallbackArg {
    DelegateToBase,
    PerByte,
}

/// Base BPE files (bundled r50k when omitted) and the digit-level wrapper.
#[derive(Args, Debug)]
pub struct TokenizerArgs {
    /// GPT-2 style vocab.json.
    #[arg(long, requires = "merges")]
    pub vocab: Option<PathBuf>,
    /// GPT-2 style merges.txt.
    #[arg(long, requires = "vocab")]
    pub merges: Option<PathBuf>,
    /// Wrap the tokenizer in the digit-level numeric tokenizer.
    #[arg(long)]
    pub numtok: bool,
    /// How the numeric tokenizer handles non-numeric text.
    #[arg(long, value_enum, default_value_t = FallbackArg::DelegateToBase, requires = "numtok")]
    pub numtok_fallback: FallbackArg,
}

/// Second tokenizer for `compare`.
#[derive(Args, Debug)]
pub struct OtherTokenizerArgs {
    /// vocab.json of the second tokenizer (bundled r50k when omitted).
    #[arg(long, requires = "other_merges")]
    pub other_vocab: Option<PathBuf>,
    #[arg(long, requires = "other_vocab")]
    pub other_merges: Option<PathBuf>,
    /// Wrap the second tokenizer in the digit-level numeric tokenizer.
    #[arg(long)]
    pub other_numtok: bool,
}

pub struct Loaded {
    pub tok: Box<dyn Tokenize>,
    pub info: TokenizerInfo,
}

fn base(vocab: &Option<PathBuf>, merges: &Option<PathBuf>) -> Result<Arc<BpeTokenizer>> {
    match (vocab, merges) {
        (Some(v), Some(m)) => {
            let name = v
                .parent()
                .and_then(|p| p.file_name())
                .map_or("bpe".to_owned(), |n| n.to_string_lossy().into_owned());
            let tok = BpeTokenizer::from_files(v, m)
                .with_context(|| format!("loading {} and {}", v.display(), m.display()))?;
            Ok(Arc::new(tok.with_name(name)))
        }
        _ => Ok(r50k()),
    }
}

fn wrap(base: Arc<BpeTokenizer>, numtok: bool, fallback: Fallback) -> Result<Loaded> {
    if !numtok {
        let info = TokenizerInfo::of(&*base);
        return Ok(Loaded {
            tok: Box::new(base),
            info,
        });
    }
    let policy = NumericPolicy::above(&base, fallback);
    let tok = NumericTokenizer::with_policy(base, policy)?;
    let info = TokenizerInfo::of(&tok).with_reserved(tok.policy().reserved_range());
    Ok(Loaded {
        tok: Box::new(tok),
        info,
    })
}

impl TokenizerArgs {
    pub fn load(&self) -> Result<Loaded> {
        let fallback = match self.numtok_fallback {
            FallbackArg::DelegateToBase => Fallback::DelegateToBase,
            FallbackArg::PerByte => Fallback::PerByte,
        };
        wrap(base(&self.vocab, &self.merges)?, self.numtok, fallback)
    }
}

impl OtherTokenizerArgs {
    pub fn load(&self) -> Result<Loaded> {
        wrap(
            base(&self.other_vocab, &self.other_merges)?,
            self.other_numtok,
            Fallback::DelegateToBase,
        )
    }
}
