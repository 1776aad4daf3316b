//! Merge training.
//!
//! Pairs are counted inside pre-tokens only. Each step merges the most
//! frequent pair; ties go to the lexicographically smallest `(left, right)`
//! pair of symbol strings. Training stops once the vocabulary reaches the
//! target size or no pair occurs at least twice.
//!
//! A symbol string reachable through two different pairs is interned once, so
//! an already-merged pair can reappear; it is applied again but recorded in
//! the merge table only the first time.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{byte_map, MergeTable, Mode, Vocab};
use crate::pretokenize::{self, Pattern};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TrainConfig {
    pub mode: Mode,
    pub pattern: Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("target vocab size {target} is below the corpus alphabet size {alphabet}")]
    TargetTooSmall { target: usize, alphabet: usize },
}

/// The 256 remapped byte symbols with IDs equal to their byte values.
pub(crate) fn byte_alphabet() -> Vocab {
    let mut vocab = Vocab::new();
    for b in 0..=255u8 {
        vocab.push(byte_map::byte_to_char(b).to_string());
    }
    vocab
}

type Sym = u32;

struct Symbols {
    strings: Vec<String>,
    ids: HashMap<String, Sym>,
}

impl Symbols {
    fn intern(&mut self, s: String) -> Sym {
        if let Some(&id) = self.ids.get(&s) {
            return id;
        }
        let id = self.strings.len() as Sym;
        self.ids.insert(s.clone(), id);
        self.strings.push(s);
        id
    }
}

/// Heap entry: highest count first, then smallest pair of strings.
type Candidate = (u64, Reverse<(String, String)>, (Sym, Sym));

/// Learn merges from `corpus` until the vocab holds `target_vocab_size` entries.
///
/// Byte-level vocabularies start from all 256 byte symbols (IDs 0..256);
/// char-level ones from the corpus's distinct characters in code point order.
pub fn train_bpe<S: AsRef<str>>(
    corpus: &[S],
    target_vocab_size: usize,
    config: TrainConfig,
) -> Result<(Vocab, MergeTable), TrainError> {
    if corpus.iter().all(|t| t.as_ref().is_empty()) {
        return Err(TrainError::EmptyCorpus);
    }

    let mut words: HashMap<Vec<String>, u64> = HashMap::new();
    for text in corpus {
        let text = text.as_ref();
        for pre in pretokenize::pretokenize(text, config.pattern) {
            let piece = &text[pre.span.range()];
            let symbols = match config.mode {
                Mode::ByteLevel => piece
                    .bytes()
                    .map(|b| byte_map::byte_to_char(b).to_string())
                    .collect(),
                Mode::CharLevel => piece.chars().map(String::from).collect(),
            };
            *words.entry(symbols).or_default() += 1;
        }
    }

    let mut vocab = match config.mode {
        Mode::ByteLevel => byte_alphabet(),
        Mode::CharLevel => {
            let chars: BTreeSet<char> = corpus.iter().flat_map(|t| t.as_ref().chars()).collect();
            let mut v = Vocab::new();
            for c in chars {
                v.push(c.to_string());
            }
            v
        }
    };
    if target_vocab_size < vocab.len() {
        return Err(TrainError::TargetTooSmall {
            target: target_vocab_size,
            alphabet: vocab.len(),
        });
    }

    let mut symbols = Symbols {
        strings: Vec::new(),
        ids: HashMap::new(),
    };
    // Sort so symbol interning, and therefore everything after, is independent
    // of hash order.
    let mut word_list: Vec<(Vec<String>, u64)> = words.into_iter().collect();
    word_list.sort();
    let mut words: Vec<(Vec<Sym>, u64)> = word_list
        .into_iter()
        .map(|(w, n)| (w.into_iter().map(|s| symbols.intern(s)).collect(), n))
        .collect();

    let mut counts: HashMap<(Sym, Sym), u64> = HashMap::new();
    let mut where_: HashMap<(Sym, Sym), HashSet<usize>> = HashMap::new();
    for (idx, (word, n)) in words.iter().enumerate() {
        for w in word.windows(2) {
            let pair = (w[0], w[1]);
            *counts.entry(pair).or_default() += n;
            where_.entry(pair).or_default().insert(idx);
        }
    }

    let key = |symbols: &Symbols, pair: (Sym, Sym)| {
        Reverse((
            symbols.strings[pair.0 as usize].clone(),
            symbols.strings[pair.1 as usize].clone(),
        ))
    };
    let mut heap: BinaryHeap<Candidate> = counts
        .iter()
        .map(|(&pair, &n)| (n, key(&symbols, pair), pair))
        .collect();

    let mut merges = Vec::new();
    let mut recorded = HashSet::new();
    while vocab.len() < target_vocab_size {
        let Some((n, _, pair)) = heap.pop() else {
            break;
        };
        if counts.get(&pair).copied() != Some(n) {
            continue; // stale entry
        }
        if n < 2 {
            break;
        }
        let (left, right) = (
            symbols.strings[pair.0 as usize].clone(),
            symbols.strings[pair.1 as usize].clone(),
        );
        let merged_str = format!("{left}{right}");
        if !vocab.contains(&merged_str) {
            vocab.push(merged_str.clone());
        }
        let merged = symbols.intern(merged_str);
        if recorded.insert(pair) {
            merges.push((left, right));
        }

        let mut affected: Vec<usize> = where_.remove(&pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        let mut touched = HashSet::new();
        for idx in affected {
            let (word, n) = &mut words[idx];
            if !word.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            for w in word.windows(2) {
                let p = (w[0], w[1]);
                let c = counts.get_mut(&p).expect("counted pair");
                *c -= *n;
                touched.insert(p);
            }
            let mut next = Vec::with_capacity(word.len());
            let mut i = 0;
            while i < word.len() {
                if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
                    next.push(merged);
                    i += 2;
                } else {
                    next.push(word[i]);
                    i += 1;
                }
            }
            *word = next;
            for w in word.windows(2) {
                let p = (w[0], w[1]);
                *counts.entry(p).or_default() += *n;
                where_.entry(p).or_default().insert(idx);
                touched.insert(p);
            }
        }
        for p in touched {
            match counts.get(&p).copied() {
                Some(0) => {
                    counts.remove(&p);
                }
                Some(c) => heap.push((c, key(&symbols, p), p)),
                None => {}
            }
        }
    }

    let table = MergeTable::from_pairs(merges).expect("pairs are recorded once");
    Ok((vocab, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn char_cfg() -> TrainConfig {
        TrainConfig {
            mode: Mode::CharLevel,
            pattern: Pattern::Whitespace,
        }
    }

    #[test]
    fn single_pair_corpus() {
        let (vocab, merges) = train_bpe(&["aaaa"], 2, char_cfg()).unwrap();
        assert_eq!(merges.iter().collect::<Vec<_>>(), [("a", "a")]);
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.id("aa"), Some(1));

        let (_, merges) = train_bpe(&["aaaa"], 257, TrainConfig::default()).unwrap();
        assert_eq!(merges.iter().collect::<Vec<_>>(), [("a", "a")]);
    }

    #[test]
    fn stops_when_no_pair_repeats() {
        let (vocab, merges) = train_bpe(&["abc"], 100, char_cfg()).unwrap();
        assert!(merges.is_empty());
        assert_eq!(vocab.len(), 3);
    }

    #[test]
    fn ties_break_lexicographically() {
        // "ab" and "cd" both occur twice.
        let (_, merges) = train_bpe(&["cd ab cd ab"], 7, char_cfg()).unwrap();
        assert_eq!(merges.get(0), Some(("a", "b")));
        assert_eq!(merges.get(1), Some(("c", "d")));
    }

    #[test]
    fn no_merges_across_pretokens() {
        // "b a" would be frequent if spaces were ignored.
        let (_, merges) = train_bpe(&["ab ab ab"], 10, char_cfg()).unwrap();
        assert_eq!(merges.iter().collect::<Vec<_>>(), [("a", "b")]);
    }

    #[test]
    fn errors() {
        assert_eq!(
            train_bpe::<&str>(&[], 10, char_cfg()).unwrap_err(),
            TrainError::EmptyCorpus
        );
        assert_eq!(train_bpe(&[""], 10, char_cfg()).unwrap_err(), TrainError::EmptyCorpus);
        assert_eq!(
            train_bpe(&["abc"], 2, char_cfg()).unwrap_err(),
            TrainError::TargetTooSmall {
                target: 2,
                alphabet: 3
            }
        );
        assert!(matches!(
            train_bpe(&["abc"], 255, TrainConfig::default()),
            Err(TrainError::TargetTooSmall { alphabet: 256, .. })
        ));
    }

    #[test]
    fn trained_vocab_is_dense() {
        let (vocab, _) = train_bpe(&["low lower lowest newer wider"], 300, TrainConfig::default()).unwrap();
        let ids: Vec<_> = vocab.entries().into_iter().map(|(_, id)| id as usize).collect();
        assert_eq!(ids, (0..vocab.len()).collect::<Vec<_>>());
    }
}
