#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use tokaudit::bpe::{byte_map, Mode};
use tokaudit::pretokenize::{pretokenize, Pattern};

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn r50k_paths() -> (PathBuf, PathBuf) {
    let dir = data_dir().join("r50k");
    (dir.join("vocab.json"), dir.join("merges.txt"))
}

/// Naive trainer: every step recounts every adjacent pair from scratch.
///
/// Words are kept as lists of symbol strings; no IDs, no incremental counts.
pub fn brute_force_merges(
    corpus: &[String],
    target_vocab_size: usize,
    mode: Mode,
    pattern: Pattern,
) -> Vec<(String, String)> {
    let mut words: Vec<Vec<String>> = Vec::new();
    for text in corpus {
        for pre in pretokenize(text, pattern) {
            let piece = &text[pre.span.range()];
            words.push(match mode {
                Mode::ByteLevel => piece
                    .bytes()
                    .map(|b| byte_map::byte_to_char(b).to_string())
                    .collect(),
                Mode::CharLevel => piece.chars().map(String::from).collect(),
            });
        }
    }
    let mut vocab: std::collections::BTreeSet<String> = match mode {
        Mode::ByteLevel => (0..=255u8).map(|b| byte_map::byte_to_char(b).to_string()).collect(),
        Mode::CharLevel => corpus.iter().flat_map(|t| t.chars()).map(String::from).collect(),
    };
    let mut merges: Vec<(String, String)> = Vec::new();
    while vocab.len() < target_vocab_size {
        let mut counts: BTreeMap<(String, String), usize> = BTreeMap::new();
        for w in &words {
            for i in 0..w.len().saturating_sub(1) {
                *counts.entry((w[i].clone(), w[i + 1].clone())).or_default() += 1;
            }
        }
        // BTreeMap iterates in ascending pair order, so the first maximum is
        // the lexicographically smallest.
        let mut best: Option<(&(String, String), usize)> = None;
        for (pair, &n) in &counts {
            if best.is_none_or(|(_, b)| n > b) {
                best = Some((pair, n));
            }
        }
        let Some((pair, n)) = best else { break };
        if n < 2 {
            break;
        }
        let pair = pair.clone();
        let merged = format!("{}{}", pair.0, pair.1);
        for w in &mut words {
            let mut out = Vec::new();
            let mut i = 0;
            while i < w.len() {
                if i + 1 < w.len() && w[i] == pair.0 && w[i + 1] == pair.1 {
                    out.push(merged.clone());
                    i += 2;
                } else {
                    out.push(w[i].clone());
                    i += 1;
                }
            }
            *w = out;
        }
        vocab.insert(merged);
        if !merges.contains(&pair) {
            merges.push(pair);
        }
    }
    merges
}

/// Random corpus of short words over a small alphabet, so pairs repeat.
pub fn random_corpus(rng: &mut impl rand::Rng, words: usize) -> Vec<String> {
    const ALPHABET: &[u8] = b"aabbcdeeilnoprsty";
    let mut texts = Vec::new();
    let mut line = Vec::new();
    for _ in 0..words {
        let len = rng.gen_range(1..=7);
        let word: String = (0..len)
            .map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char)
            .collect();
        line.push(word);
        if line.len() >= rng.gen_range(1..=8) {
            texts.push(line.join(" "));
            line.clear();
        }
    }
    if !line.is_empty() {
        texts.push(line.join(" "));
    }
    texts
}
