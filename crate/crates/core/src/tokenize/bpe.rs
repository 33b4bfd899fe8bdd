use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};

/// Continuation suffix: a subword carrying it is continued by the next token.
pub const MARKER: &str = "@@";

/// Ordered merge rules. Merges never cross word boundaries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    ranks: BTreeMap<(String, String), usize>,
}

impl BpeModel {
    pub fn from_merges(merges: Vec<(String, String)>) -> Result<Self> {
        let mut ranks = BTreeMap::new();
        for (i, pair) in merges.iter().enumerate() {
            if ranks.insert(pair.clone(), i).is_some() {
                bail!(Data, "duplicate merge rule {} {}", pair.0, pair.1);
            }
        }
        Ok(BpeModel { merges, ranks })
    }

    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.merges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    fn segment(&self, word: &str) -> Vec<String> {
        let mut symbols: Vec<String> = word.chars().map(String::from).collect();
        loop {
            let best = symbols
                .windows(2)
                .filter_map(|w| self.ranks.get(&(w[0].clone(), w[1].clone())))
                .min()
                .copied();
            let Some(rank) = best else { break };
            let (left, right) = &self.merges[rank];
            symbols = merge_pair(&symbols, left, right);
        }
        symbols
    }
}

fn merge_pair(symbols: &[String], left: &str, right: &str) -> Vec<String> {
    let mut out = Vec::with_capacity(symbols.len());
    let mut i = 0;
    while i < symbols.len() {
        if i + 1 < symbols.len() && symbols[i] == left && symbols[i + 1] == right {
            let mut merged = symbols[i].clone();
            merged.push_str(&symbols[i + 1]);
            out.push(merged);
            i += 2;
        } else {
            out.push(symbols[i].clone());
            i += 1;
        }
    }
    out
}

/// Greedy most-frequent-pair merging over word types; ties go to the
/// lexicographically smallest pair. Stops early when no pair remains.
pub fn learn_bpe<S: AsRef<str>>(corpus: &[Vec<S>], num_merges: usize) -> Result<BpeModel> {
    let mut word_counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for w in sentence {
            *word_counts.entry(w.as_ref()).or_default() += 1;
        }
    }
    if word_counts.is_empty() {
        bail!(Data, "cannot learn BPE from an empty corpus");
    }
    let mut words: Vec<(Vec<String>, u64)> = word_counts
        .into_iter()
        .map(|(w, c)| (w.chars().map(String::from).collect(), c))
        .collect();
    let mut merges = Vec::new();
    while merges.len() < num_merges {
        let mut pairs: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (symbols, count) in &words {
            for w in symbols.windows(2) {
                *pairs.entry((w[0].as_str(), w[1].as_str())).or_default() += count;
            }
        }
        // BTreeMap iterates in lexicographic order, so the first maximum wins ties.
        let mut best: Option<((&str, &str), u64)> = None;
        for (pair, count) in pairs {
            if best.is_none_or(|(_, c)| count > c) {
                best = Some((pair, count));
            }
        }
        let Some(((l, r), _)) = best else { break };
        let (l, r) = (String::from(l), String::from(r));
        for (symbols, _) in words.iter_mut() {
            if symbols.len() > 1 {
                *symbols = merge_pair(symbols, &l, &r);
            }
        }
        merges.push((l, r));
    }
    BpeModel::from_merges(merges)
}

/// Subwords of one word, all but the last suffixed with [`MARKER`].
pub fn apply_bpe_word(model: &BpeModel, word: &str) -> Vec<String> {
    let mut pieces = model.segment(word);
    let last = pieces.len().saturating_sub(1);
    for p in &mut pieces[..last] {
        p.push_str(MARKER);
    }
    pieces
}

pub fn apply_bpe<S: AsRef<str>>(model: &BpeModel, sentence: &[S]) -> Vec<String> {
    sentence
        .iter()
        .flat_map(|w| apply_bpe_word(model, w.as_ref()))
        .collect()
}

/// Result of [`remove_bpe`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unsegmented {
    pub words: Vec<String>,
    /// Number of subwords each word was built from.
    pub counts: Vec<usize>,
    /// Set when the final token carried a dangling continuation marker.
    pub dangling_marker: bool,
}

/// Joins every token ending in [`MARKER`] with its successor.
pub fn remove_bpe<S: AsRef<str>>(tokens: &[S]) -> Unsegmented {
    let mut words = Vec::new();
    let mut counts = Vec::new();
    let mut current = String::new();
    let mut pieces = 0;
    for tok in tokens {
        let tok = tok.as_ref();
        pieces += 1;
        match tok.strip_suffix(MARKER) {
            Some(stem) => current.push_str(stem),
            None => {
                current.push_str(tok);
                words.push(core::mem::take(&mut current));
                counts.push(pieces);
                pieces = 0;
            }
        }
    }
    let dangling_marker = pieces > 0;
    if dangling_marker {
        words.push(current);
        counts.push(pieces);
    }
    Unsegmented {
        words,
        counts,
        dangling_marker,
    }
}
