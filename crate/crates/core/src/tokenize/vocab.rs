use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{bail, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
/// Spellings of the reserved ids, in id order.
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<s>", "</s>"];

/// Token ↔ id map. Ids `0..4` are reserved for PAD, UNK, BOS and EOS.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    /// Reserved entries plus `entries` in the given order.
    pub fn from_entries(entries: impl IntoIterator<Item = (String, u64)>) -> Result<Self> {
        let mut v = Vocab {
            tokens: Vec::new(),
            counts: Vec::new(),
            index: BTreeMap::new(),
        };
        for r in RESERVED {
            v.push(String::from(r), 0);
        }
        for (tok, count) in entries {
            if v.index.contains_key(&tok) {
                bail!(Data, "duplicate vocabulary entry {:?}", tok);
            }
            v.push(tok, count);
        }
        Ok(v)
    }

    fn push(&mut self, tok: String, count: u64) {
        self.index.insert(tok.clone(), self.tokens.len());
        self.tokens.push(tok);
        self.counts.push(count);
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map_or(RESERVED[UNK], |s| s.as_str())
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts.get(id).copied().unwrap_or(0)
    }

    /// Non-reserved `(token, count)` pairs in id order.
    pub fn entries(&self) -> impl Iterator<Item = (&str, u64)> {
        self.tokens[RESERVED.len()..]
            .iter()
            .zip(&self.counts[RESERVED.len()..])
            .map(|(t, &c)| (t.as_str(), c))
    }

    pub fn encode<S: AsRef<str>>(&self, sentence: &[S]) -> Vec<usize> {
        sentence.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| String::from(self.token(i))).collect()
    }
}

/// Keeps the most frequent tokens (count desc, then lexicographic) so that
/// the vocabulary, reserved entries included, has at most `max_size` entries.
pub fn build_vocab<S: AsRef<str>>(corpus: &[Vec<S>], max_size: usize) -> Result<Vocab> {
    if max_size < RESERVED.len() {
        bail!(
            Config,
            "vocabulary size {} is below the {} reserved entries",
            max_size,
            RESERVED.len()
        );
    }
    if corpus.is_empty() {
        bail!(Data, "cannot build a vocabulary from an empty corpus");
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    for sentence in corpus {
        for tok in sentence {
            let tok = tok.as_ref();
            if !RESERVED.contains(&tok) {
                *counts.entry(tok).or_default() += 1;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(max_size - RESERVED.len());
    Vocab::from_entries(ranked.into_iter().map(|(t, c)| (String::from(t), c)))
}
