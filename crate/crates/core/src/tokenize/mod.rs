//! Vocabularies and word-internal byte-pair encoding with `@@` continuation
//! markers.

mod bpe;
mod vocab;

pub use bpe::{apply_bpe, apply_bpe_word, learn_bpe, remove_bpe, BpeModel, Unsegmented, MARKER};
pub use vocab::{build_vocab, Vocab, BOS, EOS, PAD, RESERVED, UNK};
