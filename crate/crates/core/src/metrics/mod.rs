//! Translation and language-model metrics plus cross-run summaries.

mod bleu;
mod summary;

pub use bleu::{
    corpus_bleu, length_bucket_report, sentence_bleu_smoothed, BleuStats, BucketScore, SentenceBleu, MAX_ORDER,
};
pub use summary::{perplexity, Summary};
