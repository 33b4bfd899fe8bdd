use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::tokenize::MARKER;

pub const MAX_ORDER: usize = 4;

/// Clipped n-gram statistics for n = 1..=4. Merging is associative, so
/// corpus statistics may be summed in any grouping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BleuStats {
    pub matches: [u64; MAX_ORDER],
    pub totals: [u64; MAX_ORDER],
    pub hyp_len: u64,
    pub ref_len: u64,
}

impl BleuStats {
    pub fn from_pair<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], reference: &[T]) -> Self {
        let hyp: Vec<&str> = hyp.iter().map(|s| s.as_ref()).collect();
        let reference: Vec<&str> = reference.iter().map(|s| s.as_ref()).collect();
        let mut stats = BleuStats {
            hyp_len: hyp.len() as u64,
            ref_len: reference.len() as u64,
            ..Default::default()
        };
        for n in 1..=MAX_ORDER {
            let ref_counts = ngram_counts(&reference, n);
            let hyp_counts = ngram_counts(&hyp, n);
            let mut matched = 0;
            for (gram, c) in &hyp_counts {
                matched += (*c).min(ref_counts.get(gram).copied().unwrap_or(0));
            }
            stats.matches[n - 1] = matched;
            stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
        }
        stats
    }

    pub fn merge(&mut self, other: &BleuStats) {
        for n in 0..MAX_ORDER {
            self.matches[n] += other.matches[n];
            self.totals[n] += other.totals[n];
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
    }

    pub fn brevity_penalty(&self) -> f64 {
        if self.hyp_len == 0 {
            return 0.0;
        }
        let ratio = self.ref_len as f64 / self.hyp_len as f64;
        libm::exp((1.0 - ratio).min(0.0))
    }

    /// Unsmoothed BLEU on a 0–100 scale. Orders for which the hypotheses
    /// hold no n-grams at all (every hypothesis shorter than n) are left out
    /// of the geometric mean.
    pub fn score(&self) -> f64 {
        let orders = self.totals.iter().take_while(|&&t| t > 0).count();
        if orders == 0 || self.matches[..orders].contains(&0) {
            return 0.0;
        }
        let log_mean = (0..orders)
            .map(|n| libm::log(self.matches[n] as f64 / self.totals[n] as f64))
            .sum::<f64>()
            / orders as f64;
        100.0 * self.brevity_penalty() * libm::exp(log_mean)
    }

    /// BLEU with add-one smoothing of the n ≥ 2 precisions.
    pub fn smoothed_score(&self) -> f64 {
        if self.hyp_len == 0 || self.matches[0] == 0 {
            return 0.0;
        }
        let mut log_sum = libm::log(self.matches[0] as f64 / self.totals[0] as f64);
        for n in 1..MAX_ORDER {
            log_sum += libm::log((self.matches[n] + 1) as f64 / (self.totals[n] + 1) as f64);
        }
        100.0 * self.brevity_penalty() * libm::exp(log_sum / MAX_ORDER as f64)
    }
}

fn ngram_counts<'a>(tokens: &[&'a str], n: usize) -> BTreeMap<Vec<&'a str>, u64> {
    let mut counts = BTreeMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts.entry(w.to_vec()).or_default() += 1;
        }
    }
    counts
}

fn refuse_markers<S: AsRef<str>>(sentences: &[Vec<S>]) -> Result<()> {
    for s in sentences {
        if let Some(t) = s.iter().find(|t| t.as_ref().ends_with(MARKER)) {
            bail!(
                Data,
                "BLEU is computed on words; found subword token {:?} (run remove-bpe first)",
                t.as_ref()
            );
        }
    }
    Ok(())
}

/// Corpus-level BLEU (single reference) on a 0–100 scale.
pub fn corpus_bleu<S: AsRef<str>, T: AsRef<str>>(hyps: &[Vec<S>], refs: &[Vec<T>]) -> Result<f64> {
    if hyps.len() != refs.len() {
        bail!(Alignment, "{} hypotheses for {} references", hyps.len(), refs.len());
    }
    if hyps.is_empty() {
        bail!(Data, "BLEU over an empty corpus");
    }
    refuse_markers(hyps)?;
    refuse_markers(refs)?;
    let mut total = BleuStats::default();
    for (h, r) in hyps.iter().zip(refs) {
        total.merge(&BleuStats::from_pair(h, r));
    }
    Ok(total.score())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceBleu {
    pub score: f64,
    /// The hypothesis was empty (score forced to 0).
    pub empty_hypothesis: bool,
}

pub fn sentence_bleu_smoothed<S: AsRef<str>, T: AsRef<str>>(hyp: &[S], reference: &[T]) -> SentenceBleu {
    let stats = BleuStats::from_pair(hyp, reference);
    SentenceBleu {
        score: stats.smoothed_score(),
        empty_hypothesis: hyp.is_empty(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub lo: usize,
    /// Exclusive upper bound; `None` for the open-ended last bucket.
    pub hi: Option<usize>,
    /// `None` for an empty bucket.
    pub mean: Option<f64>,
    pub count: usize,
}

/// Mean smoothed sentence BLEU per reference-length bucket. `edges` are the
/// cut points: `k` edges define `k + 1` buckets `[0, e0), [e0, e1), …, [e_{k-1}, ∞)`.
pub fn length_bucket_report<S: AsRef<str>, T: AsRef<str>>(
    pairs: &[(Vec<S>, Vec<T>)],
    edges: &[usize],
) -> Result<Vec<BucketScore>> {
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        bail!(Config, "bucket edges must be strictly increasing: {:?}", edges);
    }
    let mut buckets: Vec<BucketScore> = (0..=edges.len())
        .map(|i| BucketScore {
            lo: if i == 0 { 0 } else { edges[i - 1] },
            hi: edges.get(i).copied(),
            mean: None,
            count: 0,
        })
        .collect();
    let mut sums = alloc::vec![0.0; buckets.len()];
    for (hyp, reference) in pairs {
        let len = reference.len();
        let b = edges.iter().position(|&e| len < e).unwrap_or(edges.len());
        sums[b] += sentence_bleu_smoothed(hyp, reference).score;
        buckets[b].count += 1;
    }
    for (b, s) in buckets.iter_mut().zip(sums) {
        if b.count > 0 {
            b.mean = Some(s / b.count as f64);
        }
    }
    Ok(buckets)
}
