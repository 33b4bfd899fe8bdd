use alloc::vec::Vec;
use core::cmp::Ordering;

use super::model::Seq2SeqModel;
use crate::autodiff::Graph;
use crate::error::Result;
use crate::tokenize::{BOS, EOS, PAD};

#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    /// Generated tokens, without the final EOS.
    pub tokens: Vec<usize>,
    pub logprob: f64,
    /// Whether generation ended with EOS (rather than at the length limit).
    pub finished: bool,
}

impl Hypothesis {
    /// Generated length including EOS.
    pub fn length(&self) -> usize {
        self.tokens.len() + usize::from(self.finished)
    }

    /// `logprob / length^penalty`.
    pub fn score(&self, len_penalty: f64) -> f64 {
        let len = self.length().max(1) as f64;
        self.logprob / libm::pow(len, len_penalty)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamConfig {
    pub beam: usize,
    pub len_penalty: f64,
    /// Defaults to `2 * source_len + 10` when absent.
    pub max_len: Option<usize>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig {
            beam: 5,
            len_penalty: 1.0,
            max_len: None,
        }
    }
}

pub fn max_decode_len(source_len: usize) -> usize {
    2 * source_len + 10
}

/// Log-softmax over plain values.
pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + libm::log(logits.iter().map(|v| libm::exp(v - max)).sum::<f64>());
    logits.iter().map(|v| v - lse).collect()
}

fn default_len(source: Option<&[usize]>, max_len: Option<usize>) -> usize {
    max_len.unwrap_or_else(|| max_decode_len(source.map_or(0, |s| s.len())))
}

fn allowed(token: usize) -> bool {
    token != PAD && token != BOS
}

/// Argmax decoding; the lowest token id wins ties.
pub fn greedy(model: &Seq2SeqModel, source: Option<&[usize]>, max_len: Option<usize>) -> Result<Hypothesis> {
    let max_len = default_len(source, max_len);
    let mut g = Graph::new(&model.store);
    let memory = model.prepare(&mut g, source)?;
    let context = model.context(&memory);
    let mut state = model.decoder.start(&mut g);
    let mut hyp = Hypothesis {
        tokens: Vec::new(),
        logprob: 0.0,
        finished: false,
    };
    let mut input = BOS;
    for _ in 0..max_len {
        let logits = model.decoder.step(&mut g, &mut state, input, &context)?;
        let lp = log_softmax(g.value(logits));
        let mut best = None;
        for (tok, &v) in lp.iter().enumerate().filter(|(t, _)| allowed(*t)) {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((tok, v));
            }
        }
        let (tok, v) = best.expect("vocabulary has a non-reserved symbol");
        hyp.logprob += v;
        if tok == EOS {
            hyp.finished = true;
            break;
        }
        hyp.tokens.push(tok);
        input = tok;
    }
    Ok(hyp)
}

/// All completed hypotheses of a beam search, best first under the
/// length-normalized score. Hypotheses still alive at the length limit are
/// included as unfinished.
pub fn beam_candidates(model: &Seq2SeqModel, source: Option<&[usize]>, config: &BeamConfig) -> Result<Vec<Hypothesis>> {
    let beam = config.beam.max(1);
    let max_len = default_len(source, config.max_len);
    let mut g = Graph::new(&model.store);
    let memory = model.prepare(&mut g, source)?;
    let context = model.context(&memory);
    let start = model.decoder.start(&mut g);
    let mut live = alloc::vec![(start, Vec::<usize>::new(), 0.0f64)];
    let mut finished: Vec<Hypothesis> = Vec::new();
    for _ in 0..max_len {
        // (total logprob, step logprob, hypothesis rank, token)
        let mut expansions: Vec<(f64, f64, usize, usize)> = Vec::new();
        let mut next_states = Vec::with_capacity(live.len());
        for (rank, (state, tokens, logprob)) in live.iter().enumerate() {
            let mut state = state.clone();
            let input = tokens.last().copied().unwrap_or(BOS);
            let logits = model.decoder.step(&mut g, &mut state, input, &context)?;
            let lp = log_softmax(g.value(logits));
            for (tok, &v) in lp.iter().enumerate().filter(|(t, _)| allowed(*t)) {
                expansions.push((logprob + v, v, rank, tok));
            }
            next_states.push(state);
        }
        expansions.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.2.cmp(&b.2))
                .then(b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
                .then(a.3.cmp(&b.3))
        });
        let mut next = Vec::with_capacity(beam);
        for &(total, _, rank, tok) in expansions.iter().take(beam) {
            let mut tokens = live[rank].1.clone();
            if tok == EOS {
                finished.push(Hypothesis {
                    tokens,
                    logprob: total,
                    finished: true,
                });
            } else {
                tokens.push(tok);
                next.push((next_states[rank].clone(), tokens, total));
            }
        }
        live = next;
        if finished.len() >= beam || live.is_empty() {
            break;
        }
    }
    if finished.len() < beam {
        finished.extend(live.into_iter().map(|(_, tokens, logprob)| Hypothesis {
            tokens,
            logprob,
            finished: false,
        }));
    }
    let penalty = config.len_penalty;
    finished.sort_by(|a, b| {
        b.score(penalty)
            .partial_cmp(&a.score(penalty))
            .unwrap_or(Ordering::Equal)
    });
    Ok(finished)
}

pub fn beam_search(model: &Seq2SeqModel, source: Option<&[usize]>, config: &BeamConfig) -> Result<Hypothesis> {
    Ok(beam_candidates(model, source, config)?.swap_remove(0))
}
