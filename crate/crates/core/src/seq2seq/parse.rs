use alloc::vec::Vec;

use super::decoder::ParseScores;
use super::model::{Mode, Seq2SeqModel};
use crate::autodiff::Graph;
use crate::error::{bail, Result};
use crate::tokenize::EOS;
use crate::treebank::{induce_tree, ScoreSequence, Tree};

/// Word-level score sequences for a sentence of `n` words read as
/// `[BOS, w_1..w_n]`: distances keep the gaps between words, depths keep
/// the word positions.
pub fn word_scores(scores: &ParseScores, n: usize) -> Vec<ScoreSequence> {
    match scores {
        ParseScores::Distances(d) => alloc::vec![ScoreSequence::boundary(d[2..=n].to_vec())],
        ParseScores::Depths(layers) => layers.iter().map(|d| ScoreSequence::node(d[1..=n].to_vec())).collect(),
    }
}

/// Runs the decoder over the gold `target` and induces one tree per parsing
/// layer (one for PRPN, one per layer for ON-LSTM).
pub fn parse_one(model: &Seq2SeqModel, source: Option<&[usize]>, target: &[usize]) -> Result<Vec<Tree>> {
    if target.is_empty() {
        bail!(Data, "cannot parse an empty sentence");
    }
    let mut g = Graph::new(&model.store);
    let tf = model.teacher_forced(&mut g, source, target)?;
    let Some(scores) = tf.state.parse_scores(&g) else {
        bail!(Config, "the {} decoder does not induce trees", model.decoder.kind());
    };
    if tf.tokens != target.len() + 1 {
        bail!(Data, "target contains padding");
    }
    word_scores(&scores, target.len()).iter().map(induce_tree).collect()
}

/// Teacher-forced parses of gold targets, with the true sources in
/// translation mode. Output is indexed `[sentence][layer]`.
pub fn parse_target_teacher_forced(
    model: &Seq2SeqModel,
    sources: Option<&[Vec<usize>]>,
    targets: &[Vec<usize>],
) -> Result<Vec<Vec<Tree>>> {
    match (model.mode(), sources) {
        (Mode::Mt, None) => bail!(Contract, "translation model needs source sentences"),
        (Mode::Mt, Some(s)) if s.len() != targets.len() => {
            bail!(Alignment, "{} sources for {} targets", s.len(), targets.len())
        }
        _ => {}
    }
    targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let src = match model.mode() {
                Mode::Mt => sources.map(|s| s[i].as_slice()),
                Mode::Lm => None,
            };
            parse_one(model, src, t)
        })
        .collect()
}

/// Parses with the source replaced by the single token `[EOS]`.
pub fn eos_probe_parse(model: &Seq2SeqModel, targets: &[Vec<usize>]) -> Result<Vec<Vec<Tree>>> {
    if model.mode() != Mode::Mt {
        bail!(Contract, "the EOS probe needs a translation model");
    }
    let src = [EOS];
    targets.iter().map(|t| parse_one(model, Some(&src), t)).collect()
}
