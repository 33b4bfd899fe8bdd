use alloc::collections::BTreeMap;
use alloc::string::String;

use serde::{Deserialize, Serialize};

use super::{Bracketed, LabeledTree};
use crate::error::{bail, Result};

/// Unlabeled bracketing F1 of one sentence. Two empty bracket sets agree
/// perfectly (1.0); exactly one empty set scores 0.0.
pub fn sentence_f1<P, G>(pred: &P, gold: &G) -> Result<f64>
where
    P: Bracketed + ?Sized,
    G: Bracketed + ?Sized,
{
    let (np, ng) = (pred.leaf_total(), gold.leaf_total());
    if np != ng {
        bail!(Alignment, "predicted tree has {} leaves, gold has {}", np, ng);
    }
    let (p, g) = (pred.brackets(), gold.brackets());
    Ok(match (p.is_empty(), g.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        (false, false) => {
            let overlap = p.overlap(&g) as f64;
            if overlap == 0.0 {
                0.0
            } else {
                let precision = overlap / p.len() as f64;
                let recall = overlap / g.len() as f64;
                2.0 * precision * recall / (precision + recall)
            }
        }
    })
}

/// Unweighted mean of sentence F1 over aligned corpora.
pub fn corpus_f1<P: Bracketed, G: Bracketed>(preds: &[P], golds: &[G]) -> Result<f64> {
    if preds.len() != golds.len() {
        bail!(
            Alignment,
            "{} predicted trees for {} gold trees",
            preds.len(),
            golds.len()
        );
    }
    if preds.is_empty() {
        bail!(Data, "corpus F1 over zero sentences");
    }
    let mut total = 0.0;
    for (p, g) in preds.iter().zip(golds) {
        total += sentence_f1(p, g)?;
    }
    Ok(total / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub hits: usize,
    pub total: usize,
}

impl LabelCounts {
    /// `None` when the label never occurs in the gold trees.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }
}

/// Per-label recall of gold constituents among predicted brackets,
/// accumulated over a corpus.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelAccuracy {
    pub counts: BTreeMap<String, LabelCounts>,
}

impl LabelAccuracy {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Self {
        LabelAccuracy {
            counts: labels
                .iter()
                .map(|l| (String::from(l.as_ref()), LabelCounts::default()))
                .collect(),
        }
    }

    pub fn add<P: Bracketed + ?Sized>(&mut self, pred: &P, gold: &LabeledTree) -> Result<()> {
        let n = gold.leaf_count();
        if pred.leaf_total() != n {
            bail!(
                Alignment,
                "predicted tree has {} leaves, gold has {}",
                pred.leaf_total(),
                n
            );
        }
        let predicted = pred.brackets();
        for (label, s, e) in gold.labeled_spans() {
            let trivial = e <= s + 1 || (s == 0 && e == n);
            if trivial {
                continue;
            }
            if let Some(c) = self.counts.get_mut(label) {
                c.total += 1;
                if predicted.contains((s, e)) {
                    c.hits += 1;
                }
            }
        }
        Ok(())
    }

    pub fn accuracy(&self, label: &str) -> Option<f64> {
        self.counts.get(label).and_then(|c| c.accuracy())
    }
}

pub fn label_accuracy<P: Bracketed, S: AsRef<str>>(
    preds: &[P],
    golds: &[LabeledTree],
    labels: &[S],
) -> Result<LabelAccuracy> {
    if preds.len() != golds.len() {
        bail!(
            Alignment,
            "{} predicted trees for {} gold trees",
            preds.len(),
            golds.len()
        );
    }
    let mut acc = LabelAccuracy::new(labels);
    for (p, g) in preds.iter().zip(golds) {
        acc.add(p, g)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{parse_ptb, Tree};
    use alloc::vec;
    use alloc::vec::Vec;

    fn l(i: usize) -> Tree {
        Tree::Leaf(i)
    }

    fn example_pred() -> Tree {
        // brackets {(0,2), (2,5), (3,5)}
        Tree::node(Tree::node(l(0), l(1)), Tree::node(l(2), Tree::node(l(3), l(4))))
    }

    fn example_gold() -> LabeledTree {
        // brackets {(1,5), (1,3), (3,5)}
        parse_ptb("(S (DT a) (VP (NP (JJ b) (NN c)) (NP (DT d) (NN e))))").unwrap()
    }

    #[test]
    fn identical_trees_score_one() {
        let g = example_gold();
        assert_eq!(sentence_f1(&g, &g).unwrap(), 1.0);
        let t = example_pred();
        assert_eq!(sentence_f1(&t, &t).unwrap(), 1.0);
    }

    #[test]
    fn hand_computed_third() {
        let f1 = sentence_f1(&example_pred(), &example_gold()).unwrap();
        assert!((f1 - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_word_sentences_always_agree() {
        let g = parse_ptb("(S (NP a) (VP b))").unwrap();
        assert_eq!(sentence_f1(&Tree::node(l(0), l(1)), &g).unwrap(), 1.0);
    }

    #[test]
    fn one_empty_side_scores_zero() {
        let flat = parse_ptb("(S a b c)").unwrap();
        assert_eq!(
            sentence_f1(&Tree::node(Tree::node(l(0), l(1)), l(2)), &flat).unwrap(),
            0.0
        );
    }

    #[test]
    fn leaf_mismatch_is_an_alignment_error() {
        let g = example_gold();
        assert!(matches!(
            sentence_f1(&Tree::node(l(0), l(1)), &g),
            Err(crate::Error::Alignment(_))
        ));
    }

    #[test]
    fn corpus_mean_and_permutation() {
        let preds = vec![example_pred(), example_gold().to_binary_tree()];
        let golds = vec![example_gold(), example_gold()];
        let f = corpus_f1(&preds, &golds).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
        let preds_rev: Vec<_> = preds.iter().rev().cloned().collect();
        assert_eq!(corpus_f1(&preds_rev, &golds).unwrap(), f);
        assert!(corpus_f1(&preds[..1], &golds).is_err());
    }

    #[test]
    fn label_accuracy_examples() {
        let gold = example_gold();
        let acc = label_accuracy(&[example_pred()], core::slice::from_ref(&gold), &["ADJP", "NP", "PP"]).unwrap();
        // NP (1,3) missed, NP (3,5) hit
        assert_eq!(acc.counts["NP"], LabelCounts { hits: 1, total: 2 });
        assert_eq!(acc.accuracy("NP"), Some(0.5));
        assert_eq!(acc.accuracy("ADJP"), None);
        assert_eq!(acc.accuracy("PP"), None);

        let perfect = label_accuracy(&[gold.to_binary_tree()], &[gold], &["NP"]).unwrap();
        assert_eq!(perfect.accuracy("NP"), Some(1.0));
    }
}
