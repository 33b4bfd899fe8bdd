use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::Tree;
use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreKind {
    /// One score per gap between adjacent tokens (`n − 1` values).
    Boundary,
    /// One score per token (`n` values); the score of token `t` rates the
    /// split immediately before it.
    Node,
}

/// Scores from which a tree is induced: syntactic distances or expected depths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSequence {
    pub kind: ScoreKind,
    pub values: Vec<f64>,
}

impl ScoreSequence {
    pub fn boundary(values: Vec<f64>) -> Self {
        ScoreSequence {
            kind: ScoreKind::Boundary,
            values,
        }
    }

    pub fn node(values: Vec<f64>) -> Self {
        ScoreSequence {
            kind: ScoreKind::Node,
            values,
        }
    }

    pub fn sentence_len(&self) -> usize {
        match self.kind {
            ScoreKind::Boundary => self.values.len() + 1,
            ScoreKind::Node => self.values.len(),
        }
    }

    /// Boundary scores; node scores lose their first element.
    pub fn boundaries(&self) -> &[f64] {
        match self.kind {
            ScoreKind::Boundary => &self.values,
            ScoreKind::Node => self.values.get(1..).unwrap_or(&[]),
        }
    }
}

/// Greedy top-down construction: split at the highest boundary (leftmost on
/// ties) and recurse on both sides.
pub fn induce_tree(scores: &ScoreSequence) -> Result<Tree> {
    if scores.kind == ScoreKind::Node && scores.values.is_empty() {
        bail!(Data, "cannot induce a tree from an empty score sequence");
    }
    let b = scores.boundaries();
    if let Some(bad) = b.iter().find(|v| !v.is_finite()) {
        bail!(InvalidValue, "non-finite split score {}", bad);
    }
    Ok(split(b, 0, scores.sentence_len()))
}

fn split(b: &[f64], lo: usize, hi: usize) -> Tree {
    if hi - lo == 1 {
        return Tree::Leaf(lo);
    }
    // boundary k sits between leaves k and k + 1
    let mut best = lo;
    for k in lo + 1..hi - 1 {
        if b[k] > b[best] {
            best = k;
        }
    }
    Tree::node(split(b, lo, best + 1), split(b, best + 1, hi))
}
