//! Constituency trees: induction from score sequences, bracketing F1, trivial
//! baselines, label accuracy, BPE-aware alignment and PTB s-expressions.

mod align;
mod baseline;
mod eval;
mod induce;
mod ptb;

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

pub use align::{bpe_align_labeled, bpe_align_tree};
pub use baseline::{baseline_tree, BaselineKind};
pub use eval::{corpus_f1, label_accuracy, sentence_f1, LabelAccuracy, LabelCounts};
pub use induce::{induce_tree, ScoreKind, ScoreSequence};
pub use ptb::parse_ptb;

/// Unlabeled binary tree over leaf positions `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Tree {
    Leaf(usize),
    Node(Box<Tree>, Box<Tree>),
}

impl Tree {
    pub fn node(left: Tree, right: Tree) -> Tree {
        Tree::Node(Box::new(left), Box::new(right))
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node(l, r) => l.leaf_count() + r.leaf_count(),
        }
    }

    pub fn internal_count(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node(l, r) => 1 + l.internal_count() + r.internal_count(),
        }
    }

    /// Leaf indices, left to right.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            Tree::Leaf(i) => out.push(*i),
            Tree::Node(l, r) => {
                l.collect_leaves(out);
                r.collect_leaves(out);
            }
        }
    }

    /// Renders as an s-expression with label `X` on every internal node. A
    /// lone leaf is wrapped as `(X word)` so the output always parses.
    pub fn to_ptb<S: AsRef<str>>(&self, tokens: &[S]) -> String {
        let mut out = String::new();
        if let Tree::Leaf(i) = self {
            out.push_str("(X ");
            out.push_str(tokens[*i].as_ref());
            out.push(')');
            return out;
        }
        self.write_ptb(tokens, &mut out);
        out
    }

    fn write_ptb<S: AsRef<str>>(&self, tokens: &[S], out: &mut String) {
        match self {
            Tree::Leaf(i) => out.push_str(tokens[*i].as_ref()),
            Tree::Node(l, r) => {
                out.push_str("(X ");
                l.write_ptb(tokens, out);
                out.push(' ');
                r.write_ptb(tokens, out);
                out.push(')');
            }
        }
    }

    /// Converts into a [`LabeledTree`] labeling internal nodes `X`.
    pub fn to_labeled<S: AsRef<str>>(&self, tokens: &[S]) -> LabeledTree {
        match self {
            Tree::Leaf(i) => LabeledTree::Leaf(String::from(tokens[*i].as_ref())),
            Tree::Node(l, r) => LabeledTree::Node {
                label: String::from("X"),
                children: alloc::vec![l.to_labeled(tokens), r.to_labeled(tokens)],
            },
        }
    }

    fn spans(&self, start: usize, out: &mut Vec<(usize, usize)>) -> usize {
        match self {
            Tree::Leaf(_) => 1,
            Tree::Node(l, r) => {
                let nl = l.spans(start, out);
                let nr = r.spans(start + nl, out);
                out.push((start, start + nl + nr));
                nl + nr
            }
        }
    }
}

/// N-ary tree with constituent labels; leaves carry tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum LabeledTree {
    Leaf(String),
    Node { label: String, children: Vec<LabeledTree> },
}

impl LabeledTree {
    pub fn leaf_count(&self) -> usize {
        match self {
            LabeledTree::Leaf(_) => 1,
            LabeledTree::Node { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
        }
    }

    /// The yield.
    pub fn tokens(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_tokens(&mut out);
        out
    }

    fn collect_tokens<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            LabeledTree::Leaf(t) => out.push(t),
            LabeledTree::Node { children, .. } => children.iter().for_each(|c| c.collect_tokens(out)),
        }
    }

    pub fn label(&self) -> Option<&str> {
        match self {
            LabeledTree::Leaf(_) => None,
            LabeledTree::Node { label, .. } => Some(label),
        }
    }

    /// `(label start end)` for every internal node, in post-order.
    pub fn labeled_spans(&self) -> Vec<(&str, usize, usize)> {
        let mut out = Vec::new();
        self.collect_labeled_spans(0, &mut out);
        out
    }

    fn collect_labeled_spans<'a>(&'a self, start: usize, out: &mut Vec<(&'a str, usize, usize)>) -> usize {
        match self {
            LabeledTree::Leaf(_) => 1,
            LabeledTree::Node { label, children } => {
                let mut len = 0;
                for c in children {
                    len += c.collect_labeled_spans(start + len, out);
                }
                out.push((label, start, start + len));
                len
            }
        }
    }

    /// Left-binarizes every n-ary node: `(A a b c)` becomes `(A (A a b) c)`.
    pub fn to_binary_tree(&self) -> Tree {
        let mut next = 0;
        self.binarize(&mut next)
    }

    fn binarize(&self, next: &mut usize) -> Tree {
        match self {
            LabeledTree::Leaf(_) => {
                *next += 1;
                Tree::Leaf(*next - 1)
            }
            LabeledTree::Node { children, .. } => {
                let mut iter = children.iter();
                let mut acc = iter.next().expect("node without children").binarize(next);
                for c in iter {
                    acc = Tree::node(acc, c.binarize(next));
                }
                acc
            }
        }
    }

    pub fn to_ptb(&self) -> String {
        let mut out = String::new();
        self.write_ptb(&mut out);
        out
    }

    fn write_ptb(&self, out: &mut String) {
        match self {
            LabeledTree::Leaf(t) => out.push_str(t),
            LabeledTree::Node { label, children } => {
                out.push('(');
                out.push_str(label);
                for c in children {
                    out.push(' ');
                    c.write_ptb(out);
                }
                out.push(')');
            }
        }
    }
}

/// Nontrivial constituent spans `[start, end)` of a sentence of `len` leaves.
/// Single-token spans and the whole-sentence span are never members.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketSet {
    len: usize,
    spans: BTreeSet<(usize, usize)>,
}

impl BracketSet {
    pub fn from_spans(len: usize, spans: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let spans = spans
            .into_iter()
            .filter(|&(s, e)| e > s + 1 && !(s == 0 && e == len) && e <= len)
            .collect();
        BracketSet { len, spans }
    }

    pub fn sentence_len(&self) -> usize {
        self.len
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn contains(&self, span: (usize, usize)) -> bool {
        self.spans.contains(&span)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.spans.iter().copied()
    }

    pub fn overlap(&self, other: &BracketSet) -> usize {
        self.spans.intersection(&other.spans).count()
    }
}

/// Anything that yields constituent brackets.
pub trait Bracketed {
    fn leaf_total(&self) -> usize;
    fn brackets(&self) -> BracketSet;
}

impl Bracketed for Tree {
    fn leaf_total(&self) -> usize {
        self.leaf_count()
    }

    fn brackets(&self) -> BracketSet {
        let mut spans = Vec::new();
        let n = self.spans(0, &mut spans);
        BracketSet::from_spans(n, spans)
    }
}

impl Bracketed for LabeledTree {
    fn leaf_total(&self) -> usize {
        self.leaf_count()
    }

    fn brackets(&self) -> BracketSet {
        let n = self.leaf_count();
        BracketSet::from_spans(n, self.labeled_spans().into_iter().map(|(_, s, e)| (s, e)))
    }
}

pub fn brackets<T: Bracketed + ?Sized>(tree: &T) -> BracketSet {
    tree.brackets()
}
