use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::{LabeledTree, Tree};
use crate::error::{bail, Result};

/// Replaces every word leaf by a left-branching subtree over its subwords;
/// `counts[w]` is the number of subwords of word `w`.
pub fn bpe_align_tree(word_tree: &Tree, counts: &[usize]) -> Result<Tree> {
    let n = word_tree.leaf_count();
    if counts.len() != n || counts.contains(&0) {
        bail!(Alignment, "segmentation with {} entries for {} words", counts.len(), n);
    }
    let mut offsets = vec![0usize; n];
    for w in 1..n {
        offsets[w] = offsets[w - 1] + counts[w - 1];
    }
    Ok(expand(word_tree, counts, &offsets))
}

fn expand(tree: &Tree, counts: &[usize], offsets: &[usize]) -> Tree {
    match tree {
        Tree::Leaf(w) => {
            let start = offsets[*w];
            (1..counts[*w]).fold(Tree::Leaf(start), |acc, k| Tree::node(acc, Tree::Leaf(start + k)))
        }
        Tree::Node(l, r) => Tree::node(expand(l, counts, offsets), expand(r, counts, offsets)),
    }
}

/// Labeled variant: `subwords[w]` are the subword tokens of word `w`. New
/// word-internal nodes are labeled `X`.
pub fn bpe_align_labeled(word_tree: &LabeledTree, subwords: &[Vec<String>]) -> Result<LabeledTree> {
    let n = word_tree.leaf_count();
    if subwords.len() != n || subwords.iter().any(|s| s.is_empty()) {
        bail!(
            Alignment,
            "segmentation with {} entries for {} words",
            subwords.len(),
            n
        );
    }
    let mut next = 0;
    Ok(expand_labeled(word_tree, subwords, &mut next))
}

fn expand_labeled(tree: &LabeledTree, subwords: &[Vec<String>], next: &mut usize) -> LabeledTree {
    match tree {
        LabeledTree::Leaf(_) => {
            let pieces = &subwords[*next];
            *next += 1;
            let mut iter = pieces.iter();
            let first = LabeledTree::Leaf(iter.next().expect("nonempty segmentation").clone());
            iter.fold(first, |acc, p| LabeledTree::Node {
                label: String::from("X"),
                children: vec![acc, LabeledTree::Leaf(p.clone())],
            })
        }
        LabeledTree::Node { label, children } => LabeledTree::Node {
            label: label.clone(),
            children: children.iter().map(|c| expand_labeled(c, subwords, next)).collect(),
        },
    }
}
