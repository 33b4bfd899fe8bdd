use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Tree;
use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineKind {
    Left,
    Right,
    Balanced,
    Random(u64),
}

pub fn baseline_tree(kind: BaselineKind, n: usize) -> Result<Tree> {
    if n == 0 {
        bail!(Data, "baseline tree over zero tokens");
    }
    Ok(match kind {
        BaselineKind::Left => (1..n).fold(Tree::Leaf(0), |acc, i| Tree::node(acc, Tree::Leaf(i))),
        BaselineKind::Right => (0..n - 1)
            .rev()
            .fold(Tree::Leaf(n - 1), |acc, i| Tree::node(Tree::Leaf(i), acc)),
        BaselineKind::Balanced => balanced(0, n),
        BaselineKind::Random(seed) => random(&mut ChaCha8Rng::seed_from_u64(seed), 0, n),
    })
}

fn balanced(lo: usize, hi: usize) -> Tree {
    if hi - lo == 1 {
        return Tree::Leaf(lo);
    }
    let mid = lo + (hi - lo).div_ceil(2);
    Tree::node(balanced(lo, mid), balanced(mid, hi))
}

fn random(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> Tree {
    if hi - lo == 1 {
        return Tree::Leaf(lo);
    }
    let mid = rng.gen_range(lo + 1..hi);
    let left = random(rng, lo, mid);
    Tree::node(left, random(rng, mid, hi))
}
