//! Property and oracle checks shared by the core test targets and the
//! acceptance run. Each returns a short detail line on success and a reason
//! on failure.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeSet;

use latree_core::autodiff::{Graph, ParamStore};
use latree_core::metrics::{corpus_bleu, sentence_bleu_smoothed};
use latree_core::nn::ParamBuilder;
use latree_core::onlstm::{cumax, OnLstmCell};
use latree_core::prpn::{alpha, gate_row, structured_weights};
use latree_core::tokenize::{apply_bpe, learn_bpe, remove_bpe};
use latree_core::treebank::{induce_tree, sentence_f1, LabeledTree, ScoreSequence, Tree};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        if !$cond {
            return Err(format!($($arg)*));
        }
    };
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn logits(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let scale = [0.1, 1.0, 5.0, 20.0][r.gen_range(0..4)];
    (0..n).map(|_| r.gen_range(-scale..scale)).collect()
}

/// cumax: nondecreasing, inside [0,1], last entry 1, unchanged by adding a
/// constant to every logit. The ON-LSTM master gates computed inside a cell
/// obey the same shape: forget rises to 1, input falls to 0.
pub fn cumax_and_master_gates(vectors: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    let eps = 1e-12;
    for v in 0..vectors {
        let n = r.gen_range(1..=16);
        let x = logits(&mut r, n);
        let y = cumax(&x);
        ensure!(
            y.windows(2).all(|w| w[1] >= w[0] - eps),
            "vector {}: cumax not monotone: {:?}",
            v,
            y
        );
        ensure!(
            y.iter().all(|&p| (-eps..=1.0 + eps).contains(&p)),
            "vector {}: cumax outside [0,1]",
            v
        );
        ensure!(
            (y[n - 1] - 1.0).abs() < 1e-12,
            "vector {}: last cumax entry {}",
            v,
            y[n - 1]
        );
        let c = r.gen_range(-50.0..50.0);
        let shifted: Vec<f64> = x.iter().map(|a| a + c).collect();
        let ys = cumax(&shifted);
        ensure!(
            y.iter().zip(&ys).all(|(a, b)| (a - b).abs() < 1e-9),
            "vector {}: cumax changed under a shift of {}",
            v,
            c
        );
    }
    for v in 0..vectors {
        let chunk = r.gen_range(1..=3);
        let hidden = chunk * r.gen_range(1..=6);
        let input = r.gen_range(1..=5);
        let mut store = ParamStore::new();
        let cell = {
            let mut b = ParamBuilder::new(&mut store, r.gen(), 2.0);
            OnLstmCell::new(&mut b, "cell", input, hidden, chunk)
        };
        let mut g = Graph::new(&store);
        let x = g.vector(logits(&mut r, input));
        let h = g.vector(logits(&mut r, hidden));
        let c = g.vector(logits(&mut r, hidden));
        let out = cell.step(&mut g, x, h, c);
        let f = g.value(out.master_forget).to_vec();
        let i = g.value(out.master_input).to_vec();
        let m = f.len();
        ensure!(
            f.windows(2).all(|w| w[1] >= w[0] - eps),
            "cell {}: master forget not nondecreasing",
            v
        );
        ensure!(
            i.windows(2).all(|w| w[1] <= w[0] + eps),
            "cell {}: master input not nonincreasing",
            v
        );
        ensure!(
            f.iter().chain(&i).all(|&p| (-eps..=1.0 + eps).contains(&p)),
            "cell {}: master gate outside [0,1]",
            v
        );
        ensure!(
            (f[m - 1] - 1.0).abs() < 1e-12,
            "cell {}: master forget ends at {}",
            v,
            f[m - 1]
        );
        ensure!(i[m - 1].abs() < 1e-12, "cell {}: master input ends at {}", v, i[m - 1]);
    }
    Ok(format!("{} logit vectors and {} cells", vectors, vectors))
}

/// PRPN gates: α and g in [0,1], g nondecreasing toward the current step,
/// gate rows and induced trees unchanged when every distance moves by the
/// same amount, structured weights summing to at most 1 (exactly
/// `s̃ / (t − 1)` with neutral gates).
pub fn prpn_gates(rows: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for v in 0..rows {
        let t = r.gen_range(1..=12);
        let tau = [0.5, 1.0, 10.0, 100.0][r.gen_range(0..4)];
        let d: Vec<f64> = (0..t).map(|_| r.gen_range(0.0..3.0)).collect();
        let row = gate_row(&d, t, tau).map_err(|e| e.to_string())?;
        ensure!(
            row.alpha.len() == t - 1 && row.gates.len() == t - 1,
            "row {}: lengths",
            v
        );
        ensure!(
            row.alpha.iter().chain(&row.gates).all(|&a| (0.0..=1.0).contains(&a)),
            "row {}: gate outside [0,1]",
            v
        );
        ensure!(
            row.gates.windows(2).all(|w| w[0] <= w[1]),
            "row {}: g not nondecreasing: {:?}",
            v,
            row.gates
        );
        if t > 1 {
            ensure!(
                row.gates[t - 2] == 1.0,
                "row {}: newest gate is {}",
                v,
                row.gates[t - 2]
            );
        }
        for (j, &a) in row.alpha.iter().enumerate() {
            ensure!(
                a == alpha(d[t - 1], d[j], tau),
                "row {}: α_{} disagrees with the closed form",
                v,
                j + 1
            );
        }

        let c = r.gen_range(-5.0..5.0);
        let shifted: Vec<f64> = d.iter().map(|x| x + c).collect();
        let row2 = gate_row(&shifted, t, tau).map_err(|e| e.to_string())?;
        let near = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-9);
        ensure!(
            near(&row.alpha, &row2.alpha) && near(&row.gates, &row2.gates),
            "row {}: gates changed under a distance shift",
            v
        );
        if t >= 2 {
            let words = ScoreSequence::boundary(d[1..].to_vec());
            let moved = ScoreSequence::boundary(shifted[1..].to_vec());
            ensure!(
                induce_tree(&words).map_err(|e| e.to_string())? == induce_tree(&moved).map_err(|e| e.to_string())?,
                "row {}: induced tree changed under a distance shift",
                v
            );

            let scores: Vec<f64> = (0..t - 1).map(|_| r.gen_range(-4.0..4.0)).collect();
            let s = structured_weights(&scores, &row.gates);
            let total: f64 = s.iter().sum();
            ensure!(total <= 1.0 + 1e-12, "row {}: weights sum to {}", v, total);
            ensure!(s.iter().all(|&w| w >= 0.0), "row {}: negative weight", v);
            let neutral = vec![1.0; t - 1];
            let sn = structured_weights(&scores, &neutral);
            let mut soft = vec![0.0; t - 1];
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|x| (x - max).exp()).sum();
            for (o, x) in soft.iter_mut().zip(&scores) {
                *o = (x - max).exp() / z;
            }
            ensure!(
                sn.iter()
                    .zip(&soft)
                    .all(|(a, b)| (a - b / (t - 1) as f64).abs() < 1e-12),
                "row {}: neutral gates do not give s̃/(t−1)",
                v
            );
        }
    }
    Ok(format!("{} gate rows", rows))
}

/// All binary trees over leaves `lo..hi`.
fn all_trees(lo: usize, hi: usize) -> Vec<Tree> {
    if hi - lo == 1 {
        return vec![Tree::Leaf(lo)];
    }
    let mut out = Vec::new();
    for k in lo + 1..hi {
        for l in all_trees(lo, k) {
            for r in all_trees(k, hi) {
                out.push(Tree::node(l.clone(), r));
            }
        }
    }
    out
}

fn first_leaf(t: &Tree) -> usize {
    match t {
        Tree::Leaf(i) => *i,
        Tree::Node(l, _) => first_leaf(l),
    }
}

/// Whether every internal node splits its span at a leftmost maximum of the
/// boundary scores inside that span.
fn splits_at_leftmost_max(t: &Tree, b: &[f64], lo: usize, hi: usize) -> bool {
    match t {
        Tree::Leaf(_) => true,
        Tree::Node(l, r) => {
            let k = first_leaf(r);
            // boundary k sits between leaves k-1 and k, stored at b[k-1]
            let inner = &b[lo..hi - 1];
            let max = inner.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let leftmost = lo + 1 + inner.iter().position(|&x| x == max).unwrap();
            k == leftmost && splits_at_leftmost_max(l, b, lo, k) && splits_at_leftmost_max(r, b, k, hi)
        }
    }
}

/// induce_tree against exhaustive search: for every boundary vector of
/// length ≤ 5 over {0,1,2}, exactly one of all Catalan-many trees satisfies
/// the leftmost-max property, and it must be the induced one.
pub fn tree_induction_oracle() -> Check {
    let mut cases = 0;
    for len in 0..=5usize {
        let n = len + 1;
        let trees = all_trees(0, n);
        for code in 0..3usize.pow(len as u32) {
            let b: Vec<f64> = (0..len).map(|i| ((code / 3usize.pow(i as u32)) % 3) as f64).collect();
            let matching: Vec<&Tree> = trees.iter().filter(|t| splits_at_leftmost_max(t, &b, 0, n)).collect();
            ensure!(
                matching.len() == 1,
                "{:?}: {} trees satisfy the oracle",
                b,
                matching.len()
            );
            let induced = induce_tree(&ScoreSequence::boundary(b.clone())).map_err(|e| e.to_string())?;
            ensure!(
                &induced == matching[0],
                "{:?}: induced {:?}, oracle {:?}",
                b,
                induced,
                matching[0]
            );
            // same tree after a strictly increasing transform
            let warped: Vec<f64> = b.iter().map(|x| (x * 1.7).exp() - 3.0).collect();
            ensure!(
                induce_tree(&ScoreSequence::boundary(warped)).map_err(|e| e.to_string())? == induced,
                "{:?}: tree changed under a monotone transform",
                b
            );
            cases += 1;
        }
    }
    Ok(format!("{} boundary vectors", cases))
}

/// Random binary tree over `lo..hi`, recording every internal span.
fn random_binary(r: &mut ChaCha8Rng, lo: usize, hi: usize, spans: &mut BTreeSet<(usize, usize)>) -> Tree {
    if hi - lo == 1 {
        return Tree::Leaf(lo);
    }
    spans.insert((lo, hi));
    let k = r.gen_range(lo + 1..hi);
    let left = random_binary(r, lo, k, spans);
    let right = random_binary(r, k, hi, spans);
    Tree::node(left, right)
}

/// Random n-ary labeled tree over `lo..hi`, recording every internal span.
fn random_labeled(r: &mut ChaCha8Rng, lo: usize, hi: usize, spans: &mut BTreeSet<(usize, usize)>) -> LabeledTree {
    if hi - lo == 1 && r.gen_bool(0.7) {
        return LabeledTree::Leaf(format!("w{}", lo));
    }
    spans.insert((lo, hi));
    let width = hi - lo;
    let parts = if width == 1 { 1 } else { r.gen_range(2..=width.min(4)) };
    let mut cuts: Vec<usize> = (lo + 1..hi).collect();
    cuts.shuffle(r);
    let mut cuts: Vec<usize> = cuts.into_iter().take(parts - 1).collect();
    cuts.sort();
    let mut bounds = vec![lo];
    bounds.extend(cuts);
    bounds.push(hi);
    let children = bounds
        .windows(2)
        .map(|w| random_labeled(r, w[0], w[1], spans))
        .collect();
    let label = ["NP", "VP", "PP", "ADJP", "S"][r.gen_range(0..5)].to_string();
    LabeledTree::Node { label, children }
}

fn nontrivial(spans: &BTreeSet<(usize, usize)>, n: usize) -> BTreeSet<(usize, usize)> {
    spans
        .iter()
        .copied()
        .filter(|&(s, e)| e - s > 1 && !(s == 0 && e == n))
        .collect()
}

fn f1_by_definition(pred: &BTreeSet<(usize, usize)>, gold: &BTreeSet<(usize, usize)>) -> f64 {
    match (pred.is_empty(), gold.is_empty()) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => {
            let overlap = pred.intersection(gold).count() as f64;
            if overlap == 0.0 {
                return 0.0;
            }
            let p = overlap / pred.len() as f64;
            let r = overlap / gold.len() as f64;
            2.0 * p * r / (p + r)
        }
    }
}

/// sentence_f1 against bracket sets recorded while generating random trees.
pub fn f1_oracle(pairs: usize, seed: u64) -> Check {
    let mut r = rng(seed);
    for v in 0..pairs {
        let n = r.gen_range(1..=10);
        let (mut ps, mut gs) = (BTreeSet::new(), BTreeSet::new());
        let pred = random_binary(&mut r, 0, n, &mut ps);
        let gold = random_labeled(&mut r, 0, n, &mut gs);
        let expected = f1_by_definition(&nontrivial(&ps, n), &nontrivial(&gs, n));
        let got = sentence_f1(&pred, &gold).map_err(|e| e.to_string())?;
        ensure!(
            got == expected,
            "pair {} (n={}): sentence_f1 {} vs oracle {}",
            v,
            n,
            got,
            expected
        );
        ensure!(
            sentence_f1(&pred, &pred).map_err(|e| e.to_string())? == 1.0,
            "pair {}: F1(t,t) != 1",
            v
        );
        ensure!(
            sentence_f1(&gold, &gold).map_err(|e| e.to_string())? == 1.0,
            "pair {}: F1(g,g) != 1",
            v
        );
    }
    let two = Tree::node(Tree::Leaf(0), Tree::Leaf(1));
    for gold in [
        LabeledTree::Node {
            label: "S".into(),
            children: vec![LabeledTree::Leaf("a".into()), LabeledTree::Leaf("b".into())],
        },
        LabeledTree::Node {
            label: "S".into(),
            children: vec![
                LabeledTree::Node {
                    label: "NP".into(),
                    children: vec![LabeledTree::Leaf("a".into())],
                },
                LabeledTree::Leaf("b".into()),
            ],
        },
    ] {
        ensure!(
            sentence_f1(&two, &gold).map_err(|e| e.to_string())? == 1.0,
            "2-word sentence does not score 1.0"
        );
    }
    Ok(format!("{} random pairs", pairs))
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Three hand-worked BLEU values plus corpus permutation invariance.
pub fn bleu_fixtures(seed: u64) -> Check {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-6;
    let lnmean = |ps: [f64; 4]| ps.iter().map(|p| p.ln()).sum::<f64>() / 4.0;

    // "the cat sat on the mat" / "the cat is on the mat": clipped matches
    // 5/6, 3/5, 1/4, 0/3 with equal lengths.
    let hyp = words("the cat sat on the mat");
    let reference = words("the cat is on the mat");
    let unsmoothed =
        corpus_bleu(std::slice::from_ref(&hyp), std::slice::from_ref(&reference)).map_err(|e| e.to_string())?;
    ensure!(unsmoothed == 0.0, "cat/mat corpus BLEU {} (expected 0)", unsmoothed);
    let smoothed = sentence_bleu_smoothed(&hyp, &reference).score;
    let want = 100.0 * lnmean([5.0 / 6.0, 4.0 / 6.0, 2.0 / 5.0, 1.0 / 4.0]).exp();
    ensure!(close(smoothed, want), "cat/mat smoothed BLEU {} vs {}", smoothed, want);

    // seven "the" against a reference holding two: unigram precision clips
    // to 2/7, no higher-order match; smoothed 1/7, 1/6, 1/5.
    let hyp = words("the the the the the the the");
    let clipped = sentence_bleu_smoothed(&hyp, &reference).score;
    let want = 100.0 * lnmean([2.0 / 7.0, 1.0 / 7.0, 1.0 / 6.0, 1.0 / 5.0]).exp();
    ensure!(close(clipped, want), "clipped smoothed BLEU {} vs {}", clipped, want);

    // corpus of two: all n-grams match, 8 hypothesis words against 9
    // reference words, so BLEU is the brevity penalty exp(1 − 9/8).
    let hyps = vec![words("a b c d"), words("w x y z")];
    let refs = vec![words("a b c d e"), words("w x y z")];
    let short = corpus_bleu(&hyps, &refs).map_err(|e| e.to_string())?;
    let want = 100.0 * (1.0f64 - 9.0 / 8.0).exp();
    ensure!(close(short, want), "brevity corpus BLEU {} vs {}", short, want);

    let mut r = rng(seed);
    let vocab: Vec<String> = (0..12).map(|i| format!("t{}", i)).collect();
    for trial in 0..50 {
        let len = r.gen_range(2..=20);
        let mut pairs: Vec<(Vec<String>, Vec<String>)> = (0..len)
            .map(|_| {
                let h = (0..r.gen_range(1..=12))
                    .map(|_| vocab[r.gen_range(0..12)].clone())
                    .collect();
                let f = (0..r.gen_range(1..=12))
                    .map(|_| vocab[r.gen_range(0..12)].clone())
                    .collect();
                (h, f)
            })
            .collect();
        let score = |p: &[(Vec<String>, Vec<String>)]| {
            let (h, f): (Vec<_>, Vec<_>) = p.iter().cloned().unzip();
            corpus_bleu(&h, &f)
        };
        let before = score(&pairs).map_err(|e| e.to_string())?;
        pairs.shuffle(&mut r);
        let after = score(&pairs).map_err(|e| e.to_string())?;
        ensure!(
            close(before, after),
            "trial {}: BLEU {} became {} after shuffling",
            trial,
            before,
            after
        );
        ensure!(
            (0.0..=100.0).contains(&before),
            "trial {}: BLEU {} out of range",
            trial,
            before
        );
    }
    Ok(format!(
        "smoothed {:.4}, clipped {:.4}, brevity {:.4}; 50 permutations",
        smoothed, clipped, short
    ))
}

fn synthetic_corpus(sentences: usize, seed: u64) -> Vec<Vec<String>> {
    let mut r = rng(seed);
    let syllables = ["ka", "lo", "mi", "ne", "ru", "sa", "ti", "vo", "e", "an", "ng", "é"];
    let lexicon: Vec<String> = (0..400)
        .map(|_| {
            (0..r.gen_range(1..=4))
                .map(|_| syllables[r.gen_range(0..syllables.len())])
                .collect()
        })
        .collect();
    (0..sentences)
        .map(|_| {
            (0..r.gen_range(1..=15))
                // Zipf-like skew so frequent words merge early
                .map(|_| lexicon[(r.gen_range(0.0f64..1.0).powi(3) * 400.0) as usize].clone())
                .collect()
        })
        .collect()
}

/// learn → apply → remove is the identity on every sentence, and learning
/// twice yields the same merge list.
pub fn bpe_round_trip(seed: u64) -> Check {
    let corpus = synthetic_corpus(1000, seed);
    let model = learn_bpe(&corpus, 300).map_err(|e| e.to_string())?;
    let again = learn_bpe(&corpus, 300).map_err(|e| e.to_string())?;
    ensure!(model.merges() == again.merges(), "merge lists differ between two runs");
    ensure!(!model.is_empty(), "no merges learned");
    let mut split_words = 0;
    for (i, s) in corpus.iter().enumerate() {
        let seg = apply_bpe(&model, s);
        split_words += seg.len() - s.len();
        let back = remove_bpe(&seg);
        ensure!(
            &back.words == s,
            "sentence {}: {:?} -> {:?} -> {:?}",
            i,
            s,
            seg,
            back.words
        );
        ensure!(
            back.counts.iter().sum::<usize>() == seg.len(),
            "sentence {}: subword counts",
            i
        );
    }
    Ok(format!(
        "{} merges, 1000 sentences, {} extra subwords",
        model.len(),
        split_words
    ))
}
