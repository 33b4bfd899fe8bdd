use latree_core::autodiff::{Graph, ParamStore};
use latree_core::metrics::{corpus_bleu, perplexity, sentence_bleu_smoothed};
use latree_core::onlstm::cumax;
use latree_core::tokenize::{build_vocab, RESERVED, UNK};
use latree_core::treebank::{
    baseline_tree, bpe_align_tree, brackets, corpus_f1, induce_tree, parse_ptb, sentence_f1, BaselineKind,
    ScoreSequence, Tree,
};
use proptest::collection::vec;
use proptest::prelude::*;

fn scores(max: usize) -> impl Strategy<Value = Vec<f64>> {
    vec(-5.0f64..5.0, 0..max)
}

fn tree_of(values: Vec<f64>) -> Tree {
    induce_tree(&ScoreSequence::boundary(values)).unwrap()
}

fn sentence() -> impl Strategy<Value = Vec<String>> {
    vec("[a-e]{1,3}", 1..12)
}

proptest! {
    #[test]
    fn induced_tree_shape(values in scores(20)) {
        let n = values.len() + 1;
        let t = tree_of(values);
        prop_assert_eq!(t.leaves(), (0..n).collect::<Vec<_>>());
        prop_assert_eq!(t.internal_count(), n - 1);
        if n >= 2 {
            prop_assert_eq!(brackets(&t).len(), n - 2);
        }
    }

    #[test]
    fn node_scores_drop_their_first_entry(values in vec(-5.0f64..5.0, 1..20)) {
        let from_nodes = induce_tree(&ScoreSequence::node(values.clone())).unwrap();
        prop_assert_eq!(from_nodes, tree_of(values[1..].to_vec()));
    }

    #[test]
    fn induction_ignores_monotone_transforms(values in scores(15), a in 0.1f64..4.0, b in -3.0f64..3.0) {
        let warped = values.iter().map(|x| a * x.powi(3) + b).collect();
        prop_assert_eq!(tree_of(values), tree_of(warped));
    }

    #[test]
    fn binary_f1_is_symmetric(pair in (1usize..14).prop_flat_map(|n| (vec(-5.0f64..5.0, n - 1), vec(-5.0f64..5.0, n - 1)))) {
        let (a, b) = (tree_of(pair.0), tree_of(pair.1));
        let ab = sentence_f1(&a, &b).unwrap();
        prop_assert!((ab - sentence_f1(&b, &a).unwrap()).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(sentence_f1(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn corpus_f1_ignores_order(sets in vec(vec(-5.0f64..5.0, 1..8), 1..10), seed in any::<u64>()) {
        let preds: Vec<Tree> = sets.iter().map(|v| tree_of(v.clone())).collect();
        let golds: Vec<Tree> = sets.iter().map(|v| tree_of(v.iter().rev().cloned().collect())).collect();
        let before = corpus_f1(&preds, &golds).unwrap();
        let mut order: Vec<usize> = (0..preds.len()).collect();
        order.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let p: Vec<Tree> = order.iter().map(|&i| preds[i].clone()).collect();
        let g: Vec<Tree> = order.iter().map(|&i| golds[i].clone()).collect();
        prop_assert!((before - corpus_f1(&p, &g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ptb_round_trip(values in scores(12)) {
        let t = tree_of(values);
        let tokens: Vec<String> = (0..t.leaf_count()).map(|i| format!("w{}", i)).collect();
        let text = t.to_ptb(&tokens);
        let parsed = parse_ptb(&text).unwrap();
        prop_assert_eq!(parsed.to_ptb(), text);
        prop_assert_eq!(parsed.to_binary_tree(), t);
    }

    #[test]
    fn bpe_alignment_conserves_subwords(values in scores(10), counts in vec(1usize..4, 11)) {
        let t = tree_of(values);
        let counts = &counts[..t.leaf_count()];
        let aligned = bpe_align_tree(&t, counts).unwrap();
        prop_assert_eq!(aligned.leaf_count(), counts.iter().sum::<usize>());
        prop_assert_eq!(aligned.internal_count(), aligned.leaf_count() - 1);
    }

    #[test]
    fn bleu_of_identity_is_100(corpus in vec(sentence(), 1..6)) {
        let b = corpus_bleu(&corpus, &corpus).unwrap();
        prop_assert!((b - 100.0).abs() < 1e-9);
        for s in &corpus {
            prop_assert!((sentence_bleu_smoothed(s, s).score - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bleu_in_range(h in vec(sentence(), 3), r in vec(sentence(), 3)) {
        let b = corpus_bleu(&h, &r).unwrap();
        prop_assert!((0.0..=100.0).contains(&b));
        for (x, y) in h.iter().zip(&r) {
            let s = sentence_bleu_smoothed(x, y).score;
            prop_assert!((0.0..=100.0 + 1e-9).contains(&s));
        }
    }

    #[test]
    fn smoothing_keeps_nonzero_scores_nonzero(h in sentence(), r in sentence()) {
        let plain = corpus_bleu(std::slice::from_ref(&h), std::slice::from_ref(&r)).unwrap();
        if plain > 0.0 {
            prop_assert!(sentence_bleu_smoothed(&h, &r).score > 0.0);
        }
    }

    #[test]
    fn vocab_round_trip(corpus in vec(sentence(), 1..8)) {
        let v = build_vocab(&corpus, 1000).unwrap();
        for (i, r) in RESERVED.iter().enumerate() {
            prop_assert_eq!(v.token(i), *r);
        }
        for s in &corpus {
            prop_assert_eq!(&v.decode(&v.encode(s)), s);
        }
        prop_assert_eq!(v.encode(&["zzzz-unseen"]), vec![UNK]);
    }

    #[test]
    fn graph_cumax_matches_plain(x in vec(-10.0f64..10.0, 1..12)) {
        let store = ParamStore::new();
        let mut g = Graph::new(&store);
        let v = g.vector(x.clone());
        let y = g.cumax(v);
        prop_assert_eq!(g.value(y), &cumax(&x)[..]);
    }

    #[test]
    fn baselines_are_deterministic(n in 1usize..30, seed in any::<u64>()) {
        for kind in [BaselineKind::Left, BaselineKind::Right, BaselineKind::Balanced, BaselineKind::Random(seed)] {
            let t = baseline_tree(kind, n).unwrap();
            prop_assert_eq!(t.leaf_count(), n);
            prop_assert_eq!(&t, &baseline_tree(kind, n).unwrap());
        }
    }

    #[test]
    fn perplexity_of_uniform_model(v in 2usize..1000, tokens in 1usize..50) {
        let nll = tokens as f64 * (v as f64).ln();
        prop_assert!((perplexity(nll, tokens).unwrap() - v as f64).abs() < 1e-6 * v as f64);
    }
}
