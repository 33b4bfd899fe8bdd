use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::beam::{beam_search, BeamConfig};
use super::decoder::DecoderKind;
use super::model::{Mode, Seq2SeqModel};
use super::parse::{eos_probe_parse, parse_target_teacher_forced};
use crate::error::{bail, Result};
use crate::metrics::{corpus_bleu, length_bucket_report, perplexity, BucketScore};
use crate::tokenize::remove_bpe;
use crate::treebank::{baseline_tree, corpus_f1, label_accuracy, BaselineKind, LabeledTree, Tree};

/// Held-out data. Gold trees are over the target tokens.
#[derive(Debug, Clone, Default)]
pub struct TestSet {
    pub sources: Option<Vec<Vec<usize>>>,
    pub targets: Vec<Vec<usize>>,
    /// Reference strings for BLEU; decoded targets when absent.
    pub references: Option<Vec<Vec<String>>>,
    pub gold: Option<Vec<LabeledTree>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub beam: BeamConfig,
    pub bucket_edges: Vec<usize>,
    pub labels: Vec<String>,
    pub random_seed: u64,
    /// Undo subword segmentation before BLEU.
    pub merge_subwords: bool,
    /// Skip decoding (and BLEU) when false.
    pub translate: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            beam: BeamConfig::default(),
            bucket_edges: alloc::vec![5, 10, 20],
            labels: ["ADJP", "NP", "PP"].iter().map(|s| String::from(*s)).collect(),
            random_seed: 1,
            merge_subwords: false,
            translate: true,
        }
    }
}

/// Columns of one evaluation row. Metrics that cannot be computed (no gold
/// trees, no parser, language-model mode) are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub decoder: DecoderKind,
    pub mode: Mode,
    pub sentences: usize,
    pub bleu: Option<f64>,
    pub perplexity: f64,
    /// Teacher-forced F1 per parsing layer (one entry for PRPN).
    pub f1_target: Option<Vec<f64>>,
    /// F1 with the source replaced by `[EOS]`, per parsing layer.
    pub probe_f1: Option<Vec<f64>>,
    /// Per layer, label -> recall of gold constituents with that label.
    pub label_accuracy: Option<Vec<BTreeMap<String, Option<f64>>>>,
    /// F1 of trivial trees against the same gold trees.
    pub baselines: Option<BTreeMap<String, f64>>,
    pub length_buckets: Option<Vec<BucketScore>>,
}

pub struct Evaluation {
    pub report: EvalReport,
    pub translations: Vec<Vec<String>>,
    /// `[sentence][layer]` teacher-forced parses.
    pub parses: Vec<Vec<Tree>>,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| String::from("-"), |x| alloc::format!("{:.2}", x))
}

impl EvalReport {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, String)> = Vec::new();
        rows.push(("decoder".into(), alloc::format!("{} ({})", self.decoder, self.mode)));
        rows.push(("sentences".into(), alloc::format!("{}", self.sentences)));
        rows.push(("BLEU".into(), fmt_opt(self.bleu)));
        rows.push(("perplexity".into(), alloc::format!("{:.3}", self.perplexity)));
        let layered = |name: &str, v: &Option<Vec<f64>>, rows: &mut Vec<(String, String)>| match v {
            Some(v) if v.len() == 1 => rows.push((name.into(), fmt_opt(Some(100.0 * v[0])))),
            Some(v) => {
                for (i, x) in v.iter().enumerate() {
                    rows.push((alloc::format!("{} layer {}", name, i + 1), fmt_opt(Some(100.0 * x))));
                }
            }
            None => rows.push((name.into(), "-".into())),
        };
        layered("F1(Target)", &self.f1_target, &mut rows);
        layered("F1(EOS probe)", &self.probe_f1, &mut rows);
        if let Some(acc) = &self.label_accuracy {
            for (i, layer) in acc.iter().enumerate() {
                for (label, v) in layer {
                    let name = if acc.len() == 1 {
                        alloc::format!("accuracy {}", label)
                    } else {
                        alloc::format!("accuracy {} layer {}", label, i + 1)
                    };
                    rows.push((name, fmt_opt(v.map(|x| 100.0 * x))));
                }
            }
        }
        if let Some(b) = &self.baselines {
            for (k, v) in b {
                rows.push((alloc::format!("baseline {}", k), fmt_opt(Some(100.0 * v))));
            }
        }
        if let Some(buckets) = &self.length_buckets {
            for b in buckets {
                let range = match b.hi {
                    Some(hi) => alloc::format!("[{}, {})", b.lo, hi),
                    None => alloc::format!("[{}, inf)", b.lo),
                };
                rows.push((
                    alloc::format!("BLEU len {}", range),
                    alloc::format!("{} (n={})", fmt_opt(b.mean), b.count),
                ));
            }
        }
        let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{:<width$}  {}", k, v, width = width);
        }
        out
    }
}

fn merged(tokens: Vec<String>, merge: bool) -> Vec<String> {
    if merge {
        remove_bpe(&tokens).words
    } else {
        tokens
    }
}

/// Per-layer F1 and label accuracy of `parses` (indexed `[sentence][layer]`).
pub fn score_parses(
    parses: &[Vec<Tree>],
    gold: &[LabeledTree],
    labels: &[String],
) -> Result<(Vec<f64>, Vec<BTreeMap<String, Option<f64>>>)> {
    let layers = parses.first().map_or(0, |p| p.len());
    let mut f1 = Vec::with_capacity(layers);
    let mut acc = Vec::with_capacity(layers);
    for l in 0..layers {
        let layer: Vec<Tree> = parses.iter().map(|p| p[l].clone()).collect();
        f1.push(corpus_f1(&layer, gold)?);
        let la = label_accuracy(&layer, gold, labels)?;
        acc.push(labels.iter().map(|k| (k.clone(), la.accuracy(k))).collect());
    }
    Ok((f1, acc))
}

/// F1 of left, right, balanced and random trees against `gold`.
pub fn baseline_f1(gold: &[LabeledTree], seed: u64) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (name, kind) in [
        ("left", BaselineKind::Left),
        ("right", BaselineKind::Right),
        ("balanced", BaselineKind::Balanced),
    ] {
        let trees: Vec<Tree> = gold
            .iter()
            .map(|t| baseline_tree(kind, t.leaf_count()))
            .collect::<Result<_>>()?;
        out.insert(String::from(name), corpus_f1(&trees, gold)?);
    }
    out.insert(String::from("random"), random_baseline_f1(gold, seed)?);
    Ok(out)
}

/// Random-split trees seeded per sentence by `seed + index`.
pub fn random_baseline_f1(gold: &[LabeledTree], seed: u64) -> Result<f64> {
    let trees: Vec<Tree> = gold
        .iter()
        .enumerate()
        .map(|(i, t)| baseline_tree(BaselineKind::Random(seed.wrapping_add(i as u64)), t.leaf_count()))
        .collect::<Result<_>>()?;
    corpus_f1(&trees, gold)
}

pub fn evaluate(model: &Seq2SeqModel, test: &TestSet, options: &EvalOptions) -> Result<Evaluation> {
    let n = test.targets.len();
    if n == 0 {
        bail!(Data, "empty test set");
    }
    let sources = match (model.mode(), &test.sources) {
        (Mode::Mt, None) => bail!(Data, "translation evaluation needs source sentences"),
        (Mode::Mt, Some(s)) if s.len() != n => bail!(Alignment, "{} sources for {} targets", s.len(), n),
        (Mode::Mt, Some(s)) => Some(s.as_slice()),
        (Mode::Lm, _) => None,
    };
    if let Some(g) = &test.gold {
        if g.len() != n {
            bail!(Alignment, "{} gold trees for {} targets", g.len(), n);
        }
    }
    let (mut nll, mut tokens) = (0.0, 0usize);
    for i in 0..n {
        let (l, t) = model.sentence_nll(sources.map(|s| s[i].as_slice()), &test.targets[i])?;
        nll += l;
        tokens += t;
    }
    let ppl = perplexity(nll, tokens)?;

    let mut translations = Vec::new();
    let (mut bleu, mut buckets) = (None, None);
    if let (Some(src), true) = (sources, options.translate) {
        for s in src {
            let hyp = beam_search(model, Some(s), &options.beam)?;
            translations.push(merged(model.tgt_vocab.decode(&hyp.tokens), options.merge_subwords));
        }
        let refs: Vec<Vec<String>> = match &test.references {
            Some(r) => r.iter().map(|x| merged(x.clone(), options.merge_subwords)).collect(),
            None => test
                .targets
                .iter()
                .map(|t| merged(model.tgt_vocab.decode(t), options.merge_subwords))
                .collect(),
        };
        bleu = Some(corpus_bleu(&translations, &refs)?);
        let pairs: Vec<(Vec<String>, Vec<String>)> = translations.iter().cloned().zip(refs).collect();
        buckets = Some(length_bucket_report(&pairs, &options.bucket_edges)?);
    }

    let parser = model.decoder.kind() != DecoderKind::Lstm;
    let mut parses = Vec::new();
    let (mut f1_target, mut probe_f1, mut label_acc, mut baselines) = (None, None, None, None);
    if parser {
        parses = parse_target_teacher_forced(model, sources, &test.targets)?;
        if let Some(gold) = &test.gold {
            let (f1, acc) = score_parses(&parses, gold, &options.labels)?;
            f1_target = Some(f1);
            label_acc = Some(acc);
            if model.mode() == Mode::Mt {
                let probe = eos_probe_parse(model, &test.targets)?;
                probe_f1 = Some(score_parses(&probe, gold, &options.labels)?.0);
            }
        }
    }
    if let Some(gold) = &test.gold {
        baselines = Some(baseline_f1(gold, options.random_seed)?);
    }
    Ok(Evaluation {
        report: EvalReport {
            decoder: model.decoder.kind(),
            mode: model.mode(),
            sentences: n,
            bleu,
            perplexity: ppl,
            f1_target,
            probe_f1,
            label_accuracy: label_acc,
            baselines,
            length_buckets: buckets,
        },
        translations,
        parses,
    })
}
