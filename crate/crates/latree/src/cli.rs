//! Subcommand definitions and their implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use latree_core::metrics::{corpus_bleu, length_bucket_report, sentence_bleu_smoothed};
use latree_core::seq2seq::evaluate::{evaluate, EvalOptions, TestSet};
use latree_core::seq2seq::{
    beam_search, eos_probe_parse, parse_target_teacher_forced, train, BeamConfig, DecoderKind, Example, Mode,
    ModelConfig, Seq2SeqModel, TrainConfig,
};
use latree_core::synth::{
    copy_grammar, default_grammar, parse_grammar, sample, Dictionary, Pcfg, Transform, DEFAULT_MAX_DEPTH,
};
use latree_core::tokenize::{apply_bpe, build_vocab, learn_bpe, remove_bpe};
use latree_core::treebank::{corpus_f1, label_accuracy, sentence_f1, Tree};
use latree_core::Error;

use crate::config::{keys_help, DataConfig, Settings};
use crate::io;
use crate::manifest::{manifest_path, RunManifest};
use crate::report;
use crate::run::RunDir;

#[derive(Debug, Parser)]
#[command(
    name = "latree",
    version,
    about = "Latent-tree decoders for translation and language modelling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Lm,
    Mt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DecoderArg {
    Lstm,
    Prpn,
    Onlstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParseMode {
    TeacherForced,
    EosProbe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TransformArg {
    Dictmap,
    #[value(name = "dictmap+np-swap", alias = "np-swap")]
    DictmapNpSwap,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a parallel corpus with gold trees from a PCFG.
    ///
    /// GRAMMAR is a grammar file, or one of the built-ins `builtin:default`
    /// and `builtin:copy` (200 words, lengths 3 to 10). Writes
    /// OUT/SPLIT.src, OUT/SPLIT.tgt, OUT/SPLIT.gold and OUT/dict.tsv.
    GenSynth {
        #[arg(long)]
        grammar: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value = "dictmap")]
        transform: TransformArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "train")]
        split: String,
    },
    /// Learn BPE merges from a corpus.
    LearnBpe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        merges: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment a corpus with learned merges.
    ApplyBpe {
        #[arg(long)]
        codes: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Undo BPE segmentation.
    RemoveBpe {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on DATA/train.{src,tgt} (DATA/dev.* for early stopping).
    #[command(after_help = keys_help())]
    Train {
        #[arg(long, value_enum)]
        mode: ModeArg,
        #[arg(long, value_enum)]
        decoder: DecoderArg,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Beam-search translation of a source file.
    Translate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 5)]
        beam: usize,
        #[arg(long, default_value_t = 1.0)]
        lenpen: f64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Induce trees over target sentences. Writes OUT for PRPN and
    /// OUT.layer1, OUT.layer2, ... for ON-LSTM.
    Parse {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value = "teacher-forced")]
        mode: ParseMode,
        #[arg(long)]
        src: Option<PathBuf>,
        #[arg(long)]
        tgt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Unlabeled bracketing F1 (and per-label recall) of predicted trees.
    EvalF1 {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, value_delimiter = ',')]
        labels: Vec<String>,
        /// Also write a JSON report with per-sentence scores.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Corpus BLEU with optional length buckets.
    EvalBleu {
        #[arg(long)]
        hyp: PathBuf,
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long, value_delimiter = ',')]
        buckets: Vec<usize>,
        /// Merge `@@` subwords in both files before scoring.
        #[arg(long)]
        remove_bpe: bool,
        /// Also write a JSON report with per-sentence scores.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Full evaluation of a run on DATA/SPLIT.*; writes RUN/report.json and
    /// RUN/report.txt.
    Evaluate {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, default_value_t = 5)]
        beam: usize,
        #[arg(long, default_value_t = 1.0)]
        lenpen: f64,
        #[arg(long, value_delimiter = ',', default_value = "ADJP,NP,PP")]
        labels: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,20")]
        buckets: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Median, standard deviation and max of every metric across runs.
    Report {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Also write the table as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

/// Resolves a grammar argument to a PCFG.
pub fn load_grammar(name: &str) -> Result<Pcfg> {
    match name {
        "builtin:default" => Ok(default_grammar()),
        "builtin:copy" => Ok(copy_grammar(200, 3, 10)?),
        path => Ok(parse_grammar(&io::read_text(Path::new(path))?, DEFAULT_MAX_DEPTH)
            .with_context(|| format!("in grammar {}", path))?),
    }
}

fn mode_of(m: ModeArg) -> Mode {
    match m {
        ModeArg::Lm => Mode::Lm,
        ModeArg::Mt => Mode::Mt,
    }
}

fn decoder_of(d: DecoderArg) -> DecoderKind {
    match d {
        DecoderArg::Lstm => DecoderKind::Lstm,
        DecoderArg::Prpn => DecoderKind::Prpn,
        DecoderArg::Onlstm => DecoderKind::OnLstm,
    }
}

fn split_files(data: &Path, split: &str) -> (PathBuf, PathBuf, PathBuf) {
    (
        data.join(format!("{}.src", split)),
        data.join(format!("{}.tgt", split)),
        data.join(format!("{}.gold", split)),
    )
}

fn examples(model_mode: Mode, src: Option<&[Vec<String>]>, tgt: &[Vec<String>], model: &Seq2SeqModel) -> Vec<Example> {
    (0..tgt.len())
        .map(|i| {
            let target = model.tgt_vocab.encode(&tgt[i]);
            match (model_mode, src, &model.src_vocab) {
                (Mode::Mt, Some(s), Some(v)) => Example::mt(v.encode(&s[i]), target),
                _ => Example::lm(target),
            }
        })
        .collect()
}

fn check_parallel(src: &[Vec<String>], tgt: &[Vec<String>]) -> Result<()> {
    if src.len() != tgt.len() {
        return Err(Error::Alignment(format!("{} source lines for {} target lines", src.len(), tgt.len())).into());
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynth {
            grammar,
            seed,
            count,
            transform,
            out,
            split,
        } => {
            let g = load_grammar(&grammar)?;
            let transform = match transform {
                TransformArg::Dictmap => Transform::DictMap,
                TransformArg::DictmapNpSwap => Transform::DictMapNpSwap,
            };
            let mut manifest = RunManifest::new("gen-synth").seed(seed).config(&serde_json::json!({
                "grammar": grammar,
                "count": count,
                "transform": transform.to_string(),
                "split": split,
                "max_depth": g.max_depth,
                "depth_cap_note": "derivations reaching the depth cap take each symbol's shortest completion, which biases deep samples toward short expansions",
            }));
            if Path::new(&grammar).is_file() {
                manifest = manifest.input(Path::new(&grammar))?;
            }
            let (s, t, gold) = split_files(&out, &split);
            let dict_path = out.join("dict.tsv");
            for p in [&s, &t, &gold, &dict_path] {
                manifest = manifest.output(p);
            }
            std::fs::create_dir_all(&out)?;
            manifest.write(&out.join(format!("{}.manifest.json", split)))?;
            let terminals = g.terminals();
            let dict = Dictionary::for_terminals(&terminals)?;
            let samples = sample(&g, seed, count, transform, &dict)?;
            io::write_corpus(&s, &samples.iter().map(|x| x.source.clone()).collect::<Vec<_>>())?;
            io::write_corpus(&t, &samples.iter().map(|x| x.target.clone()).collect::<Vec<_>>())?;
            io::write_trees(&gold, &samples.iter().map(|x| x.tree.to_ptb()).collect::<Vec<_>>())?;
            let mut d = String::new();
            for (k, v) in &dict.forward {
                d.push_str(&format!("{}\t{}\n", k, v));
            }
            io::write_text(&dict_path, &d)?;
        }
        Command::LearnBpe { input, merges, out } => {
            RunManifest::new("learn-bpe")
                .config(&serde_json::json!({ "merges": merges }))
                .input(&input)?
                .output(&out)
                .write(&manifest_path(&out, false))?;
            let corpus = io::read_corpus(&input)?;
            let model = learn_bpe(&corpus, merges)?;
            io::write_text(&out, &io::format_merges(&model))?;
        }
        Command::ApplyBpe { codes, input, out } => {
            RunManifest::new("apply-bpe")
                .input(&codes)?
                .input(&input)?
                .output(&out)
                .write(&manifest_path(&out, false))?;
            let model = io::parse_merges(&io::read_text(&codes)?)?;
            let corpus = io::read_corpus(&input)?;
            let seg: Vec<Vec<String>> = corpus.iter().map(|s| apply_bpe(&model, s)).collect();
            io::write_corpus(&out, &seg)?;
        }
        Command::RemoveBpe { input, out } => {
            RunManifest::new("remove-bpe")
                .input(&input)?
                .output(&out)
                .write(&manifest_path(&out, false))?;
            let corpus = io::read_corpus(&input)?;
            let merged: Vec<Vec<String>> = corpus.iter().map(|s| remove_bpe(s).words).collect();
            io::write_corpus(&out, &merged)?;
        }
        Command::Train {
            mode,
            decoder,
            config,
            data,
            out,
            seed,
        } => cmd_train(mode_of(mode), decoder_of(decoder), config.as_deref(), &data, &out, seed)?,
        Command::Translate {
            run,
            input,
            beam,
            lenpen,
            out,
        } => {
            let model = RunDir::new(&run).load()?;
            if model.mode() != Mode::Mt {
                bail!(Error::Config("translate needs a translation (mt) run".into()));
            }
            if let Some(o) = &out {
                RunManifest::new("translate")
                    .config(&serde_json::json!({ "beam": beam, "lenpen": lenpen }))
                    .input(&run.join("params.ltsq"))?
                    .input(&input)?
                    .output(o)
                    .write(&manifest_path(o, false))?;
            }
            let src_vocab = model.src_vocab.as_ref().expect("mt run has a source vocabulary");
            let config = BeamConfig {
                beam,
                len_penalty: lenpen,
                max_len: None,
            };
            let mut lines = Vec::new();
            for s in io::read_corpus(&input)? {
                if s.is_empty() {
                    lines.push(Vec::new());
                    continue;
                }
                let hyp = beam_search(&model, Some(&src_vocab.encode(&s)), &config)?;
                lines.push(model.tgt_vocab.decode(&hyp.tokens));
            }
            match out {
                Some(o) => io::write_corpus(&o, &lines)?,
                None => print!("{}", io::format_corpus(&lines)),
            }
        }
        Command::Parse {
            run,
            mode,
            src,
            tgt,
            out,
        } => cmd_parse(&run, mode, src.as_deref(), &tgt, &out)?,
        Command::EvalF1 {
            pred,
            gold,
            labels,
            json,
        } => cmd_eval_f1(&pred, &gold, &labels, json.as_deref())?,
        Command::EvalBleu {
            hyp,
            reference,
            buckets,
            remove_bpe: merge,
            json,
        } => cmd_eval_bleu(&hyp, &reference, &buckets, merge, json.as_deref())?,
        Command::Evaluate {
            run,
            data,
            split,
            beam,
            lenpen,
            labels,
            buckets,
            seed,
        } => cmd_evaluate(&run, &data, &split, beam, lenpen, labels, buckets, seed)?,
        Command::Report { runs, json } => {
            let metrics: Vec<_> = runs
                .iter()
                .map(|r| report::read_run_metrics(r))
                .collect::<Result<_>>()?;
            let rows = report::aggregate(&metrics)?;
            print!("{}", report::format_table(&rows));
            if let Some(j) = json {
                let mut m = RunManifest::new("report");
                for r in &runs {
                    let f = if r.is_dir() { r.join("report.json") } else { r.clone() };
                    m = m.input(&f)?;
                }
                m.output(&j).write(&manifest_path(&j, false))?;
                io::write_text(&j, &serde_json::to_string_pretty(&rows)?)?;
            }
        }
    }
    Ok(())
}

fn cmd_eval_f1(pred: &Path, gold: &Path, labels: &[String], json: Option<&Path>) -> Result<()> {
    if let Some(j) = json {
        RunManifest::new("eval-f1")
            .config(&serde_json::json!({ "labels": labels }))
            .input(pred)?
            .input(gold)?
            .output(j)
            .write(&manifest_path(j, false))?;
    }
    let p = io::read_trees(pred)?;
    let g = io::read_trees(gold)?;
    let f1 = corpus_f1(&p, &g)?;
    println!("f1\t{:.6}", f1);
    let mut accuracy = serde_json::Map::new();
    if !labels.is_empty() {
        let acc = label_accuracy(&p, &g, labels)?;
        for l in labels {
            let a = acc.accuracy(l);
            match a {
                Some(a) => println!("accuracy_{}\t{:.6}", l, a),
                None => println!("accuracy_{}\t-", l),
            }
            accuracy.insert(l.clone(), serde_json::json!(a));
        }
    }
    if let Some(j) = json {
        let per_sentence = p
            .iter()
            .zip(&g)
            .map(|(a, b)| sentence_f1(a, b))
            .collect::<latree_core::Result<Vec<_>>>()?;
        let doc = serde_json::json!({ "f1": f1, "label_accuracy": accuracy, "per_sentence": per_sentence });
        io::write_text(j, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    Ok(())
}

fn cmd_eval_bleu(hyp: &Path, reference: &Path, buckets: &[usize], merge: bool, json: Option<&Path>) -> Result<()> {
    if let Some(j) = json {
        RunManifest::new("eval-bleu")
            .config(&serde_json::json!({ "buckets": buckets, "remove_bpe": merge }))
            .input(hyp)?
            .input(reference)?
            .output(j)
            .write(&manifest_path(j, false))?;
    }
    let mut h = io::read_corpus(hyp)?;
    let mut r = io::read_corpus(reference)?;
    if merge {
        h = h.iter().map(|s| remove_bpe(s).words).collect();
        r = r.iter().map(|s| remove_bpe(s).words).collect();
    }
    let bleu = corpus_bleu(&h, &r)?;
    println!("bleu\t{:.4}", bleu);
    let pairs: Vec<(Vec<String>, Vec<String>)> = h.into_iter().zip(r).collect();
    let per_bucket = if buckets.is_empty() {
        Vec::new()
    } else {
        length_bucket_report(&pairs, buckets)?
    };
    for b in &per_bucket {
        let hi = b.hi.map_or_else(|| "inf".to_string(), |x| x.to_string());
        let mean = b.mean.map_or_else(|| "-".to_string(), |x| format!("{:.4}", x));
        println!("bucket[{},{})\t{}\t{}", b.lo, hi, mean, b.count);
    }
    if let Some(j) = json {
        let per_sentence: Vec<f64> = pairs.iter().map(|(a, b)| sentence_bleu_smoothed(a, b).score).collect();
        let doc = serde_json::json!({ "corpus_bleu": bleu, "per_bucket": per_bucket, "per_sentence": per_sentence });
        io::write_text(j, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    }
    Ok(())
}

fn cmd_train(
    mode: Mode,
    decoder: DecoderKind,
    config: Option<&Path>,
    data: &Path,
    out: &Path,
    seed: u64,
) -> Result<()> {
    let settings = match config {
        Some(c) => Settings::parse(&io::read_text(c)?)?,
        None => Settings::default(),
    };
    let mut data_cfg = DataConfig::default();
    settings.apply_data(&mut data_cfg)?;
    let (train_src, train_tgt, _) = split_files(data, "train");
    let (dev_src, dev_tgt, _) = split_files(data, "dev");
    let tgt = io::read_corpus(&train_tgt)?;
    let src = match mode {
        Mode::Mt => {
            let s = io::read_corpus(&train_src)?;
            check_parallel(&s, &tgt)?;
            Some(s)
        }
        Mode::Lm => None,
    };
    let tgt_vocab = build_vocab(&tgt, data_cfg.max_tgt_vocab)?;
    let src_vocab = src
        .as_ref()
        .map(|s| build_vocab(s, data_cfg.max_src_vocab))
        .transpose()?;
    let mut model_cfg = ModelConfig::new(
        mode,
        decoder,
        src_vocab.as_ref().map_or(0, |v| v.len()),
        tgt_vocab.len(),
    );
    settings.apply_model(&mut model_cfg)?;
    model_cfg.seed = seed;
    let mut train_cfg = TrainConfig::defaults_for(mode, decoder);
    settings.apply_train(&mut train_cfg)?;
    train_cfg.seed = seed;

    let has_dev = dev_tgt.is_file() && (mode == Mode::Lm || dev_src.is_file());
    let mut manifest = RunManifest::new("train")
        .seed(seed)
        .config(&serde_json::json!({
            "model": model_cfg,
            "train": train_cfg,
            "data": { "max_src_vocab": data_cfg.max_src_vocab, "max_tgt_vocab": data_cfg.max_tgt_vocab },
            "batching": "length-bucketed: seeded shuffle, stable sort by target length, seeded shuffle of batches",
        }))
        .input(&train_tgt)?;
    if mode == Mode::Mt {
        manifest = manifest.input(&train_src)?;
    }
    if has_dev {
        manifest = manifest.input(&dev_tgt)?;
        if mode == Mode::Mt {
            manifest = manifest.input(&dev_src)?;
        }
    }
    if let Some(c) = config {
        manifest = manifest.input(c)?;
    }
    std::fs::create_dir_all(out)?;
    manifest.output(out).write(&manifest_path(out, true))?;

    let mut model = Seq2SeqModel::new(model_cfg, src_vocab, tgt_vocab)?;
    let train_set = examples(mode, src.as_deref(), &tgt, &model);
    let dev_set = if has_dev {
        let dt = io::read_corpus(&dev_tgt)?;
        let ds = match mode {
            Mode::Mt => {
                let s = io::read_corpus(&dev_src)?;
                check_parallel(&s, &dt)?;
                Some(s)
            }
            Mode::Lm => None,
        };
        examples(mode, ds.as_deref(), &dt, &model)
    } else {
        Vec::new()
    };
    let result = train(&mut model, &train_set, &dev_set, &train_cfg, |e| {
        let dev = e.dev_loss.map_or_else(|| "-".to_string(), |d| format!("{:.4}", d));
        eprintln!(
            "epoch {} steps {} train {:.4} dev {}",
            e.epoch, e.steps, e.train_loss, dev
        );
    });
    let run_dir = RunDir::new(out);
    match result {
        Ok(log) => run_dir.save(&model, &train_cfg, &log)?,
        Err(e @ Error::Numerical(_)) => {
            crate::checkpoint::save(&run_dir.file("diverged.ltsq"), &model.store)?;
            io::write_text(&run_dir.file("diverged.txt"), &format!("{}\n", e))?;
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn cmd_parse(run: &Path, mode: ParseMode, src: Option<&Path>, tgt: &Path, out: &Path) -> Result<()> {
    let model = RunDir::new(run).load()?;
    let targets = io::read_corpus(tgt)?;
    let tgt_ids: Vec<Vec<usize>> = targets.iter().map(|t| model.tgt_vocab.encode(t)).collect();
    let layers = match model.decoder.kind() {
        DecoderKind::Lstm => bail!(Error::Config("the lstm decoder does not induce trees".into())),
        DecoderKind::Prpn => 1,
        DecoderKind::OnLstm => model.config.layers,
    };
    let outputs: Vec<PathBuf> = if model.decoder.kind() == DecoderKind::OnLstm {
        (1..=layers)
            .map(|k| {
                let mut s = out.as_os_str().to_owned();
                s.push(format!(".layer{}", k));
                PathBuf::from(s)
            })
            .collect()
    } else {
        vec![out.to_path_buf()]
    };
    let mut manifest = RunManifest::new("parse")
        .config(&serde_json::json!({ "mode": format!("{:?}", mode) }))
        .input(&run.join("params.ltsq"))?
        .input(tgt)?;
    let sources = match (mode, model.mode()) {
        (ParseMode::TeacherForced, Mode::Mt) => {
            let Some(s) = src else {
                bail!(Error::Config(
                    "teacher-forced parsing with a translation run needs --src".into()
                ));
            };
            manifest = manifest.input(s)?;
            let srcs = io::read_corpus(s)?;
            check_parallel(&srcs, &targets)?;
            let v = model.src_vocab.as_ref().expect("mt run has a source vocabulary");
            Some(srcs.iter().map(|x| v.encode(x)).collect::<Vec<_>>())
        }
        _ => None,
    };
    for o in &outputs {
        manifest = manifest.output(o);
    }
    manifest.write(&manifest_path(out, false))?;
    let trees: Vec<Vec<Tree>> = match mode {
        ParseMode::TeacherForced => parse_target_teacher_forced(&model, sources.as_deref(), &tgt_ids)?,
        ParseMode::EosProbe => eos_probe_parse(&model, &tgt_ids)?,
    };
    for (k, path) in outputs.iter().enumerate() {
        let lines: Vec<String> = trees
            .iter()
            .zip(&targets)
            .map(|(t, words)| t[k].to_ptb(words))
            .collect();
        io::write_trees(path, &lines)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    run: &Path,
    data: &Path,
    split: &str,
    beam: usize,
    lenpen: f64,
    labels: Vec<String>,
    buckets: Vec<usize>,
    seed: u64,
) -> Result<()> {
    let model = RunDir::new(run).load()?;
    let (src_path, tgt_path, gold_path) = split_files(data, split);
    let targets = io::read_corpus(&tgt_path)?;
    let mut manifest = RunManifest::new("evaluate")
        .seed(seed)
        .config(&serde_json::json!({ "split": split, "beam": beam, "lenpen": lenpen, "labels": labels, "buckets": buckets }))
        .input(&run.join("params.ltsq"))?
        .input(&tgt_path)?;
    let sources = match model.mode() {
        Mode::Mt => {
            manifest = manifest.input(&src_path)?;
            let s = io::read_corpus(&src_path)?;
            check_parallel(&s, &targets)?;
            let v = model.src_vocab.as_ref().expect("mt run has a source vocabulary");
            Some(s.iter().map(|x| v.encode(x)).collect())
        }
        Mode::Lm => None,
    };
    let gold = if gold_path.is_file() {
        manifest = manifest.input(&gold_path)?;
        Some(io::read_trees(&gold_path)?)
    } else {
        None
    };
    let json_path = run.join("report.json");
    let text_path = run.join("report.txt");
    manifest
        .output(&json_path)
        .output(&text_path)
        .write(&run.join("evaluate.manifest.json"))?;
    let test = TestSet {
        sources,
        targets: targets.iter().map(|t| model.tgt_vocab.encode(t)).collect(),
        references: Some(targets.clone()),
        gold,
    };
    let options = EvalOptions {
        beam: BeamConfig {
            beam,
            len_penalty: lenpen,
            max_len: None,
        },
        bucket_edges: buckets,
        labels,
        random_seed: seed,
        merge_subwords: false,
        translate: true,
    };
    let result = evaluate(&model, &test, &options)?;
    io::write_text(&json_path, &(serde_json::to_string_pretty(&result.report)? + "\n"))?;
    let text = result.report.to_text();
    io::write_text(&text_path, &text)?;
    print!("{}", text);
    Ok(())
}
