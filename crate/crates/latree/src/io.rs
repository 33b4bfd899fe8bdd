//! Plain-text corpus, tree, vocabulary and BPE-code files.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use latree_core::tokenize::{BpeModel, Vocab};
use latree_core::treebank::{parse_ptb, LabeledTree};
use latree_core::Error;

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// One sentence per line, whitespace-tokenized.
pub fn read_corpus(path: &Path) -> Result<Vec<Vec<String>>> {
    Ok(read_text(path)?
        .lines()
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect())
}

pub fn format_corpus<S: AsRef<str>>(corpus: &[Vec<S>]) -> String {
    let mut out = String::new();
    for sentence in corpus {
        let words: Vec<&str> = sentence.iter().map(|w| w.as_ref()).collect();
        out.push_str(&words.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_corpus<S: AsRef<str>>(path: &Path, corpus: &[Vec<S>]) -> Result<()> {
    write_text(path, &format_corpus(corpus))
}

/// One bracketed tree per nonblank line.
pub fn read_trees(path: &Path) -> Result<Vec<LabeledTree>> {
    let text = read_text(path)?;
    let mut trees = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let tree = parse_ptb(line).with_context(|| format!("{}:{}", path.display(), i + 1))?;
        trees.push(tree);
    }
    Ok(trees)
}

pub fn write_trees(path: &Path, trees: &[String]) -> Result<()> {
    let mut out = trees.join("\n");
    out.push('\n');
    write_text(path, &out)
}

/// `token<TAB>count` per line, in id order.
pub fn format_vocab(vocab: &Vocab) -> String {
    let mut out = String::new();
    for (tok, count) in vocab.entries() {
        out.push_str(&format!("{}\t{}\n", tok, count));
    }
    out
}

pub fn parse_vocab(text: &str) -> Result<Vocab> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let (tok, count) = line
            .split_once('\t')
            .ok_or_else(|| Error::Data(format!("vocabulary line {} lacks a tab", i + 1)))?;
        let count: u64 = count
            .trim()
            .parse()
            .map_err(|_| Error::Data(format!("vocabulary line {}: bad count", i + 1)))?;
        entries.push((tok.to_string(), count));
    }
    Ok(Vocab::from_entries(entries)?)
}

pub fn read_vocab(path: &Path) -> Result<Vocab> {
    parse_vocab(&read_text(path)?).with_context(|| format!("in {}", path.display()))
}

/// One merge `left right` per line, in priority order.
pub fn format_merges(model: &BpeModel) -> String {
    let mut out = String::new();
    for (a, b) in model.merges() {
        out.push_str(&format!("{} {}\n", a, b));
    }
    out
}

pub fn parse_merges(text: &str) -> Result<BpeModel> {
    let mut merges = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => merges.push((a.to_string(), b.to_string())),
            _ => return Err(Error::Data(format!("merge line {} must hold two symbols", i + 1)).into()),
        }
    }
    Ok(BpeModel::from_merges(merges)?)
}
