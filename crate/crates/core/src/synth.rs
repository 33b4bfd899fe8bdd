//! Seeded PCFG sampling of parallel corpora with gold trees.
//!
//! Grammar text has one rule per line, `LHS -> RHS... : prob`, with `#`
//! starting a comment. The first rule's left-hand side is the start symbol.
//! Symbols that never appear on a left-hand side are terminals.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Error, Result};
use crate::treebank::LabeledTree;

pub const DEFAULT_MAX_DEPTH: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub lhs: String,
    pub rhs: Vec<String>,
    pub prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg {
    pub start: String,
    pub rules: Vec<Rule>,
    /// Expansion depth after which every nonterminal takes its shortest
    /// completion.
    pub max_depth: usize,
    by_lhs: BTreeMap<String, Vec<usize>>,
    /// Rule giving the smallest complete derivation of each nonterminal.
    shortest: BTreeMap<String, usize>,
}

impl Pcfg {
    pub fn new(rules: Vec<Rule>, max_depth: usize) -> Result<Self> {
        let Some(first) = rules.first() else {
            bail!(Config, "grammar has no rules");
        };
        let start = first.lhs.clone();
        let mut by_lhs: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for (i, r) in rules.iter().enumerate() {
            if r.rhs.is_empty() {
                bail!(Config, "rule for {} has an empty right-hand side", r.lhs);
            }
            if !(r.prob > 0.0 && r.prob <= 1.0) {
                bail!(
                    Config,
                    "rule {} -> {} has probability {} outside (0, 1]",
                    r.lhs,
                    r.rhs.join(" "),
                    r.prob
                );
            }
            by_lhs.entry(r.lhs.clone()).or_default().push(i);
        }
        for (lhs, ids) in &by_lhs {
            let total: f64 = ids.iter().map(|&i| rules[i].prob).sum();
            if (total - 1.0).abs() > 1e-9 {
                bail!(Config, "probabilities for {} sum to {}, not 1", lhs, total);
            }
        }
        if max_depth == 0 {
            bail!(Config, "max depth must be positive");
        }
        // fixpoint for the size of the smallest derivation of each symbol
        let mut cost: BTreeMap<&str, usize> = BTreeMap::new();
        let mut shortest = BTreeMap::new();
        loop {
            let mut changed = false;
            for (i, r) in rules.iter().enumerate() {
                let mut c = 1usize;
                let mut ok = true;
                for s in &r.rhs {
                    if by_lhs.contains_key(s) {
                        match cost.get(s.as_str()) {
                            Some(&k) => c += k,
                            None => {
                                ok = false;
                                break;
                            }
                        }
                    } else {
                        c += 1;
                    }
                }
                if ok && cost.get(r.lhs.as_str()).is_none_or(|&k| c < k) {
                    cost.insert(r.lhs.as_str(), c);
                    shortest.insert(r.lhs.clone(), i);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(bad) = by_lhs.keys().find(|k| !shortest.contains_key(*k)) {
            bail!(Config, "nonterminal {} has no finite derivation", bad);
        }
        Ok(Pcfg {
            start,
            rules,
            max_depth,
            by_lhs,
            shortest,
        })
    }

    pub fn nonterminals(&self) -> impl Iterator<Item = &str> {
        self.by_lhs.keys().map(|s| s.as_str())
    }

    pub fn is_nonterminal(&self, symbol: &str) -> bool {
        self.by_lhs.contains_key(symbol)
    }

    /// Terminals in first-appearance order.
    pub fn terminals(&self) -> Vec<&str> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for r in &self.rules {
            for s in &r.rhs {
                if !self.is_nonterminal(s) && seen.insert(s.as_str()) {
                    out.push(s.as_str());
                }
            }
        }
        out
    }

    pub fn rules_for(&self, lhs: &str) -> impl Iterator<Item = &Rule> {
        self.by_lhs
            .get(lhs)
            .into_iter()
            .flat_map(move |ids| ids.iter().map(move |&i| &self.rules[i]))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.rules {
            out.push_str(&format!("{} -> {} : {}\n", r.lhs, r.rhs.join(" "), r.prob));
        }
        out
    }

    fn expand(&self, symbol: &str, depth: usize, rng: &mut ChaCha8Rng) -> LabeledTree {
        let ids = &self.by_lhs[symbol];
        let rule = if depth >= self.max_depth {
            self.shortest[symbol]
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = *ids.last().expect("nonterminal has rules");
            for &i in ids {
                acc += self.rules[i].prob;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            pick
        };
        let children = self.rules[rule]
            .rhs
            .iter()
            .map(|s| {
                if self.is_nonterminal(s) {
                    self.expand(s, depth + 1, rng)
                } else {
                    LabeledTree::Leaf(s.clone())
                }
            })
            .collect();
        LabeledTree::Node {
            label: symbol.to_string(),
            children,
        }
    }

    /// Derivation number `index` under `seed`; independent of every other
    /// index.
    pub fn sample_one(&self, seed: u64, index: u64) -> LabeledTree {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        self.expand(&self.start, 1, &mut rng)
    }

    pub fn sample_trees(&self, seed: u64, count: usize) -> Vec<LabeledTree> {
        (0..count as u64).map(|i| self.sample_one(seed, i)).collect()
    }
}

/// Parses grammar text; the start symbol is the first rule's left side.
pub fn parse_grammar(text: &str, max_depth: usize) -> Result<Pcfg> {
    let mut rules = Vec::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse { offset: start, message };
        let (lhs, rest) = body
            .split_once("->")
            .ok_or_else(|| parse_err(format!("expected '->' in {:?}", body)))?;
        let (rhs, prob) = rest
            .rsplit_once(':')
            .ok_or_else(|| parse_err(format!("expected ': prob' in {:?}", body)))?;
        let lhs = lhs.trim();
        if lhs.is_empty() || lhs.contains(char::is_whitespace) {
            return Err(parse_err(format!("left-hand side must be one symbol, got {:?}", lhs)));
        }
        let prob: f64 = prob
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad probability {:?}", prob.trim())))?;
        rules.push(Rule {
            lhs: lhs.to_string(),
            rhs: rhs.split_whitespace().map(String::from).collect(),
            prob,
        });
    }
    Pcfg::new(rules, max_depth)
}

/// English-like toy grammar with NP, VP, PP and ADJP constituents.
pub const DEFAULT_GRAMMAR: &str = "\
S -> NP VP : 0.85
S -> NP VP PP : 0.15
NP -> DT NN : 0.45
NP -> DT ADJP NN : 0.2
NP -> NP PP : 0.15
NP -> NNP : 0.2
VP -> VB NP : 0.45
VP -> VB NP PP : 0.15
VP -> VB : 0.1
VP -> VB ADJP : 0.1
VP -> RB VB NP : 0.2
PP -> IN NP : 1
ADJP -> JJ : 0.6
ADJP -> RB JJ : 0.4
DT -> the : 0.3
DT -> a : 0.3
DT -> every : 0.1
DT -> some : 0.1
DT -> this : 0.1
DT -> that : 0.1
NN -> dog : 0.1
NN -> cat : 0.1
NN -> bird : 0.08
NN -> horse : 0.07
NN -> child : 0.08
NN -> teacher : 0.07
NN -> house : 0.07
NN -> garden : 0.07
NN -> river : 0.06
NN -> book : 0.06
NN -> table : 0.06
NN -> window : 0.06
NN -> city : 0.06
NN -> song : 0.06
NNP -> alice : 0.2
NNP -> bob : 0.2
NNP -> carol : 0.15
NNP -> dave : 0.15
NNP -> paris : 0.15
NNP -> rome : 0.15
VB -> saw : 0.12
VB -> liked : 0.1
VB -> found : 0.1
VB -> chased : 0.08
VB -> visited : 0.08
VB -> heard : 0.08
VB -> painted : 0.08
VB -> carried : 0.08
VB -> seemed : 0.07
VB -> remembered : 0.07
VB -> followed : 0.07
VB -> watched : 0.07
JJ -> big : 0.12
JJ -> small : 0.12
JJ -> red : 0.1
JJ -> old : 0.1
JJ -> happy : 0.1
JJ -> quiet : 0.1
JJ -> strange : 0.09
JJ -> bright : 0.09
JJ -> young : 0.09
JJ -> green : 0.09
RB -> very : 0.3
RB -> quietly : 0.2
RB -> often : 0.2
RB -> never : 0.15
RB -> rather : 0.15
IN -> in : 0.2
IN -> near : 0.2
IN -> with : 0.2
IN -> under : 0.15
IN -> behind : 0.15
IN -> from : 0.1
";

pub fn default_grammar() -> Pcfg {
    parse_grammar(DEFAULT_GRAMMAR, DEFAULT_MAX_DEPTH).expect("built-in grammar is valid")
}

/// Flat grammar for copy tasks: uniform length in `min_len..=max_len`,
/// each position an independent uniform draw from `vocab` words.
pub fn copy_grammar_text(vocab: usize, min_len: usize, max_len: usize) -> String {
    let mut out = String::new();
    let lens = max_len + 1 - min_len;
    for k in min_len..=max_len {
        out.push_str(&format!("S -> L{} : {}\n", k, 1.0 / lens as f64));
    }
    for k in min_len..=max_len {
        let rhs: Vec<&str> = core::iter::repeat_n("W", k).collect();
        out.push_str(&format!("L{} -> {} : 1\n", k, rhs.join(" ")));
    }
    for w in 0..vocab {
        out.push_str(&format!("W -> w{:03} : {}\n", w, 1.0 / vocab as f64));
    }
    out
}

pub fn copy_grammar(vocab: usize, min_len: usize, max_len: usize) -> Result<Pcfg> {
    if vocab == 0 || min_len == 0 || min_len > max_len {
        bail!(Config, "copy grammar needs vocab > 0 and 0 < min_len <= max_len");
    }
    parse_grammar(&copy_grammar_text(vocab, min_len, max_len), DEFAULT_MAX_DEPTH)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Transform {
    /// Word-by-word dictionary relabeling.
    #[serde(rename = "dictmap")]
    DictMap,
    /// Relabeling plus reversed child order inside every NP.
    #[serde(rename = "dictmap+np-swap")]
    DictMapNpSwap,
}

impl core::str::FromStr for Transform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dictmap" => Ok(Transform::DictMap),
            "dictmap+np-swap" | "np-swap" => Ok(Transform::DictMapNpSwap),
            other => Err(Error::Config(format!("unknown transform '{}'", other))),
        }
    }
}

impl core::fmt::Display for Transform {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Transform::DictMap => "dictmap",
            Transform::DictMapNpSwap => "dictmap+np-swap",
        })
    }
}

/// Bijective map from target words to a disjoint source vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Dictionary {
    pub forward: BTreeMap<String, String>,
}

impl Dictionary {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let forward: BTreeMap<String, String> = pairs.into_iter().collect();
        let images: BTreeSet<&String> = forward.values().collect();
        if images.len() != forward.len() {
            bail!(Config, "dictionary is not injective");
        }
        if let Some(clash) = images.iter().find(|w| forward.contains_key(w.as_str())) {
            bail!(Config, "source word {} is also a target word", clash);
        }
        Ok(Dictionary { forward })
    }

    /// The fixed dictionary `w -> "s_" + w` over `terminals`.
    pub fn for_terminals<S: AsRef<str>>(terminals: &[S]) -> Result<Self> {
        Self::new(
            terminals
                .iter()
                .map(|t| (t.as_ref().to_string(), format!("s_{}", t.as_ref()))),
        )
    }

    pub fn map(&self, word: &str) -> Result<&str> {
        self.forward
            .get(word)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::Data(format!("word {:?} missing from the dictionary", word)))
    }

    pub fn inverse(&self) -> Dictionary {
        Dictionary {
            forward: self.forward.iter().map(|(k, v)| (v.clone(), k.clone())).collect(),
        }
    }
}

/// Copy of `tree` with the child order reversed inside every NP.
pub fn np_swap(tree: &LabeledTree) -> LabeledTree {
    match tree {
        LabeledTree::Leaf(w) => LabeledTree::Leaf(w.clone()),
        LabeledTree::Node { label, children } => {
            let mut kids: Vec<LabeledTree> = children.iter().map(np_swap).collect();
            if label == "NP" {
                kids.reverse();
            }
            LabeledTree::Node {
                label: label.clone(),
                children: kids,
            }
        }
    }
}

pub fn derive_source(tree: &LabeledTree, transform: Transform, dict: &Dictionary) -> Result<Vec<String>> {
    let reordered;
    let t = match transform {
        Transform::DictMap => tree,
        Transform::DictMapNpSwap => {
            reordered = np_swap(tree);
            &reordered
        }
    };
    t.tokens().iter().map(|w| dict.map(w).map(String::from)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrammarSample {
    pub target: Vec<String>,
    pub tree: LabeledTree,
    pub source: Vec<String>,
}

/// `count` samples, each a pure function of `(grammar, seed, index)`.
pub fn sample(
    grammar: &Pcfg,
    seed: u64,
    count: usize,
    transform: Transform,
    dict: &Dictionary,
) -> Result<Vec<GrammarSample>> {
    (0..count as u64)
        .map(|i| {
            let tree = grammar.sample_one(seed, i);
            let source = derive_source(&tree, transform, dict)?;
            Ok(GrammarSample {
                target: tree.tokens().iter().map(|s| s.to_string()).collect(),
                tree,
                source,
            })
        })
        .collect()
}
