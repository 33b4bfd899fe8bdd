//! Ordered-neurons LSTM decoder with monotone master gates.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, Var};
use crate::error::{bail, Result};
use crate::nn::{split_gates, Embedding, Linear, ParamBuilder};
use crate::seq2seq::attention::with_context;
use crate::treebank::{induce_tree, ScoreSequence, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnLstmConfig {
    pub vocab: usize,
    pub embed: usize,
    pub hidden: usize,
    /// Every master-gate slot covers `chunk` hidden units.
    pub chunk: usize,
    pub layers: usize,
    /// Width of the encoder context fed to the first layer; zero for a
    /// language model.
    pub context: usize,
}

impl OnLstmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            bail!(Config, "onlstm needs at least one layer");
        }
        if self.chunk == 0 || self.hidden == 0 || !self.hidden.is_multiple_of(self.chunk) {
            bail!(
                Config,
                "chunk factor {} must divide hidden size {}",
                self.chunk,
                self.hidden
            );
        }
        if self.vocab == 0 || self.embed == 0 {
            bail!(Config, "onlstm vocab and embed must be positive");
        }
        Ok(())
    }

    pub fn master_slots(&self) -> usize {
        self.hidden / self.chunk
    }
}

/// `cumsum(softmax(logits))` on plain values.
pub fn cumax(logits: &[f64]) -> Vec<f64> {
    let mut s = alloc::vec![0.0; logits.len()];
    crate::autodiff::softmax_slice(logits, &mut s);
    let mut acc = 0.0;
    s.iter()
        .map(|v| {
            acc += v;
            acc
        })
        .collect()
}

/// Zero-based expected split slot `D_m − Σ_k f̃_k` of a chunk-level master
/// forget gate.
pub fn expected_depth(master_forget: &[f64]) -> f64 {
    master_forget.len() as f64 - master_forget.iter().sum::<f64>()
}

/// One layer. Pre-activations are laid out as
/// `[f̃ logits; ĩ logits; i; f; o; ĉ]`.
#[derive(Debug, Clone, Copy)]
pub struct OnLstmCell {
    pub gates: Linear,
    pub input: usize,
    pub hidden: usize,
    pub chunk: usize,
}

pub struct CellOutput {
    pub hidden: Var,
    pub memory: Var,
    /// Chunk-level master forget gate `f̃`.
    pub master_forget: Var,
    /// Chunk-level master input gate `ĩ`.
    pub master_input: Var,
}

impl OnLstmCell {
    pub fn new(b: &mut ParamBuilder, name: &str, input: usize, hidden: usize, chunk: usize) -> Self {
        let slots = hidden / chunk;
        OnLstmCell {
            gates: Linear::new(b, name, input + hidden, 2 * slots + 4 * hidden, true),
            input,
            hidden,
            chunk,
        }
    }

    pub fn slots(&self) -> usize {
        self.hidden / self.chunk
    }

    pub fn step(&self, g: &mut Graph, x: Var, h_prev: Var, c_prev: Var) -> CellOutput {
        self.step_inner(g, x, h_prev, c_prev, None)
    }

    /// As [`step`](Self::step) but with the chunk-level master gates given
    /// directly instead of computed from the pre-activations.
    pub fn step_with_master(
        &self,
        g: &mut Graph,
        x: Var,
        h_prev: Var,
        c_prev: Var,
        master_forget: Var,
        master_input: Var,
    ) -> CellOutput {
        self.step_inner(g, x, h_prev, c_prev, Some((master_forget, master_input)))
    }

    fn step_inner(&self, g: &mut Graph, x: Var, h_prev: Var, c_prev: Var, master: Option<(Var, Var)>) -> CellOutput {
        let m = self.slots();
        let xh = g.concat(&[x, h_prev]);
        let z = self.gates.forward(g, xh);
        let (mf, mi) = match master {
            Some(pair) => pair,
            None => {
                let fl = g.slice(z, 0, m);
                let il = g.slice(z, m, m);
                let mf = g.cumax(fl);
                let ci = g.cumax(il);
                (mf, g.one_minus(ci))
            }
        };
        let gates = split_gates(g, z, 2 * m, self.hidden);
        let ft = g.repeat_each(mf, self.chunk);
        let it = g.repeat_each(mi, self.chunk);
        // Overlap combination of master and standard gates, following the
        // original ordered-neurons formulation.
        let omega = g.mul(ft, it);
        let f_rest = g.sub(ft, omega);
        let i_rest = g.sub(it, omega);
        let f_on = g.mul(gates.forget, omega);
        let f_hat = g.add(f_on, f_rest);
        let i_on = g.mul(gates.input, omega);
        let i_hat = g.add(i_on, i_rest);
        let keep = g.mul(f_hat, c_prev);
        let write = g.mul(i_hat, gates.candidate);
        let c = g.add(keep, write);
        let tc = g.tanh(c);
        let h = g.mul(gates.output, tc);
        CellOutput {
            hidden: h,
            memory: c,
            master_forget: mf,
            master_input: mi,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OnLstmDecoder {
    pub embedding: Embedding,
    pub layers: Vec<OnLstmCell>,
    pub output: Linear,
    pub hidden: usize,
    pub context: usize,
}

#[derive(Clone)]
pub struct OnLstmState {
    pub hidden: Vec<Var>,
    pub memory: Vec<Var>,
    /// `depths[layer][t]`: expected depth at input position `t`.
    pub depths: Vec<Vec<f64>>,
}

impl OnLstmState {
    pub fn top_hidden(&self) -> Var {
        *self.hidden.last().expect("at least one layer")
    }
}

impl OnLstmDecoder {
    pub fn new(b: &mut ParamBuilder, config: &OnLstmConfig) -> Result<Self> {
        config.validate()?;
        let mut layers = Vec::with_capacity(config.layers);
        for l in 0..config.layers {
            let input = if l == 0 {
                config.embed + config.context
            } else {
                config.hidden
            };
            let name = alloc::format!("onlstm.layer{}", l + 1);
            layers.push(OnLstmCell::new(b, &name, input, config.hidden, config.chunk));
        }
        Ok(OnLstmDecoder {
            embedding: Embedding::new(b, "onlstm.embedding", config.vocab, config.embed),
            layers,
            output: Linear::new(b, "onlstm.output", config.hidden + config.context, config.vocab, true),
            hidden: config.hidden,
            context: config.context,
        })
    }

    pub fn start(&self, g: &mut Graph) -> OnLstmState {
        let zero = g.zeros(self.hidden);
        let n = self.layers.len();
        OnLstmState {
            hidden: alloc::vec![zero; n],
            memory: alloc::vec![zero; n],
            depths: alloc::vec![Vec::new(); n],
        }
    }

    /// Reads `token` and returns next-token logits. Context enters the first
    /// layer's input and the output layer.
    pub fn step(&self, g: &mut Graph, state: &mut OnLstmState, token: usize, context: Option<Var>) -> Var {
        let e = self.embedding.lookup(g, token);
        let mut input = with_context(g, e, context);
        for (l, cell) in self.layers.iter().enumerate() {
            let out = cell.step(g, input, state.hidden[l], state.memory[l]);
            state.hidden[l] = out.hidden;
            state.memory[l] = out.memory;
            state.depths[l].push(expected_depth(g.value(out.master_forget)));
            input = out.hidden;
        }
        let hc = with_context(g, input, context);
        self.output.forward(g, hc)
    }

    /// Runs `[BOS, words.., EOS]` and returns the per-layer node scores at
    /// the word positions.
    pub fn depth_scores(&self, g: &mut Graph, words: &[usize]) -> Result<Vec<ScoreSequence>> {
        if words.is_empty() {
            bail!(Data, "cannot parse an empty sentence");
        }
        let mut state = self.start(g);
        self.step(g, &mut state, crate::tokenize::BOS, None);
        for &w in words {
            self.step(g, &mut state, w, None);
        }
        Ok(Self::scores_from(&state, 0, words.len()))
    }

    /// Node scores for the `n` words read at positions `offset+1..=offset+n`.
    pub fn scores_from(state: &OnLstmState, offset: usize, n: usize) -> Vec<ScoreSequence> {
        state
            .depths
            .iter()
            .map(|d| ScoreSequence::node(d[offset + 1..offset + 1 + n].to_vec()))
            .collect()
    }

    /// One tree per layer.
    pub fn parse_sentence_per_layer(&self, g: &mut Graph, words: &[usize]) -> Result<Vec<Tree>> {
        self.depth_scores(g, words)?.iter().map(induce_tree).collect()
    }
}
