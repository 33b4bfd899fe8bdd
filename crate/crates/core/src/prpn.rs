//! Parsing-Reading-Predict decoder: a convolutional syntactic-distance
//! parser, a memory-tape reader with gated intra-attention, and a
//! feedforward predictor.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, ParamId, Var};
use crate::error::{bail, Result};
use crate::nn::{split_gates, Embedding, Linear, ParamBuilder};
use crate::seq2seq::attention::with_context;
use crate::treebank::{induce_tree, ScoreSequence, Tree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrpnConfig {
    pub vocab: usize,
    pub embed: usize,
    /// Width of the reader state (and of the tape entries).
    pub hidden: usize,
    /// Look-back range of the distance kernel.
    pub lookback: usize,
    pub temperature: f64,
    pub parser_hidden: usize,
    pub head_hidden: usize,
    /// Width of the encoder context; zero in language-model mode.
    pub context: usize,
}

impl PrpnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 {
            bail!(Config, "prpn lookback must be at least 1");
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            bail!(Config, "prpn temperature must be positive, got {}", self.temperature);
        }
        for (name, v) in [
            ("vocab", self.vocab),
            ("embed", self.embed),
            ("hidden", self.hidden),
            ("parser_hidden", self.parser_hidden),
            ("head_hidden", self.head_hidden),
        ] {
            if v == 0 {
                bail!(Config, "prpn {} must be positive", name);
            }
        }
        Ok(())
    }
}

/// Kernel over a window of `lookback + 1` embeddings followed by a
/// one-wide kernel down to a scalar distance.
#[derive(Debug, Clone, Copy)]
pub struct ParserParams {
    pub pads: ParamId,
    pub conv: Linear,
    pub distance: Linear,
    pub lookback: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PrpnDecoder {
    pub embedding: Embedding,
    pub parser: ParserParams,
    pub key_hidden: Linear,
    pub key_input: Linear,
    pub cell: Linear,
    pub head_hidden: Linear,
    pub head_out: Linear,
    pub hidden: usize,
    pub embed: usize,
    pub context: usize,
    pub temperature: f64,
}

/// Per-sentence reader state. Tapes hold `h_1..h_{t-1}` and `c_1..c_{t-1}`.
#[derive(Clone)]
pub struct LstmnState {
    pub hidden_tape: Vec<Var>,
    pub memory_tape: Vec<Var>,
    /// Distance of every token read so far.
    pub distances: Vec<Var>,
    /// The last `lookback` embeddings (learned pads before the start).
    window: Vec<Var>,
    zero: Var,
}

impl LstmnState {
    pub fn step_index(&self) -> usize {
        self.hidden_tape.len() + 1
    }

    /// Previous reader output, or zeros before the first step.
    pub fn last_hidden(&self) -> Var {
        self.hidden_tape.last().copied().unwrap_or(self.zero)
    }
}

/// Gate values for one step `t` over tape entries `1..t-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateRow {
    /// `alpha[k] = α_{k+1}`.
    pub alpha: Vec<f64>,
    /// `gates[k] = g_{k+1}`.
    pub gates: Vec<f64>,
}

/// `(hardtanh((d_t − d_j)·τ) + 1) / 2`
pub fn alpha(d_t: f64, d_j: f64, temperature: f64) -> f64 {
    (((d_t - d_j) * temperature).clamp(-1.0, 1.0) + 1.0) / 2.0
}

/// Gates for step `t` (1-based) given `distances[p - 1] = d_p`.
pub fn gate_row(distances: &[f64], t: usize, temperature: f64) -> Result<GateRow> {
    if !(temperature > 0.0) {
        bail!(Config, "temperature must be positive, got {}", temperature);
    }
    if t == 0 || distances.len() < t {
        bail!(Contract, "gate row for step {} with {} distances", t, distances.len());
    }
    let d_t = distances[t - 1];
    let alpha: Vec<f64> = distances[..t - 1]
        .iter()
        .map(|&d_j| self::alpha(d_t, d_j, temperature))
        .collect();
    let mut gates = vec![1.0; t - 1];
    for k in (0..t.saturating_sub(2)).rev() {
        gates[k] = gates[k + 1] * alpha[k + 1];
    }
    Ok(GateRow { alpha, gates })
}

/// Structured intra-attention weights `s_i = g_i s̃_i / Σ g`, where `s̃` is
/// softmax of `scores` (already scaled).
pub fn structured_weights(scores: &[f64], gates: &[f64]) -> Vec<f64> {
    let mut s = vec![0.0; scores.len()];
    crate::autodiff::softmax_slice(scores, &mut s);
    let total: f64 = gates.iter().sum();
    assert!(total > 0.0, "gate row sums to zero");
    s.iter().zip(gates).map(|(a, g)| a * g / total).collect()
}

/// Result of one reading step.
pub struct PrpnStep {
    pub hidden: Var,
    pub memory: Var,
    pub logits: Var,
}

impl PrpnDecoder {
    pub fn new(b: &mut ParamBuilder, config: &PrpnConfig) -> Result<Self> {
        config.validate()?;
        let (e, h, l) = (config.embed, config.hidden, config.lookback);
        Ok(PrpnDecoder {
            embedding: Embedding::new(b, "prpn.embedding", config.vocab, e),
            parser: ParserParams {
                pads: b.uniform("prpn.parser.pads", &[l, e]),
                conv: Linear::new(b, "prpn.parser.conv", (l + 1) * e, config.parser_hidden, true),
                distance: Linear::new(b, "prpn.parser.distance", config.parser_hidden, 1, true),
                lookback: l,
            },
            key_hidden: Linear::new(b, "prpn.key_hidden", h, h, false),
            key_input: Linear::new(b, "prpn.key_input", e, h, false),
            cell: Linear::new(b, "prpn.cell", e + config.context + 2 * h, 4 * h, true),
            head_hidden: Linear::new(b, "prpn.head.hidden", h + config.context, config.head_hidden, true),
            head_out: Linear::new(b, "prpn.head.out", config.head_hidden, config.vocab, true),
            hidden: h,
            embed: e,
            context: config.context,
            temperature: config.temperature,
        })
    }

    pub fn start(&self, g: &mut Graph) -> LstmnState {
        let pads = g.param(self.parser.pads);
        let window = (0..self.parser.lookback).map(|i| g.row(pads, i)).collect();
        LstmnState {
            hidden_tape: Vec::new(),
            memory_tape: Vec::new(),
            distances: Vec::new(),
            window,
            zero: g.zeros(self.hidden),
        }
    }

    /// `ReLU(W_d · ReLU(W_c·[e_{t−L};…;e_t] + b_c) + b_d)` for the newest
    /// token `x`, sliding the window forward.
    fn distance(&self, g: &mut Graph, window: &mut Vec<Var>, x: Var) -> Var {
        let mut parts = window.clone();
        parts.push(x);
        let cat = g.concat(&parts);
        let a = self.parser.conv.forward(g, cat);
        let a = g.relu(a);
        let d = self.parser.distance.forward(g, a);
        let d = g.relu(d);
        window.remove(0);
        window.push(x);
        g.element(d, 0)
    }

    /// Distances for a whole token sequence.
    pub fn syntactic_distances(&self, g: &mut Graph, tokens: &[usize]) -> Vec<Var> {
        let mut state = self.start(g);
        tokens
            .iter()
            .map(|&t| {
                let x = self.embedding.lookup(g, t);
                self.distance(g, &mut state.window, x)
            })
            .collect()
    }

    /// Gate vector over the tape for the current step; `d` holds the
    /// distances up to and including the current token.
    fn gates(&self, g: &mut Graph, d: &[Var]) -> Var {
        let m = d.len() - 1;
        if m == 1 {
            return g.vector(vec![1.0]);
        }
        let prev = g.concat(&d[1..m]);
        let cur = g.broadcast(d[m], m - 1);
        let diff = g.sub(cur, prev);
        let scaled = g.scale(diff, self.temperature);
        let clipped = g.hardtanh(scaled);
        let alpha = g.affine(clipped, 0.5, 0.5);
        let products = g.suffix_prod(alpha);
        let one = g.vector(vec![1.0]);
        g.concat(&[products, one])
    }

    /// Summary `(h̃, c̃)` of the tapes; zeros when the tapes are empty.
    pub fn structured_attention(&self, g: &mut Graph, state: &LstmnState, x: Var, gates: Option<Var>) -> (Var, Var) {
        if state.hidden_tape.is_empty() {
            return (state.zero, state.zero);
        }
        let gates = gates.expect("gates for a nonempty tape");
        let hs = g.stack(&state.hidden_tape);
        let cs = g.stack(&state.memory_tape);
        let kh = self.key_hidden.forward(g, state.last_hidden());
        let kx = self.key_input.forward(g, x);
        let k = g.add(kh, kx);
        let raw = g.matvec(hs, k);
        let scores = g.scale(raw, 1.0 / libm::sqrt(self.hidden as f64));
        let s = g.softmax(scores);
        let gated = g.mul(s, gates);
        let total = g.sum(gates);
        let weights = g.div_by(gated, total);
        (g.matvec_t(hs, weights), g.matvec_t(cs, weights))
    }

    /// LSTM update with recurrent inputs `(h̃, c̃)` and input
    /// `[x; context; h_{t-1}]`; extends the tapes by one entry.
    pub fn reading_step(
        &self,
        g: &mut Graph,
        state: &mut LstmnState,
        x: Var,
        summary: (Var, Var),
        context: Option<Var>,
    ) -> (Var, Var) {
        let xc = with_context(g, x, context);
        let input = g.concat(&[xc, state.last_hidden(), summary.0]);
        let z = self.cell.forward(g, input);
        let gates = split_gates(g, z, 0, self.hidden);
        let keep = g.mul(gates.forget, summary.1);
        let write = g.mul(gates.input, gates.candidate);
        let c = g.add(keep, write);
        let tc = g.tanh(c);
        let h = g.mul(gates.output, tc);
        state.hidden_tape.push(h);
        state.memory_tape.push(c);
        (h, c)
    }

    pub fn output_head(&self, g: &mut Graph, h: Var, context: Option<Var>) -> Var {
        let hc = with_context(g, h, context);
        let a = self.head_hidden.forward(g, hc);
        let a = g.relu(a);
        self.head_out.forward(g, a)
    }

    /// Reads `token` and returns next-token logits. `context` must already
    /// be resolved against `state.last_hidden()`.
    pub fn step(&self, g: &mut Graph, state: &mut LstmnState, token: usize, context: Option<Var>) -> PrpnStep {
        let x = self.embedding.lookup(g, token);
        let d = self.distance(g, &mut state.window, x);
        state.distances.push(d);
        let gates = (!state.hidden_tape.is_empty()).then(|| {
            let ds = state.distances.clone();
            self.gates(g, &ds)
        });
        let summary = self.structured_attention(g, state, x, gates);
        let (hidden, memory) = self.reading_step(g, state, x, summary, context);
        let logits = self.output_head(g, hidden, context);
        PrpnStep { hidden, memory, logits }
    }

    /// Word-boundary distances for `words` read as `[BOS, words.., EOS]`.
    pub fn boundary_scores(&self, g: &mut Graph, words: &[usize]) -> Result<ScoreSequence> {
        if words.is_empty() {
            bail!(Data, "cannot parse an empty sentence");
        }
        let mut stream = Vec::with_capacity(words.len() + 2);
        stream.push(crate::tokenize::BOS);
        stream.extend_from_slice(words);
        stream.push(crate::tokenize::EOS);
        let d = self.syntactic_distances(g, &stream);
        // the distance of word k+1 scores the gap between words k and k+1
        let values = d[2..=words.len()].iter().map(|&v| g.scalar_value(v)).collect();
        Ok(ScoreSequence::boundary(values))
    }

    pub fn parse_sentence(&self, g: &mut Graph, words: &[usize]) -> Result<Tree> {
        induce_tree(&self.boundary_scores(g, words)?)
    }
}
