use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::attention::{with_context, Context};
use crate::autodiff::{Graph, Var};
use crate::error::{Error, Result};
use crate::nn::{Embedding, Linear, LstmCell, ParamBuilder};
use crate::onlstm::{OnLstmDecoder, OnLstmState};
use crate::prpn::{LstmnState, PrpnDecoder};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    Lstm,
    Prpn,
    #[serde(rename = "onlstm")]
    OnLstm,
}

impl DecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Lstm => "lstm",
            DecoderKind::Prpn => "prpn",
            DecoderKind::OnLstm => "onlstm",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lstm" => Ok(DecoderKind::Lstm),
            "prpn" => Ok(DecoderKind::Prpn),
            "onlstm" | "on-lstm" => Ok(DecoderKind::OnLstm),
            other => Err(Error::Config(alloc::format!("unknown decoder kind '{}'", other))),
        }
    }
}

/// Single-layer LSTM decoder: input `[x; ctx]`, logits from `[h; ctx]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmDecoder {
    pub embedding: Embedding,
    pub cell: LstmCell,
    pub output: Linear,
    pub hidden: usize,
}

impl LstmDecoder {
    pub fn new(b: &mut ParamBuilder, vocab: usize, embed: usize, hidden: usize, context: usize) -> Self {
        LstmDecoder {
            embedding: Embedding::new(b, "lstm.embedding", vocab, embed),
            cell: LstmCell::new(b, "lstm.cell", embed + context, hidden),
            output: Linear::new(b, "lstm.output", hidden + context, vocab, true),
            hidden,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Decoder {
    Lstm(LstmDecoder),
    Prpn(PrpnDecoder),
    OnLstm(OnLstmDecoder),
}

#[derive(Clone)]
pub enum DecoderState {
    Lstm { hidden: Var, memory: Var },
    Prpn(LstmnState),
    OnLstm(OnLstmState),
}

impl Decoder {
    pub fn kind(&self) -> DecoderKind {
        match self {
            Decoder::Lstm(_) => DecoderKind::Lstm,
            Decoder::Prpn(_) => DecoderKind::Prpn,
            Decoder::OnLstm(_) => DecoderKind::OnLstm,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Decoder::Lstm(d) => d.hidden,
            Decoder::Prpn(d) => d.hidden,
            Decoder::OnLstm(d) => d.hidden,
        }
    }

    pub fn start(&self, g: &mut Graph) -> DecoderState {
        match self {
            Decoder::Lstm(d) => {
                let zero = g.zeros(d.hidden);
                DecoderState::Lstm {
                    hidden: zero,
                    memory: zero,
                }
            }
            Decoder::Prpn(d) => DecoderState::Prpn(d.start(g)),
            Decoder::OnLstm(d) => DecoderState::OnLstm(d.start(g)),
        }
    }

    /// Reads one input token and returns logits over the next token. The
    /// attention query is the previous (top-layer) decoder output.
    pub fn step(&self, g: &mut Graph, state: &mut DecoderState, token: usize, context: &Context) -> Result<Var> {
        match (self, state) {
            (Decoder::Lstm(d), DecoderState::Lstm { hidden, memory }) => {
                let ctx = context.resolve(g, *hidden)?;
                let e = d.embedding.lookup(g, token);
                let x = with_context(g, e, ctx);
                let (h, c) = d.cell.step(g, x, *hidden, *memory);
                *hidden = h;
                *memory = c;
                let hc = with_context(g, h, ctx);
                Ok(d.output.forward(g, hc))
            }
            (Decoder::Prpn(d), DecoderState::Prpn(s)) => {
                let ctx = context.resolve(g, s.last_hidden())?;
                Ok(d.step(g, s, token, ctx).logits)
            }
            (Decoder::OnLstm(d), DecoderState::OnLstm(s)) => {
                let ctx = context.resolve(g, s.top_hidden())?;
                Ok(d.step(g, s, token, ctx))
            }
            _ => Err(Error::Contract("decoder state of the wrong kind".into())),
        }
    }
}

/// Parse scores gathered while a decoder reads a sentence.
#[derive(Debug, Clone, PartialEq)]
pub enum ParseScores {
    /// Syntactic distances, one per token read.
    Distances(Vec<f64>),
    /// Expected depths, per layer and token read.
    Depths(Vec<Vec<f64>>),
}

impl DecoderState {
    pub fn parse_scores(&self, g: &Graph) -> Option<ParseScores> {
        match self {
            DecoderState::Lstm { .. } => None,
            DecoderState::Prpn(s) => Some(ParseScores::Distances(
                s.distances.iter().map(|&d| g.scalar_value(d)).collect(),
            )),
            DecoderState::OnLstm(s) => Some(ParseScores::Depths(s.depths.clone())),
        }
    }
}
