use alloc::vec::Vec;

use super::encoder::EncoderOutput;
use crate::autodiff::{Graph, Var};
use crate::error::Result;
use crate::nn::{Linear, ParamBuilder};

/// Additive (Bahdanau) attention over encoder states:
/// `score_j = v · tanh(W_q q + b + W_k s_j)`.
#[derive(Debug, Clone, Copy)]
pub struct Attention {
    pub query: Linear,
    pub key: Linear,
    pub score: crate::autodiff::ParamId,
    pub dim: usize,
}

/// Encoder states and their precomputed keys.
pub struct AttentionMemory {
    pub states: Var,
    pub keys: Var,
    pub mask: Vec<bool>,
}

impl Attention {
    pub fn new(b: &mut ParamBuilder, query_dim: usize, state_dim: usize, dim: usize) -> Self {
        Attention {
            query: Linear::new(b, "attention.query", query_dim, dim, true),
            key: Linear::new(b, "attention.key", state_dim, dim, false),
            score: b.uniform("attention.score", &[dim]),
            dim,
        }
    }

    pub fn memory(&self, g: &mut Graph, enc: &EncoderOutput) -> AttentionMemory {
        let keys: Vec<Var> = enc.states.iter().map(|&s| self.key.forward(g, s)).collect();
        AttentionMemory {
            states: g.stack(&enc.states),
            keys: g.stack(&keys),
            mask: enc.mask.clone(),
        }
    }

    /// Context vector and attention weights for `query`.
    pub fn attend(&self, g: &mut Graph, memory: &AttentionMemory, query: Var) -> Result<(Var, Var)> {
        let q = self.query.forward(g, query);
        let v = g.param(self.score);
        let scores = g.additive_scores(q, memory.keys, v);
        let weights = g.masked_softmax(scores, &memory.mask)?;
        let context = g.matvec_t(memory.states, weights);
        Ok((context, weights))
    }
}

/// Where a decoder step gets its source context from.
#[derive(Clone, Copy)]
pub enum Context<'a> {
    /// Language-model mode: zero-width context.
    None,
    Attend {
        attention: &'a Attention,
        memory: &'a AttentionMemory,
    },
    /// A precomputed context vector (possibly zero-width).
    Fixed(Var),
}

impl Context<'_> {
    /// Context for a decoder whose attention query is `query`, or `None` in
    /// language-model mode.
    pub fn resolve(&self, g: &mut Graph, query: Var) -> Result<Option<Var>> {
        match *self {
            Context::None => Ok(None),
            Context::Attend { attention, memory } => Ok(Some(attention.attend(g, memory, query)?.0)),
            Context::Fixed(v) => Ok(Some(v)),
        }
    }
}

/// `[x; context]`, or `x` when there is no context.
pub fn with_context(g: &mut Graph, x: Var, context: Option<Var>) -> Var {
    match context {
        Some(c) => g.concat(&[x, c]),
        None => x,
    }
}
