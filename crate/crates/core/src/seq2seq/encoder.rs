use alloc::vec;
use alloc::vec::Vec;

use crate::autodiff::{Graph, Var};
use crate::error::{bail, Result};
use crate::nn::{Embedding, Linear, LstmCell, ParamBuilder};
use crate::tokenize::PAD;

/// Bidirectional LSTM encoder with a projection to the decoder width.
#[derive(Debug, Clone, Copy)]
pub struct Encoder {
    pub embedding: Embedding,
    pub forward: LstmCell,
    pub backward: LstmCell,
    pub projection: Linear,
    pub hidden: usize,
    pub output: usize,
}

/// Per-position encoder states. PAD positions hold zero vectors and are
/// masked out of attention.
pub struct EncoderOutput {
    pub states: Vec<Var>,
    pub mask: Vec<bool>,
    /// Projection of `[forward_last; backward_first]`.
    pub final_state: Var,
}

impl Encoder {
    pub fn new(b: &mut ParamBuilder, vocab: usize, embed: usize, hidden: usize, output: usize) -> Self {
        Encoder {
            embedding: Embedding::new(b, "encoder.embedding", vocab, embed),
            forward: LstmCell::new(b, "encoder.forward", embed, hidden),
            backward: LstmCell::new(b, "encoder.backward", embed, hidden),
            projection: Linear::new(b, "encoder.projection", 2 * hidden, output, true),
            hidden,
            output,
        }
    }

    /// Concatenated `[forward_i; backward_i]` states before projection.
    pub fn raw_states(&self, g: &mut Graph, source: &[usize]) -> Result<(Vec<Var>, Vec<bool>)> {
        if source.is_empty() {
            bail!(Data, "cannot encode an empty source sentence");
        }
        let mask: Vec<bool> = source.iter().map(|&t| t != PAD).collect();
        let live: Vec<usize> = (0..source.len()).filter(|&i| mask[i]).collect();
        if live.is_empty() {
            bail!(Data, "source sentence consists only of padding");
        }
        let embeds: Vec<Var> = live.iter().map(|&i| self.embedding.lookup(g, source[i])).collect();
        let zero = g.zeros(self.hidden);
        let (mut h, mut c) = (zero, zero);
        let mut fwd = Vec::with_capacity(live.len());
        for &e in &embeds {
            (h, c) = self.forward.step(g, e, h, c);
            fwd.push(h);
        }
        let (mut h, mut c) = (zero, zero);
        let mut bwd = vec![zero; live.len()];
        for k in (0..live.len()).rev() {
            (h, c) = self.backward.step(g, embeds[k], h, c);
            bwd[k] = h;
        }
        let pad_state = g.zeros(2 * self.hidden);
        let mut raw = vec![pad_state; source.len()];
        for (k, &i) in live.iter().enumerate() {
            raw[i] = g.concat(&[fwd[k], bwd[k]]);
        }
        Ok((raw, mask))
    }

    pub fn encode(&self, g: &mut Graph, source: &[usize]) -> Result<EncoderOutput> {
        let (raw, mask) = self.raw_states(g, source)?;
        let pad_state = g.zeros(self.output);
        let states: Vec<Var> = raw
            .iter()
            .zip(&mask)
            .map(|(&r, &m)| if m { self.projection.forward(g, r) } else { pad_state })
            .collect();
        let first = mask.iter().position(|&m| m).expect("nonempty");
        let last = mask.iter().rposition(|&m| m).expect("nonempty");
        let f_last = g.slice(raw[last], 0, self.hidden);
        let b_first = g.slice(raw[first], self.hidden, self.hidden);
        let cat = g.concat(&[f_last, b_first]);
        let final_state = self.projection.forward(g, cat);
        Ok(EncoderOutput {
            states,
            mask,
            final_state,
        })
    }
}
