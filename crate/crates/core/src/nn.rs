//! Layers shared by the encoder and the three decoders.

use alloc::format;
use alloc::string::String;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{Graph, ParamId, ParamStore, Var};

/// Registers named parameters with seeded uniform initialization.
pub struct ParamBuilder<'s> {
    store: &'s mut ParamStore,
    rng: ChaCha8Rng,
    range: f64,
    prefix: String,
}

impl<'s> ParamBuilder<'s> {
    pub fn new(store: &'s mut ParamStore, seed: u64, range: f64) -> Self {
        ParamBuilder {
            store,
            rng: ChaCha8Rng::seed_from_u64(seed),
            range,
            prefix: String::new(),
        }
    }

    pub fn set_prefix(&mut self, prefix: &str) {
        self.prefix = String::from(prefix);
    }

    fn name(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            String::from(name)
        } else {
            format!("{}.{}", self.prefix, name)
        }
    }

    pub fn uniform(&mut self, name: &str, shape: &[usize]) -> ParamId {
        let name = self.name(name);
        self.store.add_uniform(name, shape, self.range, &mut self.rng)
    }

    pub fn zeros(&mut self, name: &str, shape: &[usize]) -> ParamId {
        let name = self.name(name);
        self.store.add_zeros(name, shape)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: ParamId,
    pub bias: Option<ParamId>,
    pub input: usize,
    pub output: usize,
}

impl Linear {
    pub fn new(b: &mut ParamBuilder, name: &str, input: usize, output: usize, bias: bool) -> Self {
        let weight = b.uniform(&format!("{}.weight", name), &[output, input]);
        let bias = bias.then(|| b.zeros(&format!("{}.bias", name), &[output]));
        Linear {
            weight,
            bias,
            input,
            output,
        }
    }

    pub fn forward(&self, g: &mut Graph, x: Var) -> Var {
        let w = g.param(self.weight);
        let b = self.bias.map(|b| g.param(b));
        g.linear(w, x, b)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Embedding {
    pub table: ParamId,
    pub dim: usize,
}

impl Embedding {
    pub fn new(b: &mut ParamBuilder, name: &str, vocab: usize, dim: usize) -> Self {
        Embedding {
            table: b.uniform(name, &[vocab, dim]),
            dim,
        }
    }

    pub fn lookup(&self, g: &mut Graph, id: usize) -> Var {
        let t = g.param(self.table);
        g.row(t, id)
    }
}

/// Gate pre-activations in the order input, forget, output, candidate.
pub struct LstmGates {
    pub input: Var,
    pub forget: Var,
    pub output: Var,
    pub candidate: Var,
}

pub fn split_gates(g: &mut Graph, z: Var, offset: usize, hidden: usize) -> LstmGates {
    let i = g.slice(z, offset, hidden);
    let f = g.slice(z, offset + hidden, hidden);
    let o = g.slice(z, offset + 2 * hidden, hidden);
    let c = g.slice(z, offset + 3 * hidden, hidden);
    LstmGates {
        input: g.sigmoid(i),
        forget: g.sigmoid(f),
        output: g.sigmoid(o),
        candidate: g.tanh(c),
    }
}

/// Standard LSTM cell over `[x; h_prev]`.
#[derive(Debug, Clone, Copy)]
pub struct LstmCell {
    pub gates: Linear,
    pub input: usize,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(b: &mut ParamBuilder, name: &str, input: usize, hidden: usize) -> Self {
        LstmCell {
            gates: Linear::new(b, name, input + hidden, 4 * hidden, true),
            input,
            hidden,
        }
    }

    /// One step with recurrent inputs `(h_prev, c_prev)`.
    pub fn step(&self, g: &mut Graph, x: Var, h_prev: Var, c_prev: Var) -> (Var, Var) {
        let xh = g.concat(&[x, h_prev]);
        let z = self.gates.forward(g, xh);
        let gates = split_gates(g, z, 0, self.hidden);
        let keep = g.mul(gates.forget, c_prev);
        let write = g.mul(gates.input, gates.candidate);
        let c = g.add(keep, write);
        let tc = g.tanh(c);
        let h = g.mul(gates.output, tc);
        (h, c)
    }
}
