//! Finite-difference gradient checks over random instances of every graph
//! operation and of the recurrent cells built on top of them.

#![allow(dead_code)]

use latree_core::autodiff::gradcheck::{check_gradients, GradCheckOptions, GradCheckReport};
use latree_core::autodiff::{Graph, ParamId, ParamStore, Tensor, Var};
use latree_core::nn::{LstmCell, ParamBuilder};
use latree_core::onlstm::{OnLstmCell, OnLstmConfig, OnLstmDecoder};
use latree_core::prpn::{PrpnConfig, PrpnDecoder};
use latree_core::seq2seq::{DecoderKind, Mode, ModelConfig, Seq2SeqModel};
use latree_core::tokenize::Vocab;
use latree_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    pub report: GradCheckReport,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.report.max_rel_err < TOLERANCE && self.report.checked > 0
    }
}

type Loss = Box<dyn Fn(&mut Graph) -> Result<Var>>;
type Builder = fn(&mut ChaCha8Rng, &mut ParamStore) -> Loss;

fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

fn vparam(store: &mut ParamStore, rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> ParamId {
    let name = format!("p{}", store.len());
    store.add(name, Tensor::vector(uniform(rng, n, lo, hi)))
}

fn mparam(store: &mut ParamStore, rng: &mut ChaCha8Rng, r: usize, c: usize) -> ParamId {
    let name = format!("p{}", store.len());
    store.add(name, Tensor::new(vec![r, c], uniform(rng, r * c, -1.0, 1.0)).unwrap())
}

fn sparam(store: &mut ParamStore, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> ParamId {
    let name = format!("p{}", store.len());
    store.add(name, Tensor::scalar(rng.gen_range(lo..hi)))
}

/// A scalar readout `w · y` with fixed random weights, so no output component
/// can cancel against another.
fn readout(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    uniform(rng, n, -1.0, 1.0)
}

fn project(g: &mut Graph, y: Var, w: &[f64]) -> Var {
    let c = g.vector(w.to_vec());
    g.dot(y, c)
}

fn size(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=6)
}

fn unary(rng: &mut ChaCha8Rng, store: &mut ParamStore, lo: f64, hi: f64, f: fn(&mut Graph, Var) -> Var) -> Loss {
    let n = size(rng);
    let x = vparam(store, rng, n, lo, hi);
    let w = readout(rng, n);
    Box::new(move |g| {
        let xv = g.param(x);
        let y = f(g, xv);
        Ok(project(g, y, &w))
    })
}

fn binary(rng: &mut ChaCha8Rng, store: &mut ParamStore, f: fn(&mut Graph, Var, Var) -> Var) -> Loss {
    let n = size(rng);
    let a = vparam(store, rng, n, -2.0, 2.0);
    let b = vparam(store, rng, n, -2.0, 2.0);
    let w = readout(rng, n);
    Box::new(move |g| {
        let (av, bv) = (g.param(a), g.param(b));
        let y = f(g, av, bv);
        Ok(project(g, y, &w))
    })
}

fn op_add(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    binary(rng, s, |g, a, b| g.add(a, b))
}
fn op_sub(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    binary(rng, s, |g, a, b| g.sub(a, b))
}
fn op_mul(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    binary(rng, s, |g, a, b| g.mul(a, b))
}
fn op_affine(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -2.0, 2.0, |g, x| g.affine(x, -1.7, 0.3))
}
fn op_scale(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -2.0, 2.0, |g, x| g.scale(x, 2.5))
}
fn op_one_minus(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -2.0, 2.0, |g, x| g.one_minus(x))
}
fn op_sigmoid(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -4.0, 4.0, |g, x| g.sigmoid(x))
}
fn op_tanh(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -3.0, 3.0, |g, x| g.tanh(x))
}
fn op_relu(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -2.0, 2.0, |g, x| g.relu(x))
}
fn op_hardtanh(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -2.0, 2.0, |g, x| g.hardtanh(x))
}
fn op_softmax(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -3.0, 3.0, |g, x| g.softmax(x))
}
fn op_cumsum(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -2.0, 2.0, |g, x| g.cumsum(x))
}
fn op_cumax(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -3.0, 3.0, |g, x| g.cumax(x))
}
fn op_suffix_prod(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    unary(rng, s, -1.5, 1.5, |g, x| g.suffix_prod(x))
}
fn op_sum(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let x = vparam(s, rng, n, -2.0, 2.0);
    Box::new(move |g| {
        let xv = g.param(x);
        let y = g.sum(xv);
        Ok(g.mul(y, y))
    })
}
fn op_dot(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let a = vparam(s, rng, n, -2.0, 2.0);
    let b = vparam(s, rng, n, -2.0, 2.0);
    Box::new(move |g| {
        let (av, bv) = (g.param(a), g.param(b));
        let y = g.dot(av, bv);
        Ok(g.tanh(y))
    })
}

fn op_masked_softmax(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = rng.gen_range(2..=6);
    let x = vparam(s, rng, n, -3.0, 3.0);
    let mut mask: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.6)).collect();
    let keep = rng.gen_range(0..n);
    mask[keep] = true;
    let w = readout(rng, n);
    Box::new(move |g| {
        let xv = g.param(x);
        let y = g.masked_softmax(xv, &mask)?;
        Ok(project(g, y, &w))
    })
}

fn op_concat(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let parts: Vec<(ParamId, usize)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            let n = size(rng);
            (vparam(s, rng, n, -2.0, 2.0), n)
        })
        .collect();
    let total = parts.iter().map(|p| p.1).sum();
    let w = readout(rng, total);
    Box::new(move |g| {
        let vars: Vec<Var> = parts.iter().map(|p| g.param(p.0)).collect();
        let y = g.concat(&vars);
        let y = g.tanh(y);
        Ok(project(g, y, &w))
    })
}

fn op_slice(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = rng.gen_range(2..=7);
    let x = vparam(s, rng, n, -2.0, 2.0);
    let start = rng.gen_range(0..n);
    let len = rng.gen_range(1..=n - start);
    let w = readout(rng, len);
    Box::new(move |g| {
        let xv = g.param(x);
        let y = g.slice(xv, start, len);
        let y = g.sigmoid(y);
        Ok(project(g, y, &w))
    })
}

fn op_element(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let x = vparam(s, rng, n, -2.0, 2.0);
    let i = rng.gen_range(0..n);
    Box::new(move |g| {
        let xv = g.param(x);
        let e = g.element(xv, i);
        Ok(g.mul(e, e))
    })
}

fn op_stack(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let c = size(rng);
    let rows: Vec<ParamId> = (0..rng.gen_range(1..=4))
        .map(|_| vparam(s, rng, c, -2.0, 2.0))
        .collect();
    let q = vparam(s, rng, rows.len(), -1.0, 1.0);
    Box::new(move |g| {
        let vars: Vec<Var> = rows.iter().map(|&r| g.param(r)).collect();
        let m = g.stack(&vars);
        let qv = g.param(q);
        let y = g.matvec_t(m, qv);
        let y = g.tanh(y);
        Ok(g.sum(y))
    })
}

fn op_repeat_each(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let times = rng.gen_range(1..=3);
    let x = vparam(s, rng, n, -2.0, 2.0);
    let w = readout(rng, n * times);
    Box::new(move |g| {
        let xv = g.param(x);
        let y = g.repeat_each(xv, times);
        let y = g.tanh(y);
        Ok(project(g, y, &w))
    })
}

fn op_broadcast(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let x = sparam(s, rng, -2.0, 2.0);
    let w = readout(rng, n);
    Box::new(move |g| {
        let xv = g.param(x);
        let y = g.broadcast(xv, n);
        let y = g.tanh(y);
        Ok(project(g, y, &w))
    })
}

fn op_div_by(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let x = vparam(s, rng, n, -2.0, 2.0);
    let d = sparam(s, rng, 0.5, 2.0);
    let w = readout(rng, n);
    Box::new(move |g| {
        let (xv, dv) = (g.param(x), g.param(d));
        let y = g.div_by(xv, dv);
        Ok(project(g, y, &w))
    })
}

fn op_matvec(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let (r, c) = (size(rng), size(rng));
    let m = mparam(s, rng, r, c);
    let x = vparam(s, rng, c, -1.0, 1.0);
    let w = readout(rng, r);
    Box::new(move |g| {
        let (mv, xv) = (g.param(m), g.param(x));
        let y = g.matvec(mv, xv);
        Ok(project(g, y, &w))
    })
}

fn op_matvec_t(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let (r, c) = (size(rng), size(rng));
    let m = mparam(s, rng, r, c);
    let x = vparam(s, rng, r, -1.0, 1.0);
    let w = readout(rng, c);
    Box::new(move |g| {
        let (mv, xv) = (g.param(m), g.param(x));
        let y = g.matvec_t(mv, xv);
        Ok(project(g, y, &w))
    })
}

fn op_linear(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let (r, c) = (size(rng), size(rng));
    let m = mparam(s, rng, r, c);
    let x = vparam(s, rng, c, -1.0, 1.0);
    let b = if rng.gen_bool(0.5) {
        Some(vparam(s, rng, r, -1.0, 1.0))
    } else {
        None
    };
    let w = readout(rng, r);
    Box::new(move |g| {
        let (mv, xv) = (g.param(m), g.param(x));
        let bv = b.map(|b| g.param(b));
        let y = g.linear(mv, xv, bv);
        let y = g.tanh(y);
        Ok(project(g, y, &w))
    })
}

fn op_row(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let (r, c) = (size(rng), size(rng));
    let m = mparam(s, rng, r, c);
    let i = rng.gen_range(0..r);
    let j = rng.gen_range(0..r);
    let w = readout(rng, c);
    Box::new(move |g| {
        let mv = g.param(m);
        let a = g.row(mv, i);
        let b = g.row(mv, j);
        let y = g.mul(a, b);
        Ok(project(g, y, &w))
    })
}

fn op_additive_scores(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let (n, a) = (size(rng), size(rng));
    let q = vparam(s, rng, a, -1.0, 1.0);
    let keys = mparam(s, rng, n, a);
    let v = vparam(s, rng, a, -1.0, 1.0);
    let w = readout(rng, n);
    Box::new(move |g| {
        let (qv, kv, vv) = (g.param(q), g.param(keys), g.param(v));
        let y = g.additive_scores(qv, kv, vv);
        Ok(project(g, y, &w))
    })
}

fn op_cross_entropy(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = rng.gen_range(2..=8);
    let x = vparam(s, rng, n, -3.0, 3.0);
    let t = rng.gen_range(0..n);
    Box::new(move |g| {
        let xv = g.param(x);
        Ok(g.cross_entropy(xv, t))
    })
}

fn op_add_all(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let n = size(rng);
    let terms: Vec<ParamId> = (0..rng.gen_range(1..=5))
        .map(|_| vparam(s, rng, n, -2.0, 2.0))
        .collect();
    let w = readout(rng, n);
    Box::new(move |g| {
        let vars: Vec<Var> = terms.iter().map(|&t| g.param(t)).collect();
        let y = g.add_all(&vars);
        let y = g.mul(y, y);
        Ok(project(g, y, &w))
    })
}

fn cell_lstm(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let (input, hidden) = (size(rng), size(rng));
    let seed = rng.gen();
    let cell = {
        let mut b = ParamBuilder::new(s, seed, 0.8);
        LstmCell::new(&mut b, "lstm", input, hidden)
    };
    let x = vparam(s, rng, input, -1.0, 1.0);
    let h = vparam(s, rng, hidden, -1.0, 1.0);
    let c = vparam(s, rng, hidden, -1.0, 1.0);
    let (wh, wc) = (readout(rng, hidden), readout(rng, hidden));
    Box::new(move |g| {
        let (xv, hv, cv) = (g.param(x), g.param(h), g.param(c));
        let (h1, c1) = cell.step(g, xv, hv, cv);
        let (h2, c2) = cell.step(g, xv, h1, c1);
        let a = project(g, h2, &wh);
        let b = project(g, c2, &wc);
        Ok(g.add(a, b))
    })
}

fn cell_onlstm(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let chunk = rng.gen_range(1..=3);
    let hidden = chunk * rng.gen_range(1..=3);
    let input = size(rng);
    let seed = rng.gen();
    let cell = {
        let mut b = ParamBuilder::new(s, seed, 0.8);
        OnLstmCell::new(&mut b, "onlstm", input, hidden, chunk)
    };
    let x = vparam(s, rng, input, -1.0, 1.0);
    let h = vparam(s, rng, hidden, -1.0, 1.0);
    let c = vparam(s, rng, hidden, -1.0, 1.0);
    let (wh, wc) = (readout(rng, hidden), readout(rng, hidden));
    let slots = hidden / chunk;
    let (wf, wi) = (readout(rng, slots), readout(rng, slots));
    Box::new(move |g| {
        let (xv, hv, cv) = (g.param(x), g.param(h), g.param(c));
        let o1 = cell.step(g, xv, hv, cv);
        let o2 = cell.step(g, xv, o1.hidden, o1.memory);
        let terms = [
            project(g, o2.hidden, &wh),
            project(g, o2.memory, &wc),
            project(g, o2.master_forget, &wf),
            project(g, o2.master_input, &wi),
        ];
        Ok(g.add_all(&terms))
    })
}

fn tokens(rng: &mut ChaCha8Rng, vocab: usize, lengths: std::ops::RangeInclusive<usize>) -> Vec<usize> {
    let n = rng.gen_range(lengths);
    (0..n).map(|_| rng.gen_range(4..vocab)).collect()
}

fn decoder_onlstm(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let chunk = rng.gen_range(1..=2);
    let config = OnLstmConfig {
        vocab: 9,
        embed: rng.gen_range(2..=4),
        hidden: chunk * rng.gen_range(1..=3),
        chunk,
        layers: rng.gen_range(1..=3),
        context: rng.gen_range(0..=3),
    };
    let seed = rng.gen();
    let dec = {
        let mut b = ParamBuilder::new(s, seed, 0.8);
        OnLstmDecoder::new(&mut b, &config).unwrap()
    };
    let ctx = (config.context > 0).then(|| vparam(s, rng, config.context, -1.0, 1.0));
    let words = tokens(rng, 9, 2..=4);
    Box::new(move |g| {
        let mut state = dec.start(g);
        let context = ctx.map(|c| g.param(c));
        let mut losses = Vec::new();
        for w in words.windows(2) {
            let logits = dec.step(g, &mut state, w[0], context);
            losses.push(g.cross_entropy(logits, w[1]));
        }
        Ok(g.add_all(&losses))
    })
}

fn decoder_prpn(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    let config = PrpnConfig {
        vocab: 9,
        embed: rng.gen_range(2..=4),
        hidden: rng.gen_range(2..=4),
        lookback: rng.gen_range(1..=2),
        // A low temperature keeps the hardtanh in the gates away from
        // saturation, so most coordinates have a nonzero parser gradient.
        temperature: rng.gen_range(0.5..2.0),
        parser_hidden: rng.gen_range(2..=4),
        head_hidden: rng.gen_range(2..=4),
        context: rng.gen_range(0..=3),
    };
    let seed = rng.gen();
    let dec = {
        let mut b = ParamBuilder::new(s, seed, 0.8);
        PrpnDecoder::new(&mut b, &config).unwrap()
    };
    let ctx = (config.context > 0).then(|| vparam(s, rng, config.context, -1.0, 1.0));
    let words = tokens(rng, 9, 3..=5);
    Box::new(move |g| {
        let mut state = dec.start(g);
        let context = ctx.map(|c| g.param(c));
        let mut losses = Vec::new();
        for w in words.windows(2) {
            let step = dec.step(g, &mut state, w[0], context);
            losses.push(g.cross_entropy(step.logits, w[1]));
        }
        Ok(g.add_all(&losses))
    })
}

fn vocab(n: usize) -> Vocab {
    Vocab::from_entries((4..n).map(|i| (format!("w{}", i), 1))).unwrap()
}

fn seq2seq(rng: &mut ChaCha8Rng, s: &mut ParamStore, kind: DecoderKind) -> Loss {
    let mut config = ModelConfig::new(Mode::Mt, kind, 8, 9);
    config.embed = 3;
    config.hidden = 4;
    config.encoder_hidden = 3;
    config.attention = 3;
    config.parser_hidden = 3;
    config.head_hidden = 3;
    config.temperature = 1.0;
    config.layers = 2;
    config.init_range = 0.8;
    config.seed = rng.gen();
    let model = Seq2SeqModel::new(config, Some(vocab(8)), vocab(9)).unwrap();
    *s = model.store.clone();
    let src = tokens(rng, 8, 1..=3);
    let tgt = tokens(rng, 9, 1..=3);
    Box::new(move |g| {
        // The model's own store was moved into the check's store; both have
        // the same registration order, so ids line up.
        let tf = model.teacher_forced(g, Some(&src), &tgt)?;
        Ok(tf.loss)
    })
}

fn model_lstm(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    seq2seq(rng, s, DecoderKind::Lstm)
}
fn model_prpn(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    seq2seq(rng, s, DecoderKind::Prpn)
}
fn model_onlstm(rng: &mut ChaCha8Rng, s: &mut ParamStore) -> Loss {
    seq2seq(rng, s, DecoderKind::OnLstm)
}

pub const CASES: &[(&str, Builder)] = &[
    ("add", op_add),
    ("sub", op_sub),
    ("mul", op_mul),
    ("affine", op_affine),
    ("scale", op_scale),
    ("one_minus", op_one_minus),
    ("sigmoid", op_sigmoid),
    ("tanh", op_tanh),
    ("relu", op_relu),
    ("hardtanh", op_hardtanh),
    ("softmax", op_softmax),
    ("masked_softmax", op_masked_softmax),
    ("cumsum", op_cumsum),
    ("cumax", op_cumax),
    ("suffix_prod", op_suffix_prod),
    ("concat", op_concat),
    ("slice", op_slice),
    ("element", op_element),
    ("stack", op_stack),
    ("repeat_each", op_repeat_each),
    ("broadcast", op_broadcast),
    ("sum", op_sum),
    ("dot", op_dot),
    ("div_by", op_div_by),
    ("matvec", op_matvec),
    ("matvec_t", op_matvec_t),
    ("linear", op_linear),
    ("row", op_row),
    ("additive_scores", op_additive_scores),
    ("cross_entropy", op_cross_entropy),
    ("add_all", op_add_all),
    ("lstm cell", cell_lstm),
    ("on-lstm cell", cell_onlstm),
    ("on-lstm decoder", decoder_onlstm),
    ("prpn decoder", decoder_prpn),
    ("seq2seq lstm", model_lstm),
    ("seq2seq prpn", model_prpn),
    ("seq2seq on-lstm", model_onlstm),
];

pub fn run_case(name: &'static str, build: Builder, instances: usize, seed: u64) -> SuiteResult {
    let options = GradCheckOptions {
        max_coords_per_param: 6,
        ..GradCheckOptions::default()
    };
    let mut report = GradCheckReport::default();
    for i in 0..instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let mut store = ParamStore::new();
        let loss = build(&mut rng, &mut store);
        // Zero-initialized biases put ReLUs exactly on their kink, where no
        // finite difference is meaningful; check at a generic point instead.
        for p in store.iter_mut() {
            if p.value.data().iter().all(|&v| v == 0.0) {
                for v in p.value.data_mut() {
                    *v = rng.gen_range(-0.5..0.5);
                }
            }
        }
        let r = check_gradients(&mut store, &[], &options, |g| loss(g))
            .unwrap_or_else(|e| panic!("{} instance {}: {}", name, i, e));
        report.merge(&r);
    }
    SuiteResult {
        name,
        instances,
        report,
    }
}

pub fn run_all(instances: usize, seed: u64) -> Vec<SuiteResult> {
    CASES
        .iter()
        .map(|&(name, build)| run_case(name, build, instances, seed))
        .collect()
}
