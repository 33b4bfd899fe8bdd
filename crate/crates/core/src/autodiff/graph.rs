use alloc::vec;
use alloc::vec::Vec;

use super::param::{ParamId, ParamStore};
use super::tensor::{softmax_slice, Tensor};
use crate::error::{bail, Result};

/// Handle to a node on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Scalar,
    Vector(usize),
    Matrix(usize, usize),
}

impl Shape {
    pub fn len(self) -> usize {
        match self {
            Shape::Scalar => 1,
            Shape::Vector(n) => n,
            Shape::Matrix(r, c) => r * c,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    fn from_dims(dims: &[usize]) -> Self {
        match dims {
            [] => Shape::Scalar,
            [n] => Shape::Vector(*n),
            [r, c] => Shape::Matrix(*r, *c),
            _ => panic!("graph tensors are at most 2-D, got {:?}", dims),
        }
    }

    fn matrix(self) -> (usize, usize) {
        match self {
            Shape::Matrix(r, c) => (r, c),
            other => panic!("expected a matrix, got {:?}", other),
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Param(ParamId),
    Constant,
    Row { table: Var, index: usize },
    Linear { w: Var, x: Var, b: Option<Var> },
    MatTVec { m: Var, x: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, scale: f64 },
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    HardTanh(Var),
    Softmax(Var),
    Cumsum(Var),
    SuffixProd(Var),
    Concat(Vec<Var>),
    Slice { x: Var, start: usize },
    Stack(Vec<Var>),
    RepeatEach { x: Var, times: usize },
    Broadcast(Var),
    Sum(Var),
    Dot(Var, Var),
    DivBy { x: Var, s: Var },
    AdditiveScores { q: Var, keys: Var, v: Var },
    CrossEntropy { logits: Var, target: usize },
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    shape: Shape,
    value: Vec<f64>,
    /// Forward intermediates kept for the backward pass.
    aux: Vec<f64>,
}

/// Per-parameter gradients produced by [`Graph::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads.get(id.0).and_then(|g| g.as_deref())
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_deref().map(|g| (ParamId(i), g)))
    }
}

/// A tape of operations over `f64` tensors. Nodes are appended in evaluation
/// order, so the node list is already topologically sorted.
///
/// Parameter values are read from the borrowed store rather than copied, so
/// many graphs may share one frozen [`ParamStore`].
pub struct Graph<'p> {
    store: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<Var>>,
}

impl<'p> Graph<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Graph {
            store,
            nodes: Vec::new(),
            param_nodes: vec![None; store.len()],
        }
    }

    pub fn store(&self) -> &'p ParamStore {
        self.store
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, shape: Shape, value: Vec<f64>, aux: Vec<f64>) -> Var {
        debug_assert!(matches!(op, Op::Param(_)) || shape.len() == value.len());
        self.nodes.push(Node { op, shape, value, aux });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &[f64] {
        let node = &self.nodes[v.0];
        match node.op {
            Op::Param(id) => self.store.value(id).data(),
            _ => &node.value,
        }
    }

    pub fn scalar_value(&self, v: Var) -> f64 {
        self.value(v)[0]
    }

    pub fn shape(&self, v: Var) -> Shape {
        self.nodes[v.0].shape
    }

    pub fn dim(&self, v: Var) -> usize {
        self.shape(v).len()
    }

    pub fn to_tensor(&self, v: Var) -> Tensor {
        let dims = match self.shape(v) {
            Shape::Scalar => vec![],
            Shape::Vector(n) => vec![n],
            Shape::Matrix(r, c) => vec![r, c],
        };
        Tensor::new(dims, self.value(v).to_vec()).expect("node shape is consistent")
    }

    /// Leaf for a stored parameter. Repeated calls return the same node.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        let shape = Shape::from_dims(self.store.value(id).shape());
        let v = self.push(Op::Param(id), shape, Vec::new(), Vec::new());
        self.param_nodes[id.0] = Some(v);
        v
    }

    pub fn constant(&mut self, t: &Tensor) -> Var {
        let shape = Shape::from_dims(t.shape());
        self.push(Op::Constant, shape, t.data().to_vec(), Vec::new())
    }

    pub fn vector(&mut self, data: Vec<f64>) -> Var {
        let shape = Shape::Vector(data.len());
        self.push(Op::Constant, shape, data, Vec::new())
    }

    pub fn zeros(&mut self, n: usize) -> Var {
        self.vector(vec![0.0; n])
    }

    pub fn scalar(&mut self, x: f64) -> Var {
        self.push(Op::Constant, Shape::Scalar, vec![x], Vec::new())
    }

    /// Row `index` of a matrix (embedding lookup).
    pub fn row(&mut self, table: Var, index: usize) -> Var {
        let (r, c) = self.shape(table).matrix();
        assert!(index < r, "row {} out of range for {} rows", index, r);
        let value = self.value(table)[index * c..(index + 1) * c].to_vec();
        self.push(Op::Row { table, index }, Shape::Vector(c), value, Vec::new())
    }

    /// `w · x (+ b)` for a matrix `w` and vector `x`.
    pub fn linear(&mut self, w: Var, x: Var, b: Option<Var>) -> Var {
        let (r, c) = self.shape(w).matrix();
        assert_eq!(self.dim(x), c, "linear: input width mismatch");
        let wv = self.value(w);
        let xv = self.value(x);
        let mut out: Vec<f64> = match b {
            Some(b) => {
                assert_eq!(self.dim(b), r, "linear: bias width mismatch");
                self.value(b).to_vec()
            }
            None => vec![0.0; r],
        };
        for (i, o) in out.iter_mut().enumerate() {
            let row = &wv[i * c..(i + 1) * c];
            *o += row.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>();
        }
        self.push(Op::Linear { w, x, b }, Shape::Vector(r), out, Vec::new())
    }

    pub fn matvec(&mut self, m: Var, x: Var) -> Var {
        self.linear(m, x, None)
    }

    /// `mᵀ · x` for `m` of shape `[r, c]` and `x` of length `r`.
    pub fn matvec_t(&mut self, m: Var, x: Var) -> Var {
        let (r, c) = self.shape(m).matrix();
        assert_eq!(self.dim(x), r, "matvec_t: input width mismatch");
        let mv = self.value(m);
        let xv = self.value(x);
        let mut out = vec![0.0; c];
        for (i, &xi) in xv.iter().enumerate() {
            for (o, &w) in out.iter_mut().zip(&mv[i * c..(i + 1) * c]) {
                *o += w * xi;
            }
        }
        self.push(Op::MatTVec { m, x }, Shape::Vector(c), out, Vec::new())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        assert_eq!(self.shape(a), self.shape(b), "elementwise shape mismatch");
        let out = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let shape = self.shape(a);
        self.push(op, shape, out, Vec::new())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y)
    }

    /// `scale · x + shift`, elementwise.
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Var {
        let out = self.value(x).iter().map(|v| scale * v + shift).collect();
        let shape = self.shape(x);
        self.push(Op::Affine { x, scale }, shape, out, Vec::new())
    }

    pub fn scale(&mut self, x: Var, scale: f64) -> Var {
        self.affine(x, scale, 0.0)
    }

    /// `1 - x`, elementwise.
    pub fn one_minus(&mut self, x: Var) -> Var {
        self.affine(x, -1.0, 1.0)
    }

    fn map(&mut self, x: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let out = self.value(x).iter().map(|&v| f(v)).collect();
        let shape = self.shape(x);
        self.push(op, shape, out, Vec::new())
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        self.map(x, Op::Sigmoid(x), sigmoid)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.map(x, Op::Tanh(x), libm::tanh)
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.map(x, Op::Relu(x), |v| if v > 0.0 { v } else { 0.0 })
    }

    pub fn hardtanh(&mut self, x: Var) -> Var {
        self.map(x, Op::HardTanh(x), |v| v.clamp(-1.0, 1.0))
    }

    pub fn softmax(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut out = vec![0.0; xv.len()];
        softmax_slice(xv, &mut out);
        let shape = self.shape(x);
        self.push(Op::Softmax(x), shape, out, Vec::new())
    }

    /// Softmax restricted to positions where `mask` is true; masked positions
    /// receive exactly zero weight.
    pub fn masked_softmax(&mut self, x: Var, mask: &[bool]) -> Result<Var> {
        let n = self.dim(x);
        if mask.len() != n {
            bail!(Contract, "mask length {} for {} scores", mask.len(), n);
        }
        if !mask.iter().any(|&m| m) {
            bail!(Contract, "every attention position is masked");
        }
        if mask.iter().all(|&m| m) {
            return Ok(self.softmax(x));
        }
        let xv = self.value(x);
        let max = xv
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(v, _)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut out: Vec<f64> = xv
            .iter()
            .zip(mask)
            .map(|(v, &m)| if m { libm::exp(v - max) } else { 0.0 })
            .collect();
        let total: f64 = out.iter().sum();
        out.iter_mut().for_each(|o| *o /= total);
        // Softmax backward only reads the output, so masked zeros stay zero.
        Ok(self.push(Op::Softmax(x), Shape::Vector(n), out, Vec::new()))
    }

    pub fn cumsum(&mut self, x: Var) -> Var {
        let mut acc = 0.0;
        let out = self
            .value(x)
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        let shape = self.shape(x);
        self.push(Op::Cumsum(x), shape, out, Vec::new())
    }

    /// Cumulative sum of softmax.
    pub fn cumax(&mut self, x: Var) -> Var {
        let s = self.softmax(x);
        self.cumsum(s)
    }

    /// Inclusive suffix product: `y_i = x_i · x_{i+1} ⋯ x_{n-1}`.
    pub fn suffix_prod(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let mut out = vec![0.0; xv.len()];
        let mut acc = 1.0;
        for i in (0..xv.len()).rev() {
            acc *= xv[i];
            out[i] = acc;
        }
        let shape = self.shape(x);
        self.push(Op::SuffixProd(x), shape, out, Vec::new())
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut out = Vec::with_capacity(parts.iter().map(|&p| self.dim(p)).sum());
        for &p in parts {
            out.extend_from_slice(self.value(p));
        }
        let n = out.len();
        self.push(Op::Concat(parts.to_vec()), Shape::Vector(n), out, Vec::new())
    }

    pub fn slice(&mut self, x: Var, start: usize, len: usize) -> Var {
        let xv = self.value(x);
        assert!(start + len <= xv.len(), "slice out of range");
        let out = xv[start..start + len].to_vec();
        self.push(Op::Slice { x, start }, Shape::Vector(len), out, Vec::new())
    }

    /// Element `i` as a scalar.
    pub fn element(&mut self, x: Var, i: usize) -> Var {
        let v = self.value(x)[i];
        self.push(Op::Slice { x, start: i }, Shape::Scalar, vec![v], Vec::new())
    }

    /// Stacks equal-length vectors as the rows of a matrix.
    pub fn stack(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty(), "stack of zero rows");
        let c = self.dim(rows[0]);
        let mut out = Vec::with_capacity(rows.len() * c);
        for &r in rows {
            assert_eq!(self.dim(r), c, "stack: ragged rows");
            out.extend_from_slice(self.value(r));
        }
        let shape = Shape::Matrix(rows.len(), c);
        self.push(Op::Stack(rows.to_vec()), shape, out, Vec::new())
    }

    /// Repeats every element `times` times in place: `[a, b] -> [a, a, b, b]`.
    pub fn repeat_each(&mut self, x: Var, times: usize) -> Var {
        let out: Vec<f64> = self
            .value(x)
            .iter()
            .flat_map(|&v| core::iter::repeat_n(v, times))
            .collect();
        let n = out.len();
        self.push(Op::RepeatEach { x, times }, Shape::Vector(n), out, Vec::new())
    }

    /// A vector of length `n` filled with the scalar `s`.
    pub fn broadcast(&mut self, s: Var, n: usize) -> Var {
        assert_eq!(self.dim(s), 1, "broadcast expects a scalar");
        let v = self.value(s)[0];
        self.push(Op::Broadcast(s), Shape::Vector(n), vec![v; n], Vec::new())
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().sum();
        self.push(Op::Sum(x), Shape::Scalar, vec![s], Vec::new())
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        assert_eq!(self.dim(a), self.dim(b), "dot: length mismatch");
        let s = self.value(a).iter().zip(self.value(b)).map(|(x, y)| x * y).sum();
        self.push(Op::Dot(a, b), Shape::Scalar, vec![s], Vec::new())
    }

    /// `x / s` for a scalar node `s`.
    pub fn div_by(&mut self, x: Var, s: Var) -> Var {
        assert_eq!(self.dim(s), 1, "div_by expects a scalar divisor");
        let d = self.value(s)[0];
        let out = self.value(x).iter().map(|v| v / d).collect();
        let shape = self.shape(x);
        self.push(Op::DivBy { x, s }, shape, out, Vec::new())
    }

    /// Additive attention scores `y_j = v · tanh(q + keys_j)`.
    pub fn additive_scores(&mut self, q: Var, keys: Var, v: Var) -> Var {
        let (n, a) = self.shape(keys).matrix();
        assert_eq!(self.dim(q), a, "additive_scores: query width");
        assert_eq!(self.dim(v), a, "additive_scores: score vector width");
        let (qv, kv, vv) = (self.value(q), self.value(keys), self.value(v));
        let mut t = vec![0.0; n * a];
        let mut out = vec![0.0; n];
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..a {
                let h = libm::tanh(qv[k] + kv[j * a + k]);
                t[j * a + k] = h;
                s += vv[k] * h;
            }
            out[j] = s;
        }
        self.push(Op::AdditiveScores { q, keys, v }, Shape::Vector(n), out, t)
    }

    /// Negative log-likelihood of `target` under `softmax(logits)`.
    pub fn cross_entropy(&mut self, logits: Var, target: usize) -> Var {
        let lv = self.value(logits);
        assert!(target < lv.len(), "cross_entropy: target out of range");
        let mut probs = vec![0.0; lv.len()];
        softmax_slice(lv, &mut probs);
        let max = lv.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + libm::log(lv.iter().map(|v| libm::exp(v - max)).sum::<f64>());
        let nll = lse - lv[target];
        self.push(Op::CrossEntropy { logits, target }, Shape::Scalar, vec![nll], probs)
    }

    /// Sum of a list of scalars (or same-shape tensors).
    pub fn add_all(&mut self, terms: &[Var]) -> Var {
        assert!(!terms.is_empty(), "add_all of nothing");
        let mut acc = terms[0];
        for &t in &terms[1..] {
            acc = self.add(acc, t);
        }
        acc
    }

    /// Reverse-mode sweep from a scalar `loss`. The tape is left intact, so
    /// repeated calls return identical gradients.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != Shape::Scalar {
            bail!(Contract, "backward needs a scalar loss, got {:?}", self.shape(loss));
        }
        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); loss.0 + 1];
        grads[loss.0] = vec![1.0];
        let mut out = Gradients {
            grads: vec![None; self.store.len()],
        };
        for i in (0..=loss.0).rev() {
            if grads[i].is_empty() {
                continue;
            }
            let dy = core::mem::take(&mut grads[i]);
            let node = &self.nodes[i];
            self.backprop(node, &dy, &mut grads, &mut out);
        }
        Ok(out)
    }

    fn backprop(&self, node: &Node, dy: &[f64], grads: &mut [Vec<f64>], out: &mut Gradients) {
        let nodes = &self.nodes;
        match &node.op {
            Op::Param(id) => {
                let entry = &mut out.grads[id.0];
                match entry {
                    Some(g) => g.iter_mut().zip(dy).for_each(|(a, b)| *a += b),
                    None => *entry = Some(dy.to_vec()),
                }
            }
            Op::Constant => {}
            Op::Row { table, index } => {
                let c = dy.len();
                let g = slot(grads, nodes, *table);
                for (a, b) in g[index * c..(index + 1) * c].iter_mut().zip(dy) {
                    *a += b;
                }
            }
            Op::Linear { w, x, b } => {
                let (r, c) = self.shape(*w).matrix();
                let wv = self.value(*w);
                let xv = self.value(*x);
                {
                    let gx = slot(grads, nodes, *x);
                    for i in 0..r {
                        let d = dy[i];
                        if d != 0.0 {
                            for (g, &wij) in gx.iter_mut().zip(&wv[i * c..(i + 1) * c]) {
                                *g += wij * d;
                            }
                        }
                    }
                }
                {
                    let gw = slot(grads, nodes, *w);
                    for i in 0..r {
                        let d = dy[i];
                        if d != 0.0 {
                            for (g, &xj) in gw[i * c..(i + 1) * c].iter_mut().zip(xv) {
                                *g += d * xj;
                            }
                        }
                    }
                }
                if let Some(b) = b {
                    slot(grads, nodes, *b).iter_mut().zip(dy).for_each(|(a, d)| *a += d);
                }
            }
            Op::MatTVec { m, x } => {
                let (r, c) = self.shape(*m).matrix();
                let mv = self.value(*m);
                let xv = self.value(*x);
                {
                    let gx = slot(grads, nodes, *x);
                    for i in 0..r {
                        gx[i] += mv[i * c..(i + 1) * c].iter().zip(dy).map(|(a, b)| a * b).sum::<f64>();
                    }
                }
                let gm = slot(grads, nodes, *m);
                for i in 0..r {
                    for (g, d) in gm[i * c..(i + 1) * c].iter_mut().zip(dy) {
                        *g += xv[i] * d;
                    }
                }
            }
            Op::Add(a, b) => {
                slot(grads, nodes, *a).iter_mut().zip(dy).for_each(|(g, d)| *g += d);
                slot(grads, nodes, *b).iter_mut().zip(dy).for_each(|(g, d)| *g += d);
            }
            Op::Sub(a, b) => {
                slot(grads, nodes, *a).iter_mut().zip(dy).for_each(|(g, d)| *g += d);
                slot(grads, nodes, *b).iter_mut().zip(dy).for_each(|(g, d)| *g -= d);
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(*a), self.value(*b));
                for ((g, d), y) in slot(grads, nodes, *a).iter_mut().zip(dy).zip(bv) {
                    *g += d * y;
                }
                for ((g, d), x) in slot(grads, nodes, *b).iter_mut().zip(dy).zip(av) {
                    *g += d * x;
                }
            }
            Op::Affine { x, scale } => {
                slot(grads, nodes, *x)
                    .iter_mut()
                    .zip(dy)
                    .for_each(|(g, d)| *g += scale * d);
            }
            Op::Sigmoid(x) => {
                for ((g, d), y) in slot(grads, nodes, *x).iter_mut().zip(dy).zip(&node.value) {
                    *g += d * y * (1.0 - y);
                }
            }
            Op::Tanh(x) => {
                for ((g, d), y) in slot(grads, nodes, *x).iter_mut().zip(dy).zip(&node.value) {
                    *g += d * (1.0 - y * y);
                }
            }
            Op::Relu(x) => {
                let xv = self.value(*x);
                for ((g, d), v) in slot(grads, nodes, *x).iter_mut().zip(dy).zip(xv) {
                    if *v > 0.0 {
                        *g += d;
                    }
                }
            }
            Op::HardTanh(x) => {
                let xv = self.value(*x);
                for ((g, d), v) in slot(grads, nodes, *x).iter_mut().zip(dy).zip(xv) {
                    // Subgradient 0 at the kinks |x| = 1.
                    if v.abs() < 1.0 {
                        *g += d;
                    }
                }
            }
            Op::Softmax(x) => {
                let y = &node.value;
                let inner: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
                for ((g, d), yi) in slot(grads, nodes, *x).iter_mut().zip(dy).zip(y) {
                    *g += yi * (d - inner);
                }
            }
            Op::Cumsum(x) => {
                let mut acc = 0.0;
                let g = slot(grads, nodes, *x);
                for k in (0..dy.len()).rev() {
                    acc += dy[k];
                    g[k] += acc;
                }
            }
            Op::SuffixProd(x) => {
                let xv = self.value(*x);
                let n = xv.len();
                // after[j] = x_{j+1} ⋯ x_{n-1}
                let mut after = vec![1.0; n];
                for j in (0..n.saturating_sub(1)).rev() {
                    after[j] = after[j + 1] * xv[j + 1];
                }
                let g = slot(grads, nodes, *x);
                for i in 0..n {
                    if dy[i] == 0.0 {
                        continue;
                    }
                    // before = x_i ⋯ x_{j-1}, grown as j advances
                    let mut before = 1.0;
                    for j in i..n {
                        g[j] += dy[i] * before * after[j];
                        before *= xv[j];
                    }
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let g = slot(grads, nodes, p);
                    let n = g.len();
                    g.iter_mut().zip(&dy[offset..offset + n]).for_each(|(a, d)| *a += d);
                    offset += n;
                }
            }
            Op::Slice { x, start } => {
                let g = slot(grads, nodes, *x);
                g[*start..*start + dy.len()]
                    .iter_mut()
                    .zip(dy)
                    .for_each(|(a, d)| *a += d);
            }
            Op::Stack(rows) => {
                let c = dy.len() / rows.len();
                for (k, &r) in rows.iter().enumerate() {
                    slot(grads, nodes, r)
                        .iter_mut()
                        .zip(&dy[k * c..(k + 1) * c])
                        .for_each(|(a, d)| *a += d);
                }
            }
            Op::RepeatEach { x, times } => {
                let g = slot(grads, nodes, *x);
                for (k, chunk) in dy.chunks(*times).enumerate() {
                    g[k] += chunk.iter().sum::<f64>();
                }
            }
            Op::Broadcast(s) => {
                slot(grads, nodes, *s)[0] += dy.iter().sum::<f64>();
            }
            Op::Sum(x) => {
                let d = dy[0];
                slot(grads, nodes, *x).iter_mut().for_each(|g| *g += d);
            }
            Op::Dot(a, b) => {
                let d = dy[0];
                let (av, bv) = (self.value(*a), self.value(*b));
                for (g, y) in slot(grads, nodes, *a).iter_mut().zip(bv) {
                    *g += d * y;
                }
                for (g, x) in slot(grads, nodes, *b).iter_mut().zip(av) {
                    *g += d * x;
                }
            }
            Op::DivBy { x, s } => {
                let sv = self.value(*s)[0];
                let xv = self.value(*x);
                slot(grads, nodes, *x)
                    .iter_mut()
                    .zip(dy)
                    .for_each(|(g, d)| *g += d / sv);
                let ds: f64 = dy.iter().zip(xv).map(|(d, v)| d * v).sum();
                slot(grads, nodes, *s)[0] -= ds / (sv * sv);
            }
            Op::AdditiveScores { q, keys, v } => {
                let (n, a) = self.shape(*keys).matrix();
                let t = &node.aux;
                let vv = self.value(*v);
                let mut pre = vec![0.0; n * a];
                {
                    let gv = slot(grads, nodes, *v);
                    for j in 0..n {
                        for k in 0..a {
                            let h = t[j * a + k];
                            gv[k] += dy[j] * h;
                            pre[j * a + k] = dy[j] * vv[k] * (1.0 - h * h);
                        }
                    }
                }
                {
                    let gq = slot(grads, nodes, *q);
                    for j in 0..n {
                        for k in 0..a {
                            gq[k] += pre[j * a + k];
                        }
                    }
                }
                slot(grads, nodes, *keys)
                    .iter_mut()
                    .zip(&pre)
                    .for_each(|(g, p)| *g += p);
            }
            Op::CrossEntropy { logits, target } => {
                let d = dy[0];
                let g = slot(grads, nodes, *logits);
                for (k, (gk, p)) in g.iter_mut().zip(&node.aux).enumerate() {
                    let onehot = if k == *target { 1.0 } else { 0.0 };
                    *gk += d * (p - onehot);
                }
            }
        }
    }
}

fn slot<'a>(grads: &'a mut [Vec<f64>], nodes: &[Node], v: Var) -> &'a mut Vec<f64> {
    let g = &mut grads[v.0];
    if g.is_empty() {
        *g = vec![0.0; nodes[v.0].shape.len()];
    }
    g
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}
