use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use crate::error::{bail, Result};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// A trainable tensor with its gradient slot and adaptive-optimizer moments.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub first_moment: Tensor,
    pub second_moment: Tensor,
}

impl Parameter {
    fn new(name: String, value: Tensor) -> Self {
        let zeros = Tensor::zeros(value.shape());
        Parameter {
            name,
            grad: zeros.clone(),
            first_moment: zeros.clone(),
            second_moment: zeros,
            value,
        }
    }
}

/// Owns every parameter of a model, in registration order.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Parameter>,
    /// Optimizer step counter (shared by all parameters).
    pub step: u64,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Parameter::new(name.into(), value));
        ParamId(self.params.len() - 1)
    }

    /// Registers a parameter drawn uniformly from `[-range, range]`.
    pub fn add_uniform(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        range: f64,
        rng: &mut ChaCha8Rng,
    ) -> ParamId {
        let mut t = Tensor::zeros(shape);
        if range > 0.0 {
            for v in t.data_mut() {
                *v = rng.gen_range(-range..=range);
            }
        }
        self.add(name, t)
    }

    pub fn add_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.add(name, Tensor::zeros(shape))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Parameter {
        &self.params[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Parameter {
        &mut self.params[id.0]
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Parameter)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.iter_mut()
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill(0.0);
        }
    }

    /// Adds `grads` into the gradient slots.
    pub fn accumulate(&mut self, grads: &super::Gradients) {
        for (id, g) in grads.iter() {
            let slot = self.params[id.0].grad.data_mut();
            for (s, v) in slot.iter_mut().zip(g) {
                *s += v;
            }
        }
    }

    /// Global L2 norm of all gradient slots.
    pub fn grad_norm(&self) -> f64 {
        libm::sqrt(
            self.params
                .iter()
                .flat_map(|p| p.grad.data().iter())
                .map(|g| g * g)
                .sum(),
        )
    }

    /// Rescales gradients so their global norm is at most `max_norm`. Returns the
    /// norm before clipping.
    pub fn clip_grad_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.grad_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for p in &mut self.params {
                p.grad.data_mut().iter_mut().for_each(|g| *g *= scale);
            }
        }
        norm
    }

    pub fn scale_grads(&mut self, factor: f64) {
        for p in &mut self.params {
            p.grad.data_mut().iter_mut().for_each(|g| *g *= factor);
        }
    }

    /// Replaces all values from `(name, tensor)` pairs, checking names and shapes.
    pub fn load_values(&mut self, values: Vec<(String, Tensor)>) -> Result<()> {
        if values.len() != self.params.len() {
            bail!(
                Data,
                "checkpoint holds {} tensors, model has {}",
                values.len(),
                self.params.len()
            );
        }
        for (p, (name, t)) in self.params.iter_mut().zip(values) {
            if p.name != name || p.value.shape() != t.shape() {
                bail!(
                    Data,
                    "checkpoint tensor {} {:?} does not match {} {:?}",
                    name,
                    t.shape(),
                    p.name,
                    p.value.shape()
                );
            }
            p.value = t;
        }
        Ok(())
    }

    pub fn num_values(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }
}
