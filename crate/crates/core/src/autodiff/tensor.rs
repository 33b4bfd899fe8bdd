use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

/// Dense row-major array of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            bail!(
                Contract,
                "shape {:?} needs {} values, got {}",
                shape,
                expected,
                data.len()
            );
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; n],
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(x: f64) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![x],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn fill(&mut self, x: f64) {
        self.data.iter_mut().for_each(|v| *v = x);
    }

    /// Iterates over every 1-D lane along `axis` as (offset, stride, length).
    fn lanes(&self, axis: usize) -> Result<impl Iterator<Item = (usize, usize)> + '_> {
        if axis >= self.shape.len() {
            bail!(Contract, "axis {} out of range for shape {:?}", axis, self.shape);
        }
        let stride: usize = self.shape[axis + 1..].iter().product();
        let len = self.shape[axis];
        let outer: usize = self.shape[..axis].iter().product();
        Ok((0..outer).flat_map(move |o| (0..stride).map(move |i| (o * len * stride + i, stride))))
    }
}

/// Max-subtracted softmax over `axis`.
pub fn softmax(x: &Tensor, axis: usize) -> Result<Tensor> {
    if !x.is_finite() {
        bail!(InvalidValue, "softmax input contains non-finite values");
    }
    let len = x.shape.get(axis).copied().unwrap_or(0);
    let mut out = x.clone();
    for (start, stride) in x.lanes(axis)? {
        let idx = |k: usize| start + k * stride;
        let max = (0..len).map(|k| x.data[idx(k)]).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for k in 0..len {
            let e = libm::exp(x.data[idx(k)] - max);
            out.data[idx(k)] = e;
            total += e;
        }
        for k in 0..len {
            out.data[idx(k)] /= total;
        }
    }
    Ok(out)
}

/// Inclusive prefix sum over `axis`.
pub fn cumsum(x: &Tensor, axis: usize) -> Result<Tensor> {
    let len = x.shape.get(axis).copied().unwrap_or(0);
    let mut out = x.clone();
    for (start, stride) in x.lanes(axis)? {
        let mut acc = 0.0;
        for k in 0..len {
            acc += x.data[start + k * stride];
            out.data[start + k * stride] = acc;
        }
    }
    Ok(out)
}

pub fn hardtanh(x: &Tensor) -> Tensor {
    Tensor {
        shape: x.shape.clone(),
        data: x.data.iter().map(|v| v.clamp(-1.0, 1.0)).collect(),
    }
}

pub(crate) fn softmax_slice(x: &[f64], out: &mut [f64]) {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &v) in out.iter_mut().zip(x) {
        *o = libm::exp(v - max);
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}
