use serde::{Deserialize, Serialize};

use super::param::ParamStore;
use crate::error::{bail, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64) -> Result<Self> {
        if !(lr >= 0.0) || !lr.is_finite() {
            bail!(Config, "learning rate must be a non-negative number, got {}", lr);
        }
        Ok(Optimizer {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        })
    }

    /// Applies one update from the gradient slots and bumps the step counter.
    pub fn step(&self, store: &mut ParamStore) {
        store.step += 1;
        let t = store.step as f64;
        match self.kind {
            OptimizerKind::Sgd => {
                for p in store.iter_mut() {
                    for (w, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
                        *w -= self.lr * g;
                    }
                }
            }
            OptimizerKind::Adam => {
                let c1 = 1.0 - libm::pow(self.beta1, t);
                let c2 = 1.0 - libm::pow(self.beta2, t);
                for p in store.iter_mut() {
                    let n = p.value.len();
                    for k in 0..n {
                        let g = p.grad.data()[k];
                        let m = &mut p.first_moment.data_mut()[k];
                        *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                        let m_hat = *m / c1;
                        let v = &mut p.second_moment.data_mut()[k];
                        *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                        let v_hat = *v / c2;
                        p.value.data_mut()[k] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
                    }
                }
            }
        }
    }
}
