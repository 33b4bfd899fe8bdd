//! Reverse-mode differentiation over small dense tensors.

pub mod gradcheck;
mod graph;
mod optim;
mod param;
mod tensor;

pub use graph::{sigmoid, Gradients, Graph, Shape, Var};
pub use optim::{Optimizer, OptimizerKind};
pub use param::{ParamId, ParamStore, Parameter};
pub(crate) use tensor::softmax_slice;
pub use tensor::{cumsum, hardtanh, softmax, Tensor};
