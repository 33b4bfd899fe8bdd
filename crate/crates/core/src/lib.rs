//! Latent-tree sequence models and their evaluation.
#![no_std]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::large_enum_variant,
    clippy::type_complexity
)]
extern crate alloc;

pub mod autodiff;
mod error;
pub mod metrics;
pub mod nn;
pub mod onlstm;
pub mod prpn;
pub mod seq2seq;
pub mod synth;
pub mod tokenize;
pub mod treebank;

pub use error::{Error, Result};
