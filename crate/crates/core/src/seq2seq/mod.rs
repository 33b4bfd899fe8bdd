//! Encoder-decoder harness shared by the three decoders.

pub mod attention;
pub mod beam;
pub mod decoder;
pub mod encoder;
pub mod evaluate;
pub mod model;
pub mod parse;
pub mod train;

pub use attention::{Attention, AttentionMemory, Context};
pub use beam::{beam_candidates, beam_search, greedy, BeamConfig, Hypothesis};
pub use decoder::{Decoder, DecoderKind, DecoderState, ParseScores};
pub use encoder::{Encoder, EncoderOutput};
pub use evaluate::{evaluate, EvalReport, TestSet};
pub use model::{Mode, ModelConfig, Seq2SeqModel};
pub use parse::{eos_probe_parse, parse_target_teacher_forced};
pub use train::{train, Example, TrainConfig, TrainLog};
