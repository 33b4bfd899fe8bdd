use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::attention::{Attention, AttentionMemory, Context};
use super::decoder::{Decoder, DecoderKind, DecoderState, LstmDecoder};
use super::encoder::Encoder;
use crate::autodiff::{Graph, ParamStore, Var};
use crate::error::{bail, Error, Result};
use crate::nn::ParamBuilder;
use crate::onlstm::{OnLstmConfig, OnLstmDecoder};
use crate::prpn::{PrpnConfig, PrpnDecoder};
use crate::tokenize::{Vocab, BOS, EOS, PAD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Language model: decoder only, zero-width context.
    Lm,
    /// Translation: encoder plus attention.
    Mt,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Lm => "lm",
            Mode::Mt => "mt",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lm" => Ok(Mode::Lm),
            "mt" => Ok(Mode::Mt),
            other => Err(Error::Config(alloc::format!("unknown mode '{}'", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub mode: Mode,
    pub decoder: DecoderKind,
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    /// Decoder state width; encoder states are projected to this width.
    pub hidden: usize,
    pub encoder_hidden: usize,
    pub attention: usize,
    pub lookback: usize,
    pub temperature: f64,
    pub parser_hidden: usize,
    pub head_hidden: usize,
    pub chunk: usize,
    pub layers: usize,
    pub init_range: f64,
    pub seed: u64,
}

impl ModelConfig {
    /// Desk-scale defaults for a given decoder and mode.
    pub fn new(mode: Mode, decoder: DecoderKind, src_vocab: usize, tgt_vocab: usize) -> Self {
        ModelConfig {
            mode,
            decoder,
            src_vocab,
            tgt_vocab,
            embed: 32,
            hidden: 64,
            encoder_hidden: 32,
            attention: 32,
            lookback: 2,
            temperature: 10.0,
            parser_hidden: 32,
            head_hidden: 64,
            chunk: 2,
            layers: 3,
            init_range: 0.1,
            seed: 1,
        }
    }

    pub fn context_width(&self) -> usize {
        match self.mode {
            Mode::Lm => 0,
            Mode::Mt => self.hidden,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tgt_vocab <= EOS || (self.mode == Mode::Mt && self.src_vocab <= EOS) {
            bail!(Config, "vocabularies must hold the reserved symbols");
        }
        for (name, v) in [
            ("embed", self.embed),
            ("hidden", self.hidden),
            ("encoder_hidden", self.encoder_hidden),
            ("attention", self.attention),
        ] {
            if v == 0 {
                bail!(Config, "{} must be positive", name);
            }
        }
        if !(self.init_range >= 0.0) || !self.init_range.is_finite() {
            bail!(Config, "init_range must be a finite nonnegative number");
        }
        Ok(())
    }
}

/// Encoder, attention and decoder sharing one parameter store.
pub struct Seq2SeqModel {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub encoder: Option<Encoder>,
    pub attention: Option<Attention>,
    pub decoder: Decoder,
    pub src_vocab: Option<Vocab>,
    pub tgt_vocab: Vocab,
}

/// Everything one teacher-forced pass produces.
pub struct TeacherForced {
    /// Summed negative log-likelihood over predicted tokens.
    pub loss: Var,
    pub tokens: usize,
    pub state: DecoderState,
}

/// Source side of a decoding run, prepared once per sentence.
pub struct SourceMemory {
    memory: Option<AttentionMemory>,
}

impl Seq2SeqModel {
    /// Builds freshly initialized parameters. Registration order is fixed, so
    /// a config always maps to the same parameter layout.
    pub fn new(config: ModelConfig, src_vocab: Option<Vocab>, tgt_vocab: Vocab) -> Result<Self> {
        config.validate()?;
        if tgt_vocab.len() != config.tgt_vocab {
            bail!(
                Config,
                "target vocabulary has {} entries, config says {}",
                tgt_vocab.len(),
                config.tgt_vocab
            );
        }
        match (&src_vocab, config.mode) {
            (Some(v), Mode::Mt) if v.len() != config.src_vocab => {
                bail!(
                    Config,
                    "source vocabulary has {} entries, config says {}",
                    v.len(),
                    config.src_vocab
                )
            }
            (None, Mode::Mt) => bail!(Config, "translation mode needs a source vocabulary"),
            (Some(_), Mode::Lm) => bail!(Config, "language-model mode takes no source vocabulary"),
            _ => {}
        }
        let mut store = ParamStore::new();
        let mut b = ParamBuilder::new(&mut store, config.seed, config.init_range);
        let ctx = config.context_width();
        let (encoder, attention) = match config.mode {
            Mode::Mt => (
                Some(Encoder::new(
                    &mut b,
                    config.src_vocab,
                    config.embed,
                    config.encoder_hidden,
                    config.hidden,
                )),
                Some(Attention::new(&mut b, config.hidden, config.hidden, config.attention)),
            ),
            Mode::Lm => (None, None),
        };
        let decoder = match config.decoder {
            DecoderKind::Lstm => Decoder::Lstm(LstmDecoder::new(
                &mut b,
                config.tgt_vocab,
                config.embed,
                config.hidden,
                ctx,
            )),
            DecoderKind::Prpn => Decoder::Prpn(PrpnDecoder::new(
                &mut b,
                &PrpnConfig {
                    vocab: config.tgt_vocab,
                    embed: config.embed,
                    hidden: config.hidden,
                    lookback: config.lookback,
                    temperature: config.temperature,
                    parser_hidden: config.parser_hidden,
                    head_hidden: config.head_hidden,
                    context: ctx,
                },
            )?),
            DecoderKind::OnLstm => Decoder::OnLstm(OnLstmDecoder::new(
                &mut b,
                &OnLstmConfig {
                    vocab: config.tgt_vocab,
                    embed: config.embed,
                    hidden: config.hidden,
                    chunk: config.chunk,
                    layers: config.layers,
                    context: ctx,
                },
            )?),
        };
        Ok(Seq2SeqModel {
            config,
            store,
            encoder,
            attention,
            decoder,
            src_vocab,
            tgt_vocab,
        })
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    /// Encodes `source` (ignored in language-model mode).
    pub fn prepare(&self, g: &mut Graph, source: Option<&[usize]>) -> Result<SourceMemory> {
        match (self.config.mode, source) {
            (Mode::Lm, _) => Ok(SourceMemory { memory: None }),
            (Mode::Mt, None) => bail!(Contract, "translation mode needs a source sentence"),
            (Mode::Mt, Some(src)) => {
                let enc = self.encoder.as_ref().expect("mt model has an encoder");
                let att = self.attention.as_ref().expect("mt model has attention");
                let out = enc.encode(g, src)?;
                Ok(SourceMemory {
                    memory: Some(att.memory(g, &out)),
                })
            }
        }
    }

    pub fn context<'a>(&'a self, memory: &'a SourceMemory) -> Context<'a> {
        match (&self.attention, &memory.memory) {
            (Some(attention), Some(memory)) => Context::Attend { attention, memory },
            _ => Context::None,
        }
    }

    /// Teacher-forced pass reading `[BOS, target..]` and predicting
    /// `[target.., EOS]`. The target is cut at its first PAD.
    pub fn teacher_forced(&self, g: &mut Graph, source: Option<&[usize]>, target: &[usize]) -> Result<TeacherForced> {
        let target = strip_padding(target);
        let memory = self.prepare(g, source)?;
        let context = self.context(&memory);
        let mut state = self.decoder.start(g);
        let mut terms = Vec::with_capacity(target.len() + 1);
        let mut input = BOS;
        for &gold in target.iter().chain(core::iter::once(&EOS)) {
            if gold >= self.config.tgt_vocab {
                bail!(Data, "target id {} outside the vocabulary", gold);
            }
            let logits = self.decoder.step(g, &mut state, input, &context)?;
            terms.push(g.cross_entropy(logits, gold));
            input = gold;
        }
        let loss = g.add_all(&terms);
        Ok(TeacherForced {
            loss,
            tokens: terms.len(),
            state,
        })
    }

    /// Summed negative log-likelihood and number of predicted tokens.
    pub fn sentence_nll(&self, source: Option<&[usize]>, target: &[usize]) -> Result<(f64, usize)> {
        let mut g = Graph::new(&self.store);
        let tf = self.teacher_forced(&mut g, source, target)?;
        Ok((g.scalar_value(tf.loss), tf.tokens))
    }
}

/// Everything before the first PAD.
pub fn strip_padding(ids: &[usize]) -> &[usize] {
    let end = ids.iter().position(|&t| t == PAD).unwrap_or(ids.len());
    &ids[..end]
}
