use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decoder::DecoderKind;
use super::model::{Mode, Seq2SeqModel};
use crate::autodiff::{Graph, Optimizer, OptimizerKind, Tensor};
use crate::error::{bail, Error, Result};

/// One training pair; `source` is absent for language modelling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub source: Option<Vec<usize>>,
    pub target: Vec<usize>,
}

impl Example {
    pub fn mt(source: Vec<usize>, target: Vec<usize>) -> Self {
        Example {
            source: Some(source),
            target,
        }
    }

    pub fn lm(target: Vec<usize>) -> Self {
        Example { source: None, target }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// Sentences per update.
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop after this many updates regardless of epochs.
    pub max_steps: Option<usize>,
    pub seed: u64,
    pub clip_norm: f64,
    /// Epochs without dev improvement before stopping.
    pub patience: usize,
}

impl TrainConfig {
    /// Adam at 5e-4 for translation; language models use Adam at 1e-3 for
    /// PRPN and SGD at 0.7 for ON-LSTM.
    pub fn defaults_for(mode: Mode, decoder: DecoderKind) -> Self {
        let (optimizer, lr) = match (mode, decoder) {
            (Mode::Mt, _) => (OptimizerKind::Adam, 0.0005),
            (Mode::Lm, DecoderKind::OnLstm) => (OptimizerKind::Sgd, 0.7),
            (Mode::Lm, _) => (OptimizerKind::Adam, 0.001),
        };
        TrainConfig {
            optimizer,
            lr,
            batch_size: 16,
            max_epochs: 20,
            max_steps: None,
            seed: 1,
            clip_norm: 5.0,
            patience: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            bail!(Config, "learning rate must be positive, got {}", self.lr);
        }
        if self.batch_size == 0 {
            bail!(Config, "batch size must be positive");
        }
        if !(self.clip_norm > 0.0) {
            bail!(Config, "clip norm must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub steps: usize,
    /// Mean per-token training loss over the epoch.
    pub train_loss: f64,
    pub dev_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub steps: usize,
    /// Epoch whose parameters were kept (the best on dev, or the last).
    pub best_epoch: usize,
    pub stopped_early: bool,
    /// Per-token loss of every update.
    pub step_losses: Vec<f64>,
}

/// Batches of example indices: shuffled, then grouped by target length, then
/// the batch order shuffled again.
pub fn length_bucketed_batches(lengths: &[usize], batch_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.shuffle(rng);
    order.sort_by_key(|&i| lengths[i]);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(|c| c.to_vec()).collect();
    batches.shuffle(rng);
    batches
}

/// Mean per-token loss over `data`.
pub fn mean_loss(model: &Seq2SeqModel, data: &[Example]) -> Result<f64> {
    let (mut total, mut count) = (0.0, 0usize);
    for ex in data {
        let (nll, n) = model.sentence_nll(ex.source.as_deref(), &ex.target)?;
        total += nll;
        count += n;
    }
    if count == 0 {
        bail!(Data, "no tokens to score");
    }
    Ok(total / count as f64)
}

/// Teacher-forced training with clipped updates and early stopping on dev
/// loss. The returned model holds the best parameters seen on dev.
pub fn train(
    model: &mut Seq2SeqModel,
    train: &[Example],
    dev: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<TrainLog> {
    config.validate()?;
    if train.is_empty() {
        bail!(Data, "training corpus is empty");
    }
    let optimizer = Optimizer::new(config.optimizer, config.lr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lengths: Vec<usize> = train.iter().map(|e| e.target.len()).collect();
    let mut log = TrainLog::default();
    let mut best: Option<(f64, Vec<Tensor>)> = None;
    let mut since_best = 0;
    'epochs: for epoch in 1..=config.max_epochs {
        let (mut epoch_loss, mut epoch_tokens) = (0.0, 0usize);
        for batch in length_bucketed_batches(&lengths, config.batch_size, &mut rng) {
            if config.max_steps.is_some_and(|m| log.steps >= m) {
                break;
            }
            model.store.zero_grads();
            let (mut batch_loss, mut batch_tokens) = (0.0, 0usize);
            for &i in &batch {
                let ex = &train[i];
                let grads = {
                    let mut g = Graph::new(&model.store);
                    let tf = model.teacher_forced(&mut g, ex.source.as_deref(), &ex.target)?;
                    let value = g.scalar_value(tf.loss);
                    if !value.is_finite() {
                        return Err(divergence(log.steps, epoch, i, value, &log));
                    }
                    batch_loss += value;
                    batch_tokens += tf.tokens;
                    g.backward(tf.loss)?
                };
                model.store.accumulate(&grads);
            }
            model.store.scale_grads(1.0 / batch_tokens as f64);
            let norm = model.store.clip_grad_norm(config.clip_norm);
            if !norm.is_finite() {
                return Err(divergence(log.steps, epoch, batch[0], norm, &log));
            }
            optimizer.step(&mut model.store);
            log.steps += 1;
            log.step_losses.push(batch_loss / batch_tokens as f64);
            epoch_loss += batch_loss;
            epoch_tokens += batch_tokens;
        }
        if epoch_tokens == 0 {
            break;
        }
        let dev_loss = if dev.is_empty() {
            None
        } else {
            Some(mean_loss(model, dev)?)
        };
        let entry = EpochLog {
            epoch,
            steps: log.steps,
            train_loss: epoch_loss / epoch_tokens as f64,
            dev_loss,
        };
        on_epoch(&entry);
        log.epochs.push(entry);
        log.best_epoch = epoch;
        if let Some(d) = dev_loss {
            if !d.is_finite() {
                return Err(divergence(log.steps, epoch, 0, d, &log));
            }
            match &best {
                Some((b, _)) if d >= *b => {
                    since_best += 1;
                    if since_best >= config.patience {
                        log.stopped_early = true;
                        break 'epochs;
                    }
                }
                _ => {
                    best = Some((d, model.store.iter().map(|(_, p)| p.value.clone()).collect()));
                    since_best = 0;
                }
            }
        }
    }
    if let Some((_, values)) = best {
        for (p, v) in model.store.iter_mut().zip(values) {
            p.value = v;
        }
        log.best_epoch = log
            .epochs
            .iter()
            .filter(|e| e.dev_loss.is_some())
            .min_by(|a, b| {
                a.dev_loss
                    .partial_cmp(&b.dev_loss)
                    .unwrap_or(core::cmp::Ordering::Equal)
            })
            .map_or(log.best_epoch, |e| e.epoch);
    }
    Ok(log)
}

fn divergence(step: usize, epoch: usize, example: usize, value: f64, log: &TrainLog) -> Error {
    let recent: Vec<f64> = log.step_losses.iter().rev().take(5).rev().copied().collect();
    Error::Numerical(format!(
        "training diverged at step {} (epoch {}, example {}): value {}; last step losses {:?}",
        step, epoch, example, value, recent
    ))
}
