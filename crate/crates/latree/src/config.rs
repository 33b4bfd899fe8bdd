//! Flat `key = value` configuration files.

use std::collections::BTreeMap;

use latree_core::autodiff::OptimizerKind;
use latree_core::seq2seq::{ModelConfig, TrainConfig};
use latree_core::{Error, Result};

/// Every accepted key with its type and meaning, for `--help`.
pub const KEYS: &[(&str, &str)] = &[
    ("embed", "usize: embedding width"),
    (
        "hidden",
        "usize: decoder state width (encoder states are projected to it)",
    ),
    ("encoder_hidden", "usize: width of each encoder direction"),
    ("attention", "usize: additive attention width"),
    ("lookback", "usize: PRPN distance kernel look-back L"),
    ("temperature", "f64: PRPN gate temperature"),
    ("parser_hidden", "usize: PRPN distance kernel width"),
    ("head_hidden", "usize: PRPN output feedforward width"),
    ("chunk", "usize: ON-LSTM chunk factor (must divide hidden)"),
    ("layers", "usize: ON-LSTM layer count"),
    ("init_range", "f64: uniform initialization half-width"),
    ("optimizer", "adam | sgd"),
    ("lr", "f64: learning rate"),
    ("batch_size", "usize: sentences per update"),
    ("max_epochs", "usize"),
    ("max_steps", "usize: stop after this many updates"),
    ("clip_norm", "f64: gradient L2 clipping threshold"),
    ("patience", "usize: epochs without dev improvement before stopping"),
    (
        "max_src_vocab",
        "usize: source vocabulary size, reserved symbols included",
    ),
    (
        "max_tgt_vocab",
        "usize: target vocabulary size, reserved symbols included",
    ),
];

pub fn keys_help() -> String {
    let mut s = String::from("config keys (key = value, '#' comments):\n");
    for (k, d) in KEYS {
        s.push_str(&format!("  {:<16} {}\n", k, d));
    }
    s
}

/// Parsed but untyped settings, in file order (later lines win).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings {
    pub values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataConfig {
    pub max_src_vocab: usize,
    pub max_tgt_vocab: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            max_src_vocab: 10_000,
            max_tgt_vocab: 10_000,
        }
    }
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("config line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if k == "seed" {
                return Err(Error::Config(
                    "the seed is set with --seed, not in the config file".into(),
                ));
            }
            if !KEYS.iter().any(|(name, _)| *name == k) {
                return Err(Error::Config(format!("config line {}: unknown key '{}'", i + 1, k)));
            }
            values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Settings { values })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.values
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("config key '{}': cannot parse '{}'", key, v)))
            })
            .transpose()
    }

    pub fn apply_data(&self, d: &mut DataConfig) -> Result<()> {
        set(&mut d.max_src_vocab, self.get("max_src_vocab")?);
        set(&mut d.max_tgt_vocab, self.get("max_tgt_vocab")?);
        Ok(())
    }

    pub fn apply_model(&self, m: &mut ModelConfig) -> Result<()> {
        set(&mut m.embed, self.get("embed")?);
        set(&mut m.hidden, self.get("hidden")?);
        set(&mut m.encoder_hidden, self.get("encoder_hidden")?);
        set(&mut m.attention, self.get("attention")?);
        set(&mut m.lookback, self.get("lookback")?);
        set(&mut m.temperature, self.get("temperature")?);
        set(&mut m.parser_hidden, self.get("parser_hidden")?);
        set(&mut m.head_hidden, self.get("head_hidden")?);
        set(&mut m.chunk, self.get("chunk")?);
        set(&mut m.layers, self.get("layers")?);
        set(&mut m.init_range, self.get("init_range")?);
        Ok(())
    }

    pub fn apply_train(&self, t: &mut TrainConfig) -> Result<()> {
        if let Some(o) = self.values.get("optimizer") {
            t.optimizer = match o.as_str() {
                "adam" => OptimizerKind::Adam,
                "sgd" => OptimizerKind::Sgd,
                other => return Err(Error::Config(format!("unknown optimizer '{}'", other))),
            };
        }
        set(&mut t.lr, self.get("lr")?);
        set(&mut t.batch_size, self.get("batch_size")?);
        set(&mut t.max_epochs, self.get("max_epochs")?);
        if let Some(s) = self.get("max_steps")? {
            t.max_steps = Some(s);
        }
        set(&mut t.clip_norm, self.get("clip_norm")?);
        set(&mut t.patience, self.get("patience")?);
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
