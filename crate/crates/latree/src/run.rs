//! Run directories: everything needed to reload a trained model.
//!
//! ```text
//! RUN/manifest.json   how the run was produced
//! RUN/model.json      model configuration
//! RUN/train.json      training configuration
//! RUN/src.vocab       source vocabulary (translation runs only)
//! RUN/tgt.vocab       target vocabulary
//! RUN/params.ltsq     parameters
//! RUN/log.json        training log
//! ```

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use latree_core::seq2seq::{Mode, ModelConfig, Seq2SeqModel, TrainConfig, TrainLog};

use crate::{checkpoint, io};

pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        RunDir { path: path.into() }
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn save(&self, model: &Seq2SeqModel, train: &TrainConfig, log: &TrainLog) -> Result<()> {
        std::fs::create_dir_all(&self.path).with_context(|| format!("creating {}", self.path.display()))?;
        io::write_text(&self.file("model.json"), &serde_json::to_string_pretty(&model.config)?)?;
        io::write_text(&self.file("train.json"), &serde_json::to_string_pretty(train)?)?;
        if let Some(v) = &model.src_vocab {
            io::write_text(&self.file("src.vocab"), &io::format_vocab(v))?;
        }
        io::write_text(&self.file("tgt.vocab"), &io::format_vocab(&model.tgt_vocab))?;
        checkpoint::save(&self.file("params.ltsq"), &model.store)?;
        io::write_text(&self.file("log.json"), &serde_json::to_string_pretty(log)?)?;
        Ok(())
    }

    pub fn load(&self) -> Result<Seq2SeqModel> {
        let config: ModelConfig = serde_json::from_str(&io::read_text(&self.file("model.json"))?)
            .with_context(|| format!("parsing {}", self.file("model.json").display()))?;
        let src = match config.mode {
            Mode::Mt => Some(io::read_vocab(&self.file("src.vocab"))?),
            Mode::Lm => None,
        };
        let tgt = io::read_vocab(&self.file("tgt.vocab"))?;
        let mut model = Seq2SeqModel::new(config, src, tgt)?;
        checkpoint::load_into(&self.file("params.ltsq"), &mut model.store)?;
        Ok(model)
    }

    pub fn exists(path: &Path) -> bool {
        path.join("model.json").is_file()
    }
}
