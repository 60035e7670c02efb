// Copyright 2026 The asote authors.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Neural components: encoder stack, task heads and checkpointed models.

mod checkpoint;
pub mod encoder;
pub mod heads;
pub mod ops;
pub mod params;
mod task;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoding::{EncodingError, TokenizerError, Variant};

pub use encoder::{Batch, EncoderConfig, EncoderStack, Precision};
pub use heads::{
    aopsc_loss, opinion_representation, sentiment_distribution, tag_distributions, tagging_loss,
    SentimentHead, TaggingHead,
};
pub use ops::{DropoutRng, Mode};
pub use params::ParamStore;
pub use task::{EncoderChoice, SentimentInstance, TaggingInstance, TaskModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("tensor error: {0}")]
    Candle(#[from] candle_core::Error),
    #[error(transparent)]
    Encoding(#[from] EncodingError),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("token id {id} is outside a vocabulary of {vocab_size}")]
    OutOfVocabulary { id: u32, vocab_size: usize },
    #[error("position {position} is outside {max_positions} position embeddings")]
    PositionOutOfRange { position: u32, max_positions: usize },
    #[error("expected width {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("opinion has no token positions")]
    EmptyPositions,
    #[error("position {position} is outside a sequence of {length}")]
    PositionOutsideSequence { position: usize, length: usize },
    #[error("{what}: expected {expected}, found {found}")]
    Misaligned {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid encoder configuration: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("checkpoint was trained with variant {found}, expected {expected}")]
    VariantMismatch { expected: String, found: String },
    #[error("checkpoint holds a {found} model, expected {expected}")]
    TaskMismatch { expected: ModelTask, found: ModelTask },
    #[error("loss became non-finite ({0})")]
    NonFinite(f64),
}

/// The three sub-tasks, each served by its own model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTask {
    Ate,
    Towe,
    Aopsc,
}

impl ModelTask {
    pub const ALL: [ModelTask; 3] = [ModelTask::Ate, ModelTask::Towe, ModelTask::Aopsc];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelTask::Ate => "ate",
            ModelTask::Towe => "towe",
            ModelTask::Aopsc => "aopsc",
        }
    }

    /// ATE reads the bare sentence; the other two are aspect-conditioned.
    pub fn uses_variant(self) -> bool {
        self != ModelTask::Ate
    }
}

impl fmt::Display for ModelTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelTask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ate" => Ok(ModelTask::Ate),
            "towe" => Ok(ModelTask::Towe),
            "aopsc" => Ok(ModelTask::Aopsc),
            other => Err(format!("unknown task `{other}` (expected ate, towe or aopsc)")),
        }
    }
}

fn variant_label(v: Option<Variant>) -> String {
    v.map_or_else(|| "none".to_owned(), |v| v.as_str().to_owned())
}
