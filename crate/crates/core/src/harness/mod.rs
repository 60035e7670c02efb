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

//! Configuration, training, prediction and experiment orchestration.

mod config;
mod experiment;
mod train;

use std::path::Path;

use thiserror::Error;

use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::model::ModelError;

pub use config::{DataPaths, EarlyStopMetric, EncoderSetting, TrainConfig, CONFIG_KEYS};
pub use experiment::{
    predict, predict_split, run_experiment, score_predictions, stats_command, Checkpoints,
    ExperimentReport, SeedReport, DEFAULT_SEEDS,
};
pub use train::{
    fit, gold_opinions, gold_pairs, init_model, predict_aspects, predict_opinions, predict_pairs,
    sentiment_instances, tagging_instances, task_report, train, write_log, EpochRecord, Fitted,
    TrainOutcome,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("loss is {value} at epoch {epoch}, step {step}; lower the learning rate or check the data")]
    NonFinite { epoch: usize, step: usize, value: f64 },
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Corpus(_) => "data",
            HarnessError::Model(ModelError::VariantMismatch { .. } | ModelError::TaskMismatch { .. }) => "checkpoint",
            HarnessError::Model(ModelError::Checkpoint(_)) => "checkpoint",
            HarnessError::Model(_) => "model",
            HarnessError::Eval(_) => "eval",
            HarnessError::Io { .. } => "io",
            HarnessError::NonFinite { .. } => "training",
        }
    }
}
