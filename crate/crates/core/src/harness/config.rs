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

//! Training configuration, stored as TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::encoding::Variant;
use crate::model::{EncoderChoice, ModelTask};

/// Dev metric watched by early stopping. Each task has exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EarlyStopMetric {
    /// ATE: exact aspect span F1.
    SpanF1,
    /// TOWE: opinion span F1 on gold aspects.
    OpinionF1,
    /// AOPSC: pair sentiment accuracy on gold pairs.
    PairAccuracy,
}

impl EarlyStopMetric {
    pub fn for_task(task: ModelTask) -> Self {
        match task {
            ModelTask::Ate => EarlyStopMetric::SpanF1,
            ModelTask::Towe => EarlyStopMetric::OpinionF1,
            ModelTask::Aopsc => EarlyStopMetric::PairAccuracy,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EarlyStopMetric::SpanF1 => "span_f1",
            EarlyStopMetric::OpinionF1 => "opinion_f1",
            EarlyStopMetric::PairAccuracy => "pair_accuracy",
        }
    }
}

impl FromStr for EarlyStopMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "span_f1" => Ok(EarlyStopMetric::SpanF1),
            "opinion_f1" => Ok(EarlyStopMetric::OpinionF1),
            "pair_accuracy" => Ok(EarlyStopMetric::PairAccuracy),
            other => Err(format!("unknown early-stop metric `{other}`")),
        }
    }
}

/// `tiny` or `pretrained:<dir>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct EncoderSetting(pub EncoderChoice);

impl TryFrom<String> for EncoderSetting {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<EncoderSetting> for String {
    fn from(e: EncoderSetting) -> String {
        e.to_string()
    }
}

impl FromStr for EncoderSetting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "tiny" {
            return Ok(EncoderSetting(EncoderChoice::Tiny));
        }
        match s.strip_prefix("pretrained:") {
            Some(dir) if !dir.is_empty() => Ok(EncoderSetting(EncoderChoice::Pretrained(PathBuf::from(dir)))),
            _ => Err(format!("encoder must be `tiny` or `pretrained:<dir>`, got `{s}`")),
        }
    }
}

impl fmt::Display for EncoderSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            EncoderChoice::Tiny => f.write_str("tiny"),
            EncoderChoice::Pretrained(dir) => write!(f, "pretrained:{}", dir.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub test: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub task: ModelTask,
    /// Input variant of the aspect-conditioned models; ATE ignores it.
    pub variant: Variant,
    pub seed: u32,
    pub encoder: EncoderSetting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop_metric: Option<EarlyStopMetric>,
    pub data: DataPaths,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub patience: usize,
    pub max_epochs: usize,
}

/// Keys accepted by [`TrainConfig::set`], one per field.
pub const CONFIG_KEYS: [&str; 13] = [
    "task",
    "variant",
    "seed",
    "encoder",
    "early_stop_metric",
    "data.train",
    "data.dev",
    "data.test",
    "batch_size",
    "learning_rate",
    "dropout",
    "patience",
    "max_epochs",
];

impl TrainConfig {
    /// Defaults: batch 32, learning rate 2e-5, dropout 0.5, patience 10,
    /// at most 100 epochs, seed 0, tiny encoder, PBF inputs.
    pub fn new(task: ModelTask, data: DataPaths) -> Self {
        Self {
            task,
            variant: Variant::Pbf,
            seed: 0,
            encoder: EncoderSetting(EncoderChoice::Tiny),
            early_stop_metric: None,
            data,
            batch_size: 32,
            learning_rate: 2e-5,
            dropout: 0.5,
            patience: 10,
            max_epochs: 100,
        }
    }

    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if self.patience == 0 {
            return bad("patience must be at least 1".into());
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be at least 1".into());
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if let Some(metric) = self.early_stop_metric {
            if metric != EarlyStopMetric::for_task(self.task) {
                return bad(format!(
                    "early_stop_metric {} does not apply to task {}",
                    metric.as_str(),
                    self.task
                ));
            }
        }
        Ok(())
    }

    pub fn metric(&self) -> EarlyStopMetric {
        self.early_stop_metric.unwrap_or_else(|| EarlyStopMetric::for_task(self.task))
    }

    /// Variant handed to the model: none for ATE.
    pub fn model_variant(&self) -> Option<Variant> {
        self.task.uses_variant().then_some(self.variant)
    }

    /// Overrides one field by key; see [`CONFIG_KEYS`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| HarnessError::Config(format!("{key}: {e}")))
        }
        match key {
            "task" => self.task = parse(key, value)?,
            "variant" => self.variant = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "encoder" => self.encoder = parse(key, value)?,
            "early_stop_metric" => self.early_stop_metric = Some(parse(key, value)?),
            "data.train" => self.data.train = value.into(),
            "data.dev" => self.data.dev = value.into(),
            "data.test" => self.data.test = value.into(),
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "dropout" => self.dropout = parse(key, value)?,
            "patience" => self.patience = parse(key, value)?,
            "max_epochs" => self.max_epochs = parse(key, value)?,
            other => return Err(HarnessError::Config(format!("unknown config key `{other}`"))),
        }
        self.validate()
    }

    /// Hash of everything except the seed and the task, so the three models
    /// of one experiment and all of its seeds share a directory.
    pub fn experiment_hash(&self) -> String {
        let mut neutral = self.clone();
        neutral.seed = 0;
        neutral.task = ModelTask::Ate;
        neutral.early_stop_metric = None;
        let digest = Sha256::digest(neutral.render().as_bytes());
        hex::encode(&digest[..8])
    }

    /// `<root>/<experiment hash>/seed-<seed>`.
    pub fn run_dir(&self, root: &Path) -> PathBuf {
        root.join(self.experiment_hash()).join(format!("seed-{}", self.seed))
    }
}
