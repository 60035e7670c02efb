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

//! Single-file checkpoints: safetensors weights with the task, input
//! variant, encoder configuration and vocabulary in the header metadata.

use std::collections::HashMap;
use std::path::Path;

use safetensors::SafeTensors;
use serde::{Deserialize, Serialize};

use super::encoder::EncoderConfig;
use super::task::TaskModel;
use super::{variant_label, ModelError, ModelTask};
use crate::encoding::{Variant, WordPieceTokenizer};

const FORMAT: &str = "asote-checkpoint";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    task: ModelTask,
    variant: Option<Variant>,
    tokenizer: String,
    encoder: EncoderConfig,
}

impl TaskModel {
    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let header = Header {
            task: self.task,
            variant: self.variant,
            tokenizer: self.tokenizer.identifier().to_owned(),
            encoder: self.config().clone(),
        };
        let mut metadata = HashMap::new();
        metadata.insert("format".to_owned(), FORMAT.to_owned());
        metadata.insert("version".to_owned(), VERSION.to_string());
        metadata.insert(
            "meta".to_owned(),
            serde_json::to_string(&header).expect("header serializes"),
        );
        metadata.insert("vocab".to_owned(), self.tokenizer.pieces().join("\n"));
        let tensors: Vec<(String, candle_core::Tensor)> = self
            .params
            .iter()
            .map(|(name, var)| (name.to_owned(), var.as_tensor().clone()))
            .collect();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("partial");
        safetensors::serialize_to_file(tensors.iter().map(|(n, t)| (n.as_str(), t)), &Some(metadata), &tmp)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let bad = |msg: String| ModelError::Checkpoint(format!("{}: {msg}", path.display()));
        let buffer = std::fs::read(path)?;
        let (_, raw) = SafeTensors::read_metadata(&buffer).map_err(|e| bad(e.to_string()))?;
        let metadata = raw.metadata().clone().unwrap_or_default();
        let field = |key: &str| metadata.get(key).ok_or_else(|| bad(format!("missing `{key}` entry")));
        if field("format")? != FORMAT {
            return Err(bad("not a model checkpoint".into()));
        }
        let version = field("version")?;
        if version.parse::<u32>().ok() != Some(VERSION) {
            return Err(bad(format!("unsupported version {version}")));
        }
        let header: Header = serde_json::from_str(field("meta")?).map_err(|e| bad(e.to_string()))?;
        let pieces = field("vocab")?.split('\n').map(str::to_owned).collect();
        let tokenizer = WordPieceTokenizer::from_pieces(pieces)?;
        if tokenizer.identifier() != header.tokenizer {
            return Err(bad(format!(
                "vocabulary hashes to {}, header names {}",
                tokenizer.identifier(),
                header.tokenizer
            )));
        }
        let model = TaskModel::new(header.task, header.variant, tokenizer, header.encoder, 0)?;
        let tensors = candle_core::safetensors::load_buffer(&buffer, model.params.device())?;
        if tensors.len() != model.params.iter().count() {
            return Err(bad(format!(
                "holds {} tensors, model has {}",
                tensors.len(),
                model.params.iter().count()
            )));
        }
        for (name, value) in &tensors {
            model.params.assign(name, value)?;
        }
        Ok(model)
    }

    /// Loads and checks that the checkpoint serves `task` with `variant`.
    pub fn load_expecting(
        path: &Path,
        task: ModelTask,
        variant: Option<Variant>,
    ) -> Result<Self, ModelError> {
        let model = Self::load(path)?;
        if model.task != task {
            return Err(ModelError::TaskMismatch {
                expected: task,
                found: model.task,
            });
        }
        if model.variant != variant {
            return Err(ModelError::VariantMismatch {
                expected: variant_label(variant),
                found: variant_label(model.variant),
            });
        }
        Ok(model)
    }
}
