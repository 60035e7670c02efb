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

//! Aspect extraction, then per-aspect opinion extraction, then pair
//! sentiment classification, merged into triplets.

use std::path::Path;

use crate::encoding::{bio_decode, tags_from_subwords, EncodedInput, Variant};
use crate::model::{ModelError, ModelTask, TaskModel};
use crate::types::{Sentence, Sentiment, Span, Triplet};

/// The three trained models.
pub struct PipelineBundle {
    ate: TaskModel,
    towe: TaskModel,
    aopsc: TaskModel,
}

impl PipelineBundle {
    pub fn new(ate: TaskModel, towe: TaskModel, aopsc: TaskModel) -> Result<Self, ModelError> {
        for (model, task) in [(&ate, ModelTask::Ate), (&towe, ModelTask::Towe), (&aopsc, ModelTask::Aopsc)] {
            if model.task() != task {
                return Err(ModelError::TaskMismatch {
                    expected: task,
                    found: model.task(),
                });
            }
        }
        Ok(Self { ate, towe, aopsc })
    }

    /// Loads three checkpoints, checking that the aspect-conditioned ones
    /// were trained with the expected variants.
    pub fn load(
        ate: &Path,
        towe: &Path,
        aopsc: &Path,
        towe_variant: Variant,
        aopsc_variant: Variant,
    ) -> Result<Self, ModelError> {
        Self::new(
            TaskModel::load_expecting(ate, ModelTask::Ate, None)?,
            TaskModel::load_expecting(towe, ModelTask::Towe, Some(towe_variant))?,
            TaskModel::load_expecting(aopsc, ModelTask::Aopsc, Some(aopsc_variant))?,
        )
    }

    pub fn ate(&self) -> &TaskModel {
        &self.ate
    }

    pub fn towe(&self) -> &TaskModel {
        &self.towe
    }

    pub fn aopsc(&self) -> &TaskModel {
        &self.aopsc
    }
}

/// Decodes a tagger's spans over `input` back to sentence words.
pub fn tagged_spans(model: &TaskModel, sentence: &Sentence, input: &EncodedInput) -> Result<Vec<Span>, ModelError> {
    let tags = tags_from_subwords(&model.tag(input)?, input)?;
    bio_decode(&tags)
        .into_iter()
        .map(|s| Ok(sentence.span(s.start() as i64, s.end() as i64).expect("decoded spans lie inside the sentence")))
        .collect()
}

pub fn extract_aspects(sentence: &Sentence, bundle: &PipelineBundle) -> Result<Vec<Span>, ModelError> {
    let input = bundle.ate.encode_sentence(sentence)?;
    tagged_spans(&bundle.ate, sentence, &input)
}

/// Opinions of `aspect`. Predictions on the aspect's own words, on added
/// tokens and on truncated words are ignored.
pub fn extract_opinions(sentence: &Sentence, aspect: &Span, bundle: &PipelineBundle) -> Result<Vec<Span>, ModelError> {
    let input = bundle.towe.encode_aspect(sentence, aspect)?;
    tagged_spans(&bundle.towe, sentence, &input)
}

/// One sentiment per opinion from a single encoder pass over the aspect's
/// input. Each opinion is represented by all of its subword tokens.
pub fn classify_pairs(
    sentence: &Sentence,
    aspect: &Span,
    opinions: &[Span],
    bundle: &PipelineBundle,
) -> Result<Vec<Sentiment>, ModelError> {
    if opinions.is_empty() {
        return Err(ModelError::EmptyPositions);
    }
    let input = bundle.aopsc.encode_aspect(sentence, aspect)?;
    let positions: Vec<Vec<usize>> = opinions.iter().map(|o| input.tokens_of(o)).collect();
    bundle.aopsc.classify(&input, &positions)
}

pub fn extract_triplets(sentence: &Sentence, bundle: &PipelineBundle) -> Result<Vec<Triplet>, ModelError> {
    let mut triplets = Vec::new();
    for aspect in extract_aspects(sentence, bundle)? {
        let opinions = extract_opinions(sentence, &aspect, bundle)?;
        if opinions.is_empty() {
            continue;
        }
        let sentiments = classify_pairs(sentence, &aspect, &opinions, bundle)?;
        for (opinion, sentiment) in opinions.into_iter().zip(sentiments) {
            triplets.push(Triplet::from_parts(aspect.clone(), sentiment, opinion));
        }
    }
    Ok(triplets)
}
