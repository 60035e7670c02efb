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

//! A model for one sub-task: encoder stack plus a three-way head.

use std::path::{Path, PathBuf};

use candle_core::{Tensor, Var};
use serde::{Deserialize, Serialize};

use super::encoder::{load_pretrained, Batch, EncoderConfig, EncoderStack};
use super::heads::{self, pooled_opinions, ClassifierHead};
use super::ops::{argmax_rows, softmax, Mode};
use super::params::ParamStore;
use super::{variant_label, ModelError, ModelTask};
use crate::encoding::{
    build_aspect_input, build_ate_input, EncodedInput, SubwordLabels, Tag, Variant,
    WordPieceTokenizer,
};
use crate::types::{Sentence, Sentiment, Span};

/// Which encoder weights to start from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderChoice {
    /// Small random-init encoder over a vocabulary built from the corpus.
    Tiny,
    /// Directory with `config.json`, `vocab.txt` and `model.safetensors`.
    Pretrained(PathBuf),
}

/// An encoded input with its per-token tag labels.
#[derive(Debug, Clone)]
pub struct TaggingInstance {
    pub input: EncodedInput,
    pub labels: SubwordLabels,
}

/// An aspect-conditioned input with each opinion's token positions and gold
/// sentiment.
#[derive(Debug, Clone)]
pub struct SentimentInstance {
    pub input: EncodedInput,
    pub opinions: Vec<(Vec<usize>, Sentiment)>,
}

pub struct TaskModel {
    pub(super) task: ModelTask,
    pub(super) variant: Option<Variant>,
    pub(super) tokenizer: WordPieceTokenizer,
    pub(super) params: ParamStore,
    pub(super) encoder: EncoderStack,
    pub(super) head: ClassifierHead,
}

impl TaskModel {
    /// Fresh model with seeded initialization. `variant` must be given
    /// exactly when the task is aspect-conditioned.
    pub fn new(
        task: ModelTask,
        variant: Option<Variant>,
        tokenizer: WordPieceTokenizer,
        config: EncoderConfig,
        seed: u64,
    ) -> Result<Self, ModelError> {
        if task.uses_variant() != variant.is_some() {
            return Err(ModelError::Config(format!(
                "task {task} cannot use input variant {}",
                variant_label(variant)
            )));
        }
        if config.vocab_size != tokenizer.vocab_size() {
            return Err(ModelError::Config(format!(
                "encoder vocabulary of {} does not match tokenizer vocabulary of {}",
                config.vocab_size,
                tokenizer.vocab_size()
            )));
        }
        let mut params = ParamStore::new(config.precision.dtype(), seed);
        let encoder = EncoderStack::new(&mut params, &config)?;
        let head = ClassifierHead::new(&mut params, "head", config.output_size())?;
        Ok(Self {
            task,
            variant,
            tokenizer,
            params,
            encoder,
            head,
        })
    }

    /// Model whose transformer starts from pretrained BERT weights in `dir`.
    pub fn pretrained(
        task: ModelTask,
        variant: Option<Variant>,
        dir: &Path,
        dropout: f64,
        seed: u64,
    ) -> Result<Self, ModelError> {
        let tokenizer = WordPieceTokenizer::from_vocab_file(&dir.join("vocab.txt"))?;
        let mut config = EncoderConfig::from_bert_config(&dir.join("config.json"))?;
        config.dropout = dropout;
        let model = Self::new(task, variant, tokenizer, config, seed)?;
        load_pretrained(&model.params, &dir.join("model.safetensors"))?;
        Ok(model)
    }

    pub fn task(&self) -> ModelTask {
        self.task
    }

    pub fn variant(&self) -> Option<Variant> {
        self.variant
    }

    pub fn tokenizer(&self) -> &WordPieceTokenizer {
        &self.tokenizer
    }

    pub fn config(&self) -> &EncoderConfig {
        self.encoder.config()
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn encoder(&self) -> &EncoderStack {
        &self.encoder
    }

    pub fn head(&self) -> &ClassifierHead {
        &self.head
    }

    pub fn trainable(&self) -> Vec<Var> {
        self.params.vars()
    }

    /// Token budget per input.
    pub fn budget(&self) -> usize {
        self.config().max_positions
    }

    pub fn encode_sentence(&self, sentence: &Sentence) -> Result<EncodedInput, ModelError> {
        Ok(build_ate_input(sentence, &self.tokenizer, self.budget())?)
    }

    /// Aspect-conditioned input under this model's variant.
    pub fn encode_aspect(&self, sentence: &Sentence, aspect: &Span) -> Result<EncodedInput, ModelError> {
        let variant = self.variant.ok_or_else(|| {
            ModelError::Config(format!("{} model takes no aspect input", self.task))
        })?;
        Ok(build_aspect_input(sentence, aspect, variant, &self.tokenizer, self.budget())?)
    }

    /// Hidden states `(B, T, width)` for a batch of inputs.
    pub fn hidden(&self, inputs: &[&EncodedInput], mode: &mut Mode<'_>) -> Result<Tensor, ModelError> {
        let batch = Batch::new(inputs, self.config(), self.tokenizer.pad_id(), self.params.device())?;
        self.encoder.forward(&batch, mode)
    }

    /// Argmax tag per token.
    pub fn tag(&self, input: &EncodedInput) -> Result<Vec<Tag>, ModelError> {
        let h = self.hidden(&[input], &mut Mode::Inference)?.squeeze(0)?;
        let probs = heads::tag_distributions(&h, &self.head)?;
        Ok(argmax_rows(&probs)?
            .into_iter()
            .map(|i| Tag::from_index(i).expect("three tag classes"))
            .collect())
    }

    /// Sentiment per opinion from one encoder pass; each opinion is given by
    /// its token positions. Ties go to the earlier class in
    /// positive, neutral, negative order.
    pub fn classify(&self, input: &EncodedInput, opinions: &[Vec<usize>]) -> Result<Vec<Sentiment>, ModelError> {
        if opinions.is_empty() {
            return Err(ModelError::EmptyPositions);
        }
        let h = self.hidden(&[input], &mut Mode::Inference)?;
        let targets = vec![opinions.iter().map(|p| (p.clone(), ())).collect::<Vec<_>>()];
        let (reps, _) = pooled_opinions(&h, &targets)?;
        let probs = softmax(&self.head.logits(&reps)?)?;
        Ok(argmax_rows(&probs)?
            .into_iter()
            .map(|i| Sentiment::from_index(i).expect("three sentiment classes"))
            .collect())
    }

    /// Mean per-example tagging loss.
    pub fn tagging_loss(&self, batch: &[&TaggingInstance], mode: &mut Mode<'_>) -> Result<Tensor, ModelError> {
        let inputs: Vec<&EncodedInput> = batch.iter().map(|b| &b.input).collect();
        let h = self.hidden(&inputs, mode)?;
        let gold: Vec<&[Option<Tag>]> = batch.iter().map(|b| b.labels.labels()).collect();
        heads::tagging_batch_loss(&h, &self.head, &gold)
    }

    /// Mean per-aspect opinion-summed sentiment loss.
    pub fn sentiment_loss(&self, batch: &[&SentimentInstance], mode: &mut Mode<'_>) -> Result<Tensor, ModelError> {
        let inputs: Vec<&EncodedInput> = batch.iter().map(|b| &b.input).collect();
        let h = self.hidden(&inputs, mode)?;
        let opinions: Vec<_> = batch.iter().map(|b| b.opinions.clone()).collect();
        heads::sentiment_batch_loss(&h, &self.head, &opinions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::{bio_encode, project_tags_to_subwords};
    use crate::model::ops::DropoutRng;
    use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};

    fn sentence() -> Sentence {
        Sentence::from_text("s", "Rice is too dry , tuna was n't so fresh").unwrap()
    }

    fn model(task: ModelTask, variant: Option<Variant>, seed: u64) -> TaskModel {
        let s = sentence();
        let tok = WordPieceTokenizer::build(s.words().iter().map(String::as_str));
        let config = EncoderConfig::tiny(tok.vocab_size());
        TaskModel::new(task, variant, tok, config, seed).unwrap()
    }

    fn flat(t: &Tensor) -> Vec<f64> {
        t.flatten_all().unwrap().to_vec1().unwrap()
    }

    #[test]
    fn inference_is_deterministic_and_shaped() {
        let m = model(ModelTask::Towe, Some(Variant::Pbf), 7);
        let input = m.encode_aspect(&sentence(), &Span::bounds(0, 0).unwrap()).unwrap();
        let a = m.hidden(&[&input], &mut Mode::Inference).unwrap();
        let b = m.hidden(&[&input], &mut Mode::Inference).unwrap();
        assert_eq!(a.dims(), &[1, input.len(), m.config().output_size()]);
        assert_eq!(flat(&a), flat(&b));
        let again = model(ModelTask::Towe, Some(Variant::Pbf), 7);
        assert_eq!(flat(&a), flat(&again.hidden(&[&input], &mut Mode::Inference).unwrap()));
    }

    #[test]
    fn padding_does_not_change_hidden_states() {
        let m = model(ModelTask::Ate, None, 1);
        let long = m.encode_sentence(&sentence()).unwrap();
        let short = m.encode_sentence(&Sentence::from_text("t", "tuna was fresh").unwrap()).unwrap();
        let alone = m.hidden(&[&short], &mut Mode::Inference).unwrap().squeeze(0).unwrap();
        let batched = m.hidden(&[&long, &short], &mut Mode::Inference).unwrap();
        let row = batched.get(1).unwrap().narrow(0, 0, short.len()).unwrap();
        for (x, y) in flat(&alone).iter().zip(flat(&row)) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn adam_steps_reduce_tagging_loss() {
        let m = model(ModelTask::Ate, None, 3);
        let s = sentence();
        let input = m.encode_sentence(&s).unwrap();
        let tags = bio_encode(&[Span::bounds(0, 0).unwrap(), Span::bounds(5, 5).unwrap()], s.len()).unwrap();
        let labels = project_tags_to_subwords(&tags, &input).unwrap();
        let inst = TaggingInstance { input, labels };
        let mut opt = AdamW::new(m.trainable(), ParamsAdamW { lr: 1e-2, weight_decay: 0.0, ..Default::default() }).unwrap();
        let mut rng = DropoutRng::new(0);
        let first: f64 = m.tagging_loss(&[&inst], &mut Mode::Inference).unwrap().to_scalar().unwrap();
        for _ in 0..30 {
            let loss = m.tagging_loss(&[&inst], &mut Mode::Training(&mut rng)).unwrap();
            opt.backward_step(&loss).unwrap();
        }
        let last: f64 = m.tagging_loss(&[&inst], &mut Mode::Inference).unwrap().to_scalar().unwrap();
        assert!(last < first * 0.5, "{first} -> {last}");
    }

    #[test]
    fn checkpoint_round_trip_and_variant_check() {
        let m = model(ModelTask::Aopsc, Some(Variant::M2), 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("aopsc.safetensors");
        m.save(&path).unwrap();
        let back = TaskModel::load_expecting(&path, ModelTask::Aopsc, Some(Variant::M2)).unwrap();
        let s = sentence();
        let input = m.encode_aspect(&s, &Span::bounds(5, 5).unwrap()).unwrap();
        let opinions = vec![input.tokens_of(&Span::bounds(9, 9).unwrap())];
        assert_eq!(m.classify(&input, &opinions).unwrap(), back.classify(&input, &opinions).unwrap());
        assert_eq!(
            flat(&m.hidden(&[&input], &mut Mode::Inference).unwrap()),
            flat(&back.hidden(&[&input], &mut Mode::Inference).unwrap())
        );
        assert!(matches!(
            TaskModel::load_expecting(&path, ModelTask::Aopsc, Some(Variant::Pbf)),
            Err(ModelError::VariantMismatch { .. })
        ));
        assert!(matches!(
            TaskModel::load_expecting(&path, ModelTask::Towe, Some(Variant::M2)),
            Err(ModelError::TaskMismatch { .. })
        ));
    }

    #[test]
    fn variant_must_match_task() {
        let s = sentence();
        let tok = WordPieceTokenizer::build(s.words().iter().map(String::as_str));
        let config = EncoderConfig::tiny(tok.vocab_size());
        assert!(TaskModel::new(ModelTask::Ate, Some(Variant::Pbf), tok.clone(), config.clone(), 0).is_err());
        assert!(TaskModel::new(ModelTask::Towe, None, tok, config, 0).is_err());
    }
}
