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

//! Epoch loop with early stopping, dev scoring and training instances.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use candle_nn::optim::{AdamW, Optimizer, ParamsAdamW};
use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::HarnessError;
use crate::corpus::{derive_aopsc_examples, derive_ate_examples, derive_towe_examples, load_split, DatasetSplit, SplitName};
use crate::encoding::{bio_encode, project_tags_to_subwords, WordPieceTokenizer};
use crate::eval::{score_aopsc, score_ate, score_towe, MetricReport, PairKey};
use crate::model::{
    DropoutRng, EncoderChoice, EncoderConfig, Mode, ModelError, ModelTask, SentimentInstance,
    TaggingInstance, TaskModel,
};
use crate::pipeline::tagged_spans;
use crate::types::{Sentiment, Span};

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_metric: f64,
    pub best_dev: f64,
    pub improved: bool,
}

/// A trained model with its log. The model holds the best-dev parameters.
pub struct Fitted {
    pub model: TaskModel,
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub best_epoch: usize,
    pub best_dev: f64,
    pub epochs_run: usize,
}

fn stream(seed: u32, purpose: u64) -> u64 {
    (u64::from(seed) << 8) | purpose
}

/// Fresh model for `config`; the tiny encoder's vocabulary comes from the
/// training sentences.
pub fn init_model(config: &TrainConfig, train: &DatasetSplit) -> Result<TaskModel, HarnessError> {
    let seed = stream(config.seed, 0);
    let model = match &config.encoder.0 {
        EncoderChoice::Tiny => {
            let tokenizer = WordPieceTokenizer::build(
                train.sentences.iter().flat_map(|s| s.sentence.words().iter().map(String::as_str)),
            );
            let mut encoder = EncoderConfig::tiny(tokenizer.vocab_size());
            encoder.dropout = config.dropout;
            TaskModel::new(config.task, config.model_variant(), tokenizer, encoder, seed)?
        }
        EncoderChoice::Pretrained(dir) => {
            TaskModel::pretrained(config.task, config.model_variant(), dir, config.dropout, seed)?
        }
    };
    Ok(model)
}

/// Per-token BIO instances for ATE or TOWE. Returns the instances and the
/// number of spans dropped because they overlapped an earlier one.
pub fn tagging_instances(model: &TaskModel, split: &DatasetSplit) -> Result<(Vec<TaggingInstance>, usize), HarnessError> {
    let mut out = Vec::new();
    let mut dropped = 0;
    let mut push = |input, spans: Vec<Span>, length| -> Result<(), HarnessError> {
        let mut kept: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            if kept.iter().any(|k| k.overlaps(&s)) {
                dropped += 1;
            } else {
                kept.push(s);
            }
        }
        kept.sort();
        let tags = bio_encode(&kept, length).map_err(ModelError::from)?;
        let labels = project_tags_to_subwords(&tags, &input).map_err(ModelError::from)?;
        out.push(TaggingInstance { input, labels });
        Ok(())
    };
    match model.task() {
        ModelTask::Ate => {
            let (examples, overlapping) = derive_ate_examples(split);
            for e in examples {
                let input = model.encode_sentence(&e.sentence)?;
                push(input, e.aspects, e.sentence.len())?;
            }
            dropped += overlapping;
        }
        ModelTask::Towe => {
            for e in derive_towe_examples(split, false) {
                let input = model.encode_aspect(&e.sentence, &e.aspect)?;
                push(input, e.gold_opinions, e.sentence.len())?;
            }
        }
        ModelTask::Aopsc => {
            return Err(HarnessError::Config("AOPSC is not a tagging task".into()));
        }
    }
    Ok((out, dropped))
}

/// Pair-sentiment instances, one per aspect with opinions. Opinions whose
/// words were all truncated away are skipped; their count is returned.
pub fn sentiment_instances(model: &TaskModel, split: &DatasetSplit) -> Result<(Vec<SentimentInstance>, usize), HarnessError> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for e in derive_aopsc_examples(split) {
        let input = model.encode_aspect(&e.sentence, &e.aspect)?;
        let mut opinions = Vec::with_capacity(e.opinions.len());
        for (opinion, sentiment) in e.opinions.iter().zip(&e.gold_sentiments) {
            let positions = input.tokens_of(opinion);
            if positions.is_empty() {
                skipped += 1;
            } else {
                opinions.push((positions, *sentiment));
            }
        }
        if !opinions.is_empty() {
            out.push(SentimentInstance { input, opinions });
        }
    }
    Ok((out, skipped))
}

/// Predicted aspects per sentence.
pub fn predict_aspects(model: &TaskModel, split: &DatasetSplit) -> Result<BTreeMap<String, Vec<Span>>, HarnessError> {
    split
        .sentences
        .iter()
        .map(|s| {
            let input = model.encode_sentence(&s.sentence)?;
            Ok((s.id().to_owned(), tagged_spans(model, &s.sentence, &input)?))
        })
        .collect()
}

/// Gold opinions per (sentence, gold aspect).
pub fn gold_opinions(split: &DatasetSplit) -> BTreeMap<(String, Span), Vec<Span>> {
    derive_towe_examples(split, false)
        .into_iter()
        .map(|e| ((e.sentence.id().to_owned(), e.aspect), e.gold_opinions))
        .collect()
}

/// Predicted opinions for every gold aspect.
pub fn predict_opinions(model: &TaskModel, split: &DatasetSplit) -> Result<BTreeMap<(String, Span), Vec<Span>>, HarnessError> {
    derive_towe_examples(split, false)
        .into_iter()
        .map(|e| {
            let input = model.encode_aspect(&e.sentence, &e.aspect)?;
            let spans = tagged_spans(model, &e.sentence, &input)?;
            Ok(((e.sentence.id().to_owned(), e.aspect), spans))
        })
        .collect()
}

/// Gold sentiment per (sentence, aspect, opinion).
pub fn gold_pairs(split: &DatasetSplit) -> BTreeMap<PairKey, Sentiment> {
    let mut out = BTreeMap::new();
    for e in derive_aopsc_examples(split) {
        for (o, s) in e.opinions.iter().zip(&e.gold_sentiments) {
            out.insert((e.sentence.id().to_owned(), e.aspect.clone(), o.clone()), *s);
        }
    }
    out
}

/// Predicted sentiment for every gold pair, one encoder pass per aspect.
/// Opinions lost to truncation are predicted as neutral.
pub fn predict_pairs(model: &TaskModel, split: &DatasetSplit) -> Result<BTreeMap<PairKey, Sentiment>, HarnessError> {
    let mut out = BTreeMap::new();
    for e in derive_aopsc_examples(split) {
        let input = model.encode_aspect(&e.sentence, &e.aspect)?;
        let positions: Vec<Vec<usize>> = e.opinions.iter().map(|o| input.tokens_of(o)).collect();
        let visible: Vec<Vec<usize>> = positions.iter().filter(|p| !p.is_empty()).cloned().collect();
        let mut predicted = if visible.is_empty() {
            Vec::new().into_iter()
        } else {
            model.classify(&input, &visible)?.into_iter()
        };
        for (o, p) in e.opinions.iter().zip(&positions) {
            let s = if p.is_empty() {
                Sentiment::Neutral
            } else {
                predicted.next().expect("one prediction per visible opinion")
            };
            out.insert((e.sentence.id().to_owned(), e.aspect.clone(), o.clone()), s);
        }
    }
    Ok(out)
}

/// The task's own metric on `split`: aspect span F1, opinion F1 on gold
/// aspects, or pair accuracy on gold pairs.
pub fn task_report(model: &TaskModel, split: &DatasetSplit) -> Result<MetricReport, HarnessError> {
    Ok(match model.task() {
        ModelTask::Ate => score_ate(&crate::corpus::gold_aspects(split), &predict_aspects(model, split)?)?,
        ModelTask::Towe => score_towe(&gold_opinions(split), &predict_opinions(model, split)?)?,
        ModelTask::Aopsc => score_aopsc(&gold_pairs(split), &predict_pairs(model, split)?)?,
    })
}

fn headline(report: &MetricReport) -> f64 {
    report.accuracy.unwrap_or(report.f1)
}

/// Trains in memory. Stops after `patience` epochs without dev improvement,
/// at `max_epochs`, or once the dev metric reaches its ceiling of 1.
pub fn fit(config: &TrainConfig, train: &DatasetSplit, dev: &DatasetSplit) -> Result<Fitted, HarnessError> {
    config.validate()?;
    let model = init_model(config, train)?;
    let mut opt = AdamW::new(
        model.trainable(),
        ParamsAdamW {
            lr: config.learning_rate,
            weight_decay: 0.0,
            ..Default::default()
        },
    )
    .map_err(ModelError::from)?;
    let mut dropout = DropoutRng::new(stream(config.seed, 1));
    let mut shuffle = ChaCha8Rng::seed_from_u64(stream(config.seed, 2));

    enum Instances {
        Tagging(Vec<TaggingInstance>),
        Sentiment(Vec<SentimentInstance>),
    }
    let instances = match config.task {
        ModelTask::Aopsc => {
            let (list, skipped) = sentiment_instances(&model, train)?;
            if skipped > 0 {
                info!("skipped {skipped} truncated opinions");
            }
            Instances::Sentiment(list)
        }
        _ => {
            let (list, dropped) = tagging_instances(&model, train)?;
            if dropped > 0 {
                info!("dropped {dropped} overlapping spans");
            }
            Instances::Tagging(list)
        }
    };
    let count = match &instances {
        Instances::Tagging(v) => v.len(),
        Instances::Sentiment(v) => v.len(),
    };
    if count == 0 {
        return Err(HarnessError::Config(format!("training split has no {} instances", config.task)));
    }

    let mut order: Vec<usize> = (0..count).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, _)> = None;
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let mut mode = Mode::Training(&mut dropout);
            let loss = match &instances {
                Instances::Tagging(v) => {
                    let batch: Vec<&TaggingInstance> = chunk.iter().map(|&i| &v[i]).collect();
                    model.tagging_loss(&batch, &mut mode)?
                }
                Instances::Sentiment(v) => {
                    let batch: Vec<&SentimentInstance> = chunk.iter().map(|&i| &v[i]).collect();
                    model.sentiment_loss(&batch, &mut mode)?
                }
            };
            let value = loss.to_dtype(candle_core::DType::F64).and_then(|l| l.to_scalar::<f64>()).map_err(ModelError::from)?;
            if !value.is_finite() {
                return Err(HarnessError::NonFinite { epoch, step, value });
            }
            total += value * chunk.len() as f64;
            opt.backward_step(&loss).map_err(ModelError::from)?;
        }
        let dev_metric = headline(&task_report(&model, dev)?);
        let improved = best.as_ref().is_none_or(|(b, _, _)| dev_metric > *b);
        if improved {
            best = Some((dev_metric, epoch, model.params().snapshot()?));
            stale = 0;
        } else {
            stale += 1;
        }
        let best_dev = best.as_ref().map_or(dev_metric, |b| b.0);
        let record = EpochRecord {
            epoch,
            train_loss: total / count as f64,
            dev_metric,
            best_dev,
            improved,
        };
        info!(
            "{} epoch {epoch}: loss {:.6} dev {:.4} best {:.4}",
            config.task, record.train_loss, dev_metric, best_dev
        );
        log.push(record);
        if stale >= config.patience || best_dev >= 1.0 {
            break;
        }
    }
    let (best_dev, best_epoch, snapshot) = best.expect("at least one epoch ran");
    model.params().restore(&snapshot)?;
    Ok(Fitted {
        model,
        log,
        best_epoch,
        best_dev,
    })
}

/// Loads the splits named by `config`, trains, and writes
/// `<task>.safetensors` and `<task>-log.jsonl` into `out_dir`.
pub fn train(config: &TrainConfig, out_dir: &Path) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    let train_split = load_split(&config.data.train, SplitName::Train)?;
    let dev_split = load_split(&config.data.dev, SplitName::Dev)?;
    let fitted = fit(config, &train_split, &dev_split)?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let checkpoint = out_dir.join(format!("{}.safetensors", config.task));
    fitted.model.save(&checkpoint)?;
    let log_path = out_dir.join(format!("{}-log.jsonl", config.task));
    write_log(&fitted.log, &log_path)?;
    Ok(TrainOutcome {
        checkpoint,
        log: log_path,
        best_epoch: fitted.best_epoch,
        best_dev: fitted.best_dev,
        epochs_run: fitted.log.len(),
    })
}

pub fn write_log(log: &[EpochRecord], path: &Path) -> Result<(), HarnessError> {
    let io = |e| HarnessError::io(path, e);
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for record in log {
        serde_json::to_writer(&mut file, record).map_err(|e| HarnessError::io(path, e.into()))?;
        file.write_all(b"\n").map_err(io)?;
    }
    file.flush().map_err(io)
}
