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

//! Tagging and sentiment heads with their losses.
//!
//! The single-instance functions compute one example at a time and
//! are what the gradient checks exercise. [`tagging_batch_loss`] and
//! [`sentiment_batch_loss`] compute the same quantities over padded batches
//! in one pass for training.

use candle_core::{DType, Tensor};

use super::ops::{linear, log_softmax, softmax};
use super::params::ParamStore;
use super::ModelError;
use crate::encoding::Tag;
use crate::types::Sentiment;

/// Linear map to three classes followed by softmax.
#[derive(Clone)]
pub struct ClassifierHead {
    weight: Tensor,
    bias: Tensor,
}

/// Scores B, I and O at each position.
pub type TaggingHead = ClassifierHead;
/// Scores positive, neutral and negative for an opinion representation.
pub type SentimentHead = ClassifierHead;

impl ClassifierHead {
    pub const CLASSES: usize = 3;

    pub fn new(params: &mut ParamStore, name: &str, width: usize) -> Result<Self, ModelError> {
        Ok(Self {
            weight: params.normal(&format!("{name}.weight"), &[Self::CLASSES, width], 0.02)?,
            bias: params.constant(&format!("{name}.bias"), &[Self::CLASSES], 0.0)?,
        })
    }

    /// Head over explicit tensors; `weight` is `(3, width)`.
    pub fn from_tensors(weight: Tensor, bias: Tensor) -> Result<Self, ModelError> {
        let (classes, _) = weight.dims2()?;
        if classes != Self::CLASSES || bias.dims() != [Self::CLASSES] {
            return Err(ModelError::WidthMismatch {
                expected: Self::CLASSES,
                found: classes,
            });
        }
        Ok(Self { weight, bias })
    }

    pub fn width(&self) -> usize {
        self.weight.dims()[1]
    }

    pub fn weight(&self) -> &Tensor {
        &self.weight
    }

    pub fn bias(&self) -> &Tensor {
        &self.bias
    }

    /// Logits for rows of width `width()`; any leading shape is kept.
    pub fn logits(&self, h: &Tensor) -> Result<Tensor, ModelError> {
        let found = *h.dims().last().unwrap_or(&0);
        if found != self.width() {
            return Err(ModelError::WidthMismatch {
                expected: self.width(),
                found,
            });
        }
        Ok(linear(h, &self.weight, &self.bias)?)
    }
}

/// Per-position distributions over B, I, O for hidden states `(T, width)`.
pub fn tag_distributions(h: &Tensor, head: &TaggingHead) -> Result<Tensor, ModelError> {
    Ok(softmax(&head.logits(h)?)?)
}

fn one_hot(indices: &[Option<usize>], dtype: DType, device: &candle_core::Device) -> Result<Tensor, ModelError> {
    let mut data = vec![0.0f64; indices.len() * ClassifierHead::CLASSES];
    for (row, index) in indices.iter().enumerate() {
        if let Some(i) = index {
            data[row * ClassifierHead::CLASSES + i] = 1.0;
        }
    }
    Ok(Tensor::from_vec(data, (indices.len(), ClassifierHead::CLASSES), device)?.to_dtype(dtype)?)
}

/// `-sum log p` over the entries picked by `mask`. Unmasked entries are
/// replaced by 1 before the log so that zeros elsewhere stay finite.
fn gold_log_likelihood(distributions: &Tensor, mask: &Tensor) -> Result<Tensor, ModelError> {
    let picked = distributions.mul(mask)?.sum(1)?;
    let present = mask.sum(1)?;
    let safe = (picked + present.affine(-1.0, 1.0)?)?;
    Ok(safe.log()?.sum_all()?.neg()?)
}

/// `-sum log p(gold)` over the positions whose label is present.
pub fn tagging_loss(distributions: &Tensor, gold: &[Option<Tag>]) -> Result<Tensor, ModelError> {
    let (rows, _) = distributions.dims2()?;
    if rows != gold.len() {
        return Err(ModelError::Misaligned {
            what: "tag labels",
            expected: rows,
            found: gold.len(),
        });
    }
    let indices: Vec<Option<usize>> = gold.iter().map(|t| t.map(Tag::index)).collect();
    let mask = one_hot(&indices, distributions.dtype(), distributions.device())?;
    gold_log_likelihood(distributions, &mask)
}

/// Mean of the rows of `h` at `positions`.
pub fn opinion_representation(h: &Tensor, positions: &[usize]) -> Result<Tensor, ModelError> {
    if positions.is_empty() {
        return Err(ModelError::EmptyPositions);
    }
    let (length, _) = h.dims2()?;
    if let Some(&bad) = positions.iter().find(|&&p| p >= length) {
        return Err(ModelError::PositionOutsideSequence {
            position: bad,
            length,
        });
    }
    let index: Vec<u32> = positions.iter().map(|&p| p as u32).collect();
    let index = Tensor::new(index.as_slice(), h.device())?;
    Ok(h.index_select(&index, 0)?.mean(0)?)
}

/// Distribution over positive, neutral, negative for an opinion vector (or
/// a stack of them).
pub fn sentiment_distribution(representation: &Tensor, head: &SentimentHead) -> Result<Tensor, ModelError> {
    Ok(softmax(&head.logits(representation)?)?)
}

/// Sum over one aspect's opinions of the cross-entropy at the gold sentiment.
pub fn aopsc_loss(distributions: &Tensor, gold: &[Sentiment]) -> Result<Tensor, ModelError> {
    let (rows, _) = distributions.dims2()?;
    if rows != gold.len() || rows == 0 {
        return Err(ModelError::Misaligned {
            what: "opinion sentiments",
            expected: rows,
            found: gold.len(),
        });
    }
    let indices: Vec<Option<usize>> = gold.iter().map(|s| Some(s.index())).collect();
    let mask = one_hot(&indices, distributions.dtype(), distributions.device())?;
    gold_log_likelihood(distributions, &mask)
}

/// Tagging loss over a padded batch `(B, T, width)`: per-example sums,
/// averaged over the batch.
pub fn tagging_batch_loss(
    hidden: &Tensor,
    head: &TaggingHead,
    gold: &[&[Option<Tag>]],
) -> Result<Tensor, ModelError> {
    let (b, t, _) = hidden.dims3()?;
    if gold.len() != b {
        return Err(ModelError::Misaligned {
            what: "batch labels",
            expected: b,
            found: gold.len(),
        });
    }
    let mut indices = Vec::with_capacity(b * t);
    for labels in gold {
        if labels.len() > t {
            return Err(ModelError::Misaligned {
                what: "tag labels",
                expected: t,
                found: labels.len(),
            });
        }
        indices.extend(labels.iter().map(|l| l.map(Tag::index)));
        indices.extend(std::iter::repeat_n(None, t - labels.len()));
    }
    let mask = one_hot(&indices, hidden.dtype(), hidden.device())?.reshape((b, t, 3))?;
    let logp = log_softmax(&head.logits(hidden)?)?;
    Ok((logp.mul(&mask)?.sum_all()?.neg()? / b as f64)?)
}

/// Opinion-averaged sentiment loss over a padded batch `(B, T, width)`.
/// `opinions[i]` lists example `i`'s opinions as token positions with gold
/// sentiment. Per-aspect sums are averaged over the batch.
pub fn sentiment_batch_loss(
    hidden: &Tensor,
    head: &SentimentHead,
    opinions: &[Vec<(Vec<usize>, Sentiment)>],
) -> Result<Tensor, ModelError> {
    let (b, _, _) = hidden.dims3()?;
    if opinions.len() != b {
        return Err(ModelError::Misaligned {
            what: "batch opinions",
            expected: b,
            found: opinions.len(),
        });
    }
    let (reps, gold) = pooled_opinions(hidden, opinions)?;
    let mask = one_hot(
        &gold.iter().map(|s| Some(s.index())).collect::<Vec<_>>(),
        hidden.dtype(),
        hidden.device(),
    )?;
    let logp = log_softmax(&head.logits(&reps)?)?;
    Ok((logp.mul(&mask)?.sum_all()?.neg()? / b as f64)?)
}

/// Averages each opinion's token rows with one matmul; returns `(K, width)`
/// representations in batch order with their labels.
pub fn pooled_opinions<L: Copy>(
    hidden: &Tensor,
    opinions: &[Vec<(Vec<usize>, L)>],
) -> Result<(Tensor, Vec<L>), ModelError> {
    let (b, t, d) = hidden.dims3()?;
    let k: usize = opinions.iter().map(Vec::len).sum();
    if k == 0 {
        return Err(ModelError::EmptyPositions);
    }
    let mut weights = vec![0.0f64; k * b * t];
    let mut labels = Vec::with_capacity(k);
    let mut row = 0;
    for (example, list) in opinions.iter().enumerate() {
        for (positions, label) in list {
            if positions.is_empty() {
                return Err(ModelError::EmptyPositions);
            }
            let share = 1.0 / positions.len() as f64;
            for &p in positions {
                if p >= t {
                    return Err(ModelError::PositionOutsideSequence { position: p, length: t });
                }
                weights[row * b * t + example * t + p] += share;
            }
            labels.push(*label);
            row += 1;
        }
    }
    let averaging = Tensor::from_vec(weights, (k, b * t), hidden.device())?.to_dtype(hidden.dtype())?;
    let reps = averaging.matmul(&hidden.reshape((b * t, d))?)?;
    Ok((reps, labels))
}
