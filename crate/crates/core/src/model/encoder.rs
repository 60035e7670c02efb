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

//! Sentence encoder: a BERT-style transformer followed by a bidirectional
//! LSTM, with dropout after each of the two.
//!
//! The same architecture serves the tiny randomly initialized configuration
//! used for tests and the pretrained configuration loaded from a BERT
//! checkpoint directory. Parameter names follow the usual BERT layout so
//! pretrained weights map onto them directly.

use std::path::Path;

use candle_core::{DType, Device, Tensor};
use serde::{Deserialize, Serialize};

use super::ops::{gelu, layer_norm, linear, sigmoid, softmax, Mode};
use super::params::ParamStore;
use super::ModelError;
use crate::encoding::EncodedInput;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn dtype(self) -> DType {
        match self {
            Precision::F32 => DType::F32,
            Precision::F64 => DType::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub hidden_size: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub intermediate_size: usize,
    pub max_positions: usize,
    pub type_vocab_size: usize,
    pub layer_norm_eps: f64,
    /// Dropout inside the transformer (attention output and feed-forward).
    pub internal_dropout: f64,
    /// Per-direction LSTM width.
    pub lstm_hidden: usize,
    /// Dropout applied after the transformer and after the LSTM.
    pub dropout: f64,
    pub precision: Precision,
}

impl EncoderConfig {
    /// Small random-init configuration for desk-scale training.
    pub fn tiny(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            hidden_size: 32,
            num_layers: 1,
            num_heads: 2,
            intermediate_size: 64,
            max_positions: 128,
            type_vocab_size: 2,
            layer_norm_eps: 1e-12,
            internal_dropout: 0.0,
            lstm_hidden: 16,
            dropout: 0.5,
            precision: Precision::F64,
        }
    }

    /// Reads a BERT `config.json`.
    pub fn from_bert_config(path: &Path) -> Result<Self, ModelError> {
        #[derive(Deserialize)]
        struct Bert {
            vocab_size: usize,
            hidden_size: usize,
            num_hidden_layers: usize,
            num_attention_heads: usize,
            intermediate_size: usize,
            max_position_embeddings: usize,
            #[serde(default = "two")]
            type_vocab_size: usize,
            #[serde(default = "eps")]
            layer_norm_eps: f64,
            #[serde(default = "internal")]
            hidden_dropout_prob: f64,
        }
        fn two() -> usize {
            2
        }
        fn eps() -> f64 {
            1e-12
        }
        fn internal() -> f64 {
            0.1
        }
        let text = std::fs::read_to_string(path)?;
        let bert: Bert = serde_json::from_str(&text)
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
        Ok(Self {
            vocab_size: bert.vocab_size,
            hidden_size: bert.hidden_size,
            num_layers: bert.num_hidden_layers,
            num_heads: bert.num_attention_heads,
            intermediate_size: bert.intermediate_size,
            max_positions: bert.max_position_embeddings,
            type_vocab_size: bert.type_vocab_size,
            layer_norm_eps: bert.layer_norm_eps,
            internal_dropout: bert.hidden_dropout_prob,
            lstm_hidden: bert.hidden_size / 2,
            dropout: 0.5,
            precision: Precision::F32,
        })
    }

    pub fn output_size(&self) -> usize {
        2 * self.lstm_hidden
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if self.num_heads == 0 || !self.hidden_size.is_multiple_of(self.num_heads) {
            return bad(format!(
                "hidden size {} is not divisible into {} heads",
                self.hidden_size, self.num_heads
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) || !(0.0..1.0).contains(&self.internal_dropout) {
            return bad("dropout must lie in [0, 1)".into());
        }
        if self.vocab_size == 0 || self.lstm_hidden == 0 || self.max_positions < 3 {
            return bad("degenerate encoder dimensions".into());
        }
        Ok(())
    }
}

/// Padded batch of encoded inputs.
pub struct Batch {
    pub token_ids: Tensor,
    pub segment_ids: Tensor,
    pub position_ids: Tensor,
    pub lengths: Vec<usize>,
    pub max_len: usize,
    key_bias: Tensor,
    reverse_index: Tensor,
}

impl Batch {
    pub fn new(
        inputs: &[&EncodedInput],
        config: &EncoderConfig,
        pad_id: u32,
        device: &Device,
    ) -> Result<Self, ModelError> {
        if inputs.is_empty() {
            return Err(ModelError::EmptyBatch);
        }
        let max_len = inputs.iter().map(|i| i.len()).max().unwrap_or(0);
        let b = inputs.len();
        let mut ids = vec![pad_id; b * max_len];
        let mut segments = vec![0u32; b * max_len];
        let mut positions = vec![0u32; b * max_len];
        let mut bias = vec![-10_000.0f64; b * max_len];
        let mut reverse = Vec::with_capacity(b * max_len);
        for (row, input) in inputs.iter().enumerate() {
            let base = row * max_len;
            for (t, &id) in input.token_ids().iter().enumerate() {
                if id as usize >= config.vocab_size {
                    return Err(ModelError::OutOfVocabulary {
                        id,
                        vocab_size: config.vocab_size,
                    });
                }
                let pos = input.position_indices()[t];
                if pos as usize >= config.max_positions {
                    return Err(ModelError::PositionOutOfRange {
                        position: pos,
                        max_positions: config.max_positions,
                    });
                }
                let seg = input.segment_indices()[t];
                if seg as usize >= config.type_vocab_size {
                    return Err(ModelError::Config(format!("segment index {seg} out of range")));
                }
                ids[base + t] = id;
                segments[base + t] = seg;
                positions[base + t] = pos;
                bias[base + t] = 0.0;
            }
            let len = input.len();
            for t in 0..max_len {
                let source = if t < len { len - 1 - t } else { t };
                reverse.push((base + source) as u32);
            }
        }
        let dtype = config.precision.dtype();
        Ok(Self {
            token_ids: Tensor::from_vec(ids, (b, max_len), device)?,
            segment_ids: Tensor::from_vec(segments, (b, max_len), device)?,
            position_ids: Tensor::from_vec(positions, (b, max_len), device)?,
            lengths: inputs.iter().map(|i| i.len()).collect(),
            max_len,
            key_bias: Tensor::from_vec(bias, (b, 1, 1, max_len), device)?.to_dtype(dtype)?,
            reverse_index: Tensor::from_vec(reverse, b * max_len, device)?,
        })
    }

    pub fn size(&self) -> usize {
        self.lengths.len()
    }

    /// Reverses each row within its own length; padding stays in place.
    fn reverse_rows(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        let (b, t, d) = x.dims3()?;
        x.reshape((b * t, d))?
            .index_select(&self.reverse_index, 0)?
            .reshape((b, t, d))
    }
}

struct Dense {
    weight: Tensor,
    bias: Tensor,
}

impl Dense {
    fn new(params: &mut ParamStore, name: &str, out: usize, inp: usize) -> Result<Self, ModelError> {
        Ok(Self {
            weight: params.normal(&format!("{name}.weight"), &[out, inp], 0.02)?,
            bias: params.constant(&format!("{name}.bias"), &[out], 0.0)?,
        })
    }

    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        linear(x, &self.weight, &self.bias)
    }
}

struct Norm {
    weight: Tensor,
    bias: Tensor,
    eps: f64,
}

impl Norm {
    fn new(params: &mut ParamStore, name: &str, size: usize, eps: f64) -> Result<Self, ModelError> {
        Ok(Self {
            weight: params.constant(&format!("{name}.weight"), &[size], 1.0)?,
            bias: params.constant(&format!("{name}.bias"), &[size], 0.0)?,
            eps,
        })
    }

    fn forward(&self, x: &Tensor) -> candle_core::Result<Tensor> {
        layer_norm(x, &self.weight, &self.bias, self.eps)
    }
}

struct TransformerLayer {
    query: Dense,
    key: Dense,
    value: Dense,
    attention_out: Dense,
    attention_norm: Norm,
    intermediate: Dense,
    output: Dense,
    output_norm: Norm,
    num_heads: usize,
}

impl TransformerLayer {
    fn new(params: &mut ParamStore, index: usize, c: &EncoderConfig) -> Result<Self, ModelError> {
        let p = format!("encoder.layer.{index}");
        let h = c.hidden_size;
        Ok(Self {
            query: Dense::new(params, &format!("{p}.attention.self.query"), h, h)?,
            key: Dense::new(params, &format!("{p}.attention.self.key"), h, h)?,
            value: Dense::new(params, &format!("{p}.attention.self.value"), h, h)?,
            attention_out: Dense::new(params, &format!("{p}.attention.output.dense"), h, h)?,
            attention_norm: Norm::new(params, &format!("{p}.attention.output.LayerNorm"), h, c.layer_norm_eps)?,
            intermediate: Dense::new(params, &format!("{p}.intermediate.dense"), c.intermediate_size, h)?,
            output: Dense::new(params, &format!("{p}.output.dense"), h, c.intermediate_size)?,
            output_norm: Norm::new(params, &format!("{p}.output.LayerNorm"), h, c.layer_norm_eps)?,
            num_heads: c.num_heads,
        })
    }

    fn forward(
        &self,
        x: &Tensor,
        key_bias: &Tensor,
        mode: &mut Mode<'_>,
        p: f64,
    ) -> Result<Tensor, ModelError> {
        let (b, t, h) = x.dims3()?;
        let dh = h / self.num_heads;
        let heads = |y: Tensor| -> candle_core::Result<Tensor> {
            y.reshape((b, t, self.num_heads, dh))?.transpose(1, 2)?.contiguous()
        };
        let q = heads(self.query.forward(x)?)?;
        let k = heads(self.key.forward(x)?)?;
        let v = heads(self.value.forward(x)?)?;
        let scores = (q.matmul(&k.transpose(2, 3)?.contiguous()?)? / (dh as f64).sqrt())?
            .broadcast_add(key_bias)?;
        let context = softmax(&scores)?
            .matmul(&v)?
            .transpose(1, 2)?
            .contiguous()?
            .reshape((b, t, h))?;
        let attended = mode.dropout(&self.attention_out.forward(&context)?, p)?;
        let x = self.attention_norm.forward(&(x + attended)?)?;
        let ff = self.output.forward(&gelu(&self.intermediate.forward(&x)?)?)?;
        let ff = mode.dropout(&ff, p)?;
        Ok(self.output_norm.forward(&(x + ff)?)?)
    }
}

struct Lstm {
    w_ih: Tensor,
    w_hh: Tensor,
    bias: Tensor,
    hidden: usize,
}

impl Lstm {
    fn new(params: &mut ParamStore, name: &str, input: usize, hidden: usize) -> Result<Self, ModelError> {
        let bound = 1.0 / (hidden as f64).sqrt();
        Ok(Self {
            w_ih: params.uniform(&format!("{name}.weight_ih"), &[4 * hidden, input], bound)?,
            w_hh: params.uniform(&format!("{name}.weight_hh"), &[4 * hidden, hidden], bound)?,
            bias: params.uniform(&format!("{name}.bias"), &[4 * hidden], bound)?,
            hidden,
        })
    }

    /// Runs left to right over `(batch, time, input)`. Gate order is
    /// input, forget, output, candidate.
    fn forward(&self, xs: &Tensor) -> candle_core::Result<Tensor> {
        let (b, t, _) = xs.dims3()?;
        let hd = self.hidden;
        let projected = linear(xs, &self.w_ih, &self.bias)?;
        let w_hh_t = self.w_hh.t()?;
        let mut h = Tensor::zeros((b, hd), xs.dtype(), xs.device())?;
        let mut c = h.clone();
        let mut outputs = Vec::with_capacity(t);
        for step in 0..t {
            let gates = projected.narrow(1, step, 1)?.squeeze(1)?.add(&h.matmul(&w_hh_t)?)?;
            let ifo = sigmoid(&gates.narrow(1, 0, 3 * hd)?)?;
            let candidate = gates.narrow(1, 3 * hd, hd)?.tanh()?;
            let input_gate = ifo.narrow(1, 0, hd)?;
            let forget_gate = ifo.narrow(1, hd, hd)?;
            let output_gate = ifo.narrow(1, 2 * hd, hd)?;
            c = forget_gate.mul(&c)?.add(&input_gate.mul(&candidate)?)?;
            h = output_gate.mul(&c.tanh()?)?;
            outputs.push(h.clone());
        }
        Tensor::stack(&outputs, 1)
    }
}

/// Transformer encoder followed by a BiLSTM.
pub struct EncoderStack {
    config: EncoderConfig,
    word_embeddings: Tensor,
    position_embeddings: Tensor,
    token_type_embeddings: Tensor,
    embedding_norm: Norm,
    layers: Vec<TransformerLayer>,
    lstm_forward: Lstm,
    lstm_backward: Lstm,
}

impl EncoderStack {
    pub fn new(params: &mut ParamStore, config: &EncoderConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let h = config.hidden_size;
        let word_embeddings =
            params.normal("embeddings.word_embeddings.weight", &[config.vocab_size, h], 0.02)?;
        let position_embeddings = params.normal(
            "embeddings.position_embeddings.weight",
            &[config.max_positions, h],
            0.02,
        )?;
        let token_type_embeddings = params.normal(
            "embeddings.token_type_embeddings.weight",
            &[config.type_vocab_size, h],
            0.02,
        )?;
        let embedding_norm = Norm::new(params, "embeddings.LayerNorm", h, config.layer_norm_eps)?;
        let layers = (0..config.num_layers)
            .map(|i| TransformerLayer::new(params, i, config))
            .collect::<Result<Vec<_>, _>>()?;
        let lstm_forward = Lstm::new(params, "lstm.forward", h, config.lstm_hidden)?;
        let lstm_backward = Lstm::new(params, "lstm.backward", h, config.lstm_hidden)?;
        Ok(Self {
            config: config.clone(),
            word_embeddings,
            position_embeddings,
            token_type_embeddings,
            embedding_norm,
            layers,
            lstm_forward,
            lstm_backward,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    /// Hidden states of shape `(batch, time, output_size)`. Rows past each
    /// input's length are padding and must be ignored by callers.
    pub fn forward(&self, batch: &Batch, mode: &mut Mode<'_>) -> Result<Tensor, ModelError> {
        let (b, t) = (batch.size(), batch.max_len);
        let h = self.config.hidden_size;
        let lookup = |table: &Tensor, ids: &Tensor| -> candle_core::Result<Tensor> {
            table.index_select(&ids.flatten_all()?, 0)?.reshape((b, t, h))
        };
        let embedded = (lookup(&self.word_embeddings, &batch.token_ids)?
            + lookup(&self.position_embeddings, &batch.position_ids)?)?
            .add(&lookup(&self.token_type_embeddings, &batch.segment_ids)?)?;
        let mut x = self.embedding_norm.forward(&embedded)?;
        x = mode.dropout(&x, self.config.internal_dropout)?;
        for layer in &self.layers {
            x = layer.forward(&x, &batch.key_bias, mode, self.config.internal_dropout)?;
        }
        let x = mode.dropout(&x, self.config.dropout)?;
        let forward = self.lstm_forward.forward(&x)?;
        let backward = batch.reverse_rows(&self.lstm_backward.forward(&batch.reverse_rows(&x)?)?)?;
        let out = Tensor::cat(&[forward, backward], 2)?;
        mode.dropout(&out, self.config.dropout)
    }

    /// Convenience wrapper for a single input; returns `(time, output_size)`.
    pub fn encode(
        &self,
        input: &EncodedInput,
        pad_id: u32,
        mode: &mut Mode<'_>,
    ) -> Result<Tensor, ModelError> {
        let batch = Batch::new(&[input], &self.config, pad_id, self.word_embeddings.device())?;
        Ok(self.forward(&batch, mode)?.squeeze(0)?)
    }
}

/// Copies BERT weights from a safetensors file into `params`. Accepts the
/// optional `bert.` prefix and the legacy `gamma`/`beta` LayerNorm names.
/// Returns how many parameters were loaded.
pub fn load_pretrained(params: &ParamStore, weights: &Path) -> Result<usize, ModelError> {
    let tensors = candle_core::safetensors::load(weights, params.device())?;
    let mut loaded = 0;
    for (name, value) in tensors {
        let name = name.strip_prefix("bert.").unwrap_or(&name);
        let name = name.replace("LayerNorm.gamma", "LayerNorm.weight").replace("LayerNorm.beta", "LayerNorm.bias");
        if (name.starts_with("embeddings.") || name.starts_with("encoder.")) && params.get(&name).is_some() {
            params.assign(&name, &value)?;
            loaded += 1;
        }
    }
    if loaded == 0 {
        return Err(ModelError::Checkpoint(format!(
            "{} holds no BERT encoder weights",
            weights.display()
        )));
    }
    Ok(loaded)
}
