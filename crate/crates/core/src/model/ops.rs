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

//! Differentiable building blocks written with primitive tensor ops, so
//! every one of them has a backward pass.

use candle_core::{DType, Tensor, D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ModelError;

pub fn softmax(x: &Tensor) -> candle_core::Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let e = x.broadcast_sub(&max)?.exp()?;
    e.broadcast_div(&e.sum_keepdim(D::Minus1)?)
}

pub fn log_softmax(x: &Tensor) -> candle_core::Result<Tensor> {
    let max = x.max_keepdim(D::Minus1)?.detach();
    let shifted = x.broadcast_sub(&max)?;
    let lse = shifted.exp()?.sum_keepdim(D::Minus1)?.log()?;
    shifted.broadcast_sub(&lse)
}

pub fn sigmoid(x: &Tensor) -> candle_core::Result<Tensor> {
    (x.neg()?.exp()? + 1.0)?.recip()
}

/// Exact (erf-based) GELU.
pub fn gelu(x: &Tensor) -> candle_core::Result<Tensor> {
    let cdf = ((x / std::f64::consts::SQRT_2)?.erf()? + 1.0)?;
    (x * 0.5)?.mul(&cdf)
}

pub fn layer_norm(x: &Tensor, weight: &Tensor, bias: &Tensor, eps: f64) -> candle_core::Result<Tensor> {
    let mean = x.mean_keepdim(D::Minus1)?;
    let centered = x.broadcast_sub(&mean)?;
    let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
    let normed = centered.broadcast_div(&(var + eps)?.sqrt()?)?;
    normed.broadcast_mul(weight)?.broadcast_add(bias)
}

/// `x @ weight^T + bias` over the last dimension of `x`.
pub fn linear(x: &Tensor, weight: &Tensor, bias: &Tensor) -> candle_core::Result<Tensor> {
    let dims = x.dims().to_vec();
    let (last, lead) = dims.split_last().expect("linear input has at least one dimension");
    let rows: usize = lead.iter().product();
    let flat = x.reshape((rows, *last))?;
    let out = flat.matmul(&weight.t()?)?.broadcast_add(bias)?;
    let mut shape = lead.to_vec();
    shape.push(weight.dim(0)?);
    out.reshape(shape)
}

/// Seeded source of dropout masks.
pub struct DropoutRng(ChaCha8Rng);

impl DropoutRng {
    pub fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Inverted dropout: kept entries are scaled by `1 / (1 - p)`.
    pub fn apply(&mut self, x: &Tensor, p: f64) -> Result<Tensor, ModelError> {
        if p <= 0.0 {
            return Ok(x.clone());
        }
        let keep = 1.0 - p;
        let mask: Vec<f64> = (0..x.elem_count())
            .map(|_| if self.0.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            .collect();
        let mask = Tensor::from_vec(mask, x.shape(), x.device())?.to_dtype(x.dtype())?;
        Ok(x.mul(&mask)?)
    }
}

/// Whether a forward pass is for training (dropout on) or inference.
pub enum Mode<'a> {
    Inference,
    Training(&'a mut DropoutRng),
}

impl Mode<'_> {
    pub fn dropout(&mut self, x: &Tensor, p: f64) -> Result<Tensor, ModelError> {
        match self {
            Mode::Inference => Ok(x.clone()),
            Mode::Training(rng) => rng.apply(x, p),
        }
    }

    pub fn is_training(&self) -> bool {
        matches!(self, Mode::Training(_))
    }
}

/// Row-wise first argmax; ties go to the lowest index.
pub fn argmax_rows(probs: &Tensor) -> Result<Vec<usize>, ModelError> {
    let rows: Vec<Vec<f64>> = probs.to_dtype(DType::F64)?.to_vec2()?;
    Ok(rows.iter().map(|r| first_argmax(r)).collect())
}

pub fn first_argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use candle_core::Device;

    #[test]
    fn softmax_and_log_softmax_agree() {
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0], [1000.0, 1000.0, 1000.0]], &Device::Cpu).unwrap();
        let p: Vec<Vec<f64>> = softmax(&x).unwrap().to_vec2().unwrap();
        let lp: Vec<Vec<f64>> = log_softmax(&x).unwrap().to_vec2().unwrap();
        for (pr, lr) in p.iter().zip(&lp) {
            assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for (a, b) in pr.iter().zip(lr) {
                assert!((a.ln() - b).abs() < 1e-12);
            }
        }
        assert!((p[1][0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn gelu_matches_reference_values() {
        let x = Tensor::new(&[-1.0f64, 0.0, 0.5, 2.0], &Device::Cpu).unwrap();
        let y: Vec<f64> = gelu(&x).unwrap().to_vec1().unwrap();
        let want = [-0.15865525393145707, 0.0, 0.34573123063700656, 1.9544997361036416];
        for (a, b) in y.iter().zip(want) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn first_argmax_breaks_ties_low() {
        assert_eq!(first_argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(first_argmax(&[0.5, 0.5, 0.0]), 0);
    }

    #[test]
    fn dropout_is_seeded() {
        let x = Tensor::ones((4, 8), DType::F64, &Device::Cpu).unwrap();
        let a: Vec<Vec<f64>> = DropoutRng::new(3).apply(&x, 0.5).unwrap().to_vec2().unwrap();
        let b: Vec<Vec<f64>> = DropoutRng::new(3).apply(&x, 0.5).unwrap().to_vec2().unwrap();
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|&v| v == 0.0 || v == 2.0));
    }
}
