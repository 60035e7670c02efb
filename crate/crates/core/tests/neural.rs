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

mod common;

use asote_core::encoding::{Tag, Variant};
use asote_core::model::{
    aopsc_loss, opinion_representation, sentiment_distribution, tag_distributions, tagging_loss,
    EncoderChoice, Mode, ModelError, ModelTask, TaggingHead, TaskModel,
};
use asote_core::Sentiment;
use candle_core::{DType, Device, Tensor};
use common::{sentence, span, tiny, LEXICON};
use proptest::prelude::*;

fn rows(t: &Tensor) -> Vec<Vec<f64>> {
    t.to_vec2().unwrap()
}

/// First four values of the first and last hidden rows for the PBF input of
/// "the rice is too dry" with aspect "rice", tiny config, seed 42.
const RECORDED: [[f64; 4]; 2] = [
    [0.01865045650607168, 0.08264325538392736, -0.01719719885268693, 0.06486075688909788],
    [0.0890683530004867, 0.09441810665278559, -0.01482312820292144, 0.1887691302577751],
];

#[test]
fn seeded_hidden_states_match_recording() {
    let model = tiny(ModelTask::Towe, Some(Variant::Pbf), 42);
    let s = sentence("r", "the rice is too dry");
    let input = model.encode_aspect(&s, &span(1, 1)).unwrap();
    let h = model.encoder().encode(&input, model.tokenizer().pad_id(), &mut Mode::Inference).unwrap();
    let h = rows(&h);
    let got = [&h[0][..4], &h[h.len() - 1][..4]];
    for (row, want) in got.iter().zip(RECORDED) {
        for (a, b) in row.iter().zip(want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }
}

#[test]
fn hidden_length_tracks_tokens() {
    let model = tiny(ModelTask::Towe, Some(Variant::M2), 1);
    for n in 1..=100usize {
        let words: Vec<String> = (0..n % 17 + 1).map(|i| LEXICON[(i * 7 + n) % LEXICON.len()].to_owned()).collect();
        let s = asote_core::Sentence::new(format!("s{n}"), words).unwrap();
        let a = n % s.len();
        let input = model.encode_aspect(&s, &span(a, a)).unwrap();
        let h = model.encoder().encode(&input, 0, &mut Mode::Inference).unwrap();
        assert_eq!(h.dims(), &[input.len(), model.config().output_size()]);
    }
}

#[test]
fn out_of_vocabulary_ids_are_rejected() {
    let small = tiny(ModelTask::Ate, None, 0);
    let extra: Vec<String> = (0..300).map(|i| format!("w{i:03}q")).collect();
    let mut big_vocab: Vec<&str> = LEXICON.to_vec();
    big_vocab.extend(extra.iter().map(String::as_str));
    big_vocab.extend(["zzz", "zzzz"]);
    let tok = asote_core::encoding::WordPieceTokenizer::build(big_vocab);
    let input = asote_core::encoding::build_ate_input(&sentence("z", "zzz zzzz"), &tok, 64).unwrap();
    assert!(input.token_ids().iter().any(|&id| id as usize >= small.config().vocab_size));
    assert!(matches!(
        small.encoder().encode(&input, 0, &mut Mode::Inference),
        Err(ModelError::OutOfVocabulary { .. })
    ));
}

#[test]
fn tiny_and_pretrained_share_an_interface() {
    // A pretrained directory in BERT layout, written from a tiny model.
    let dir = tempfile::tempdir().unwrap();
    let source = tiny(ModelTask::Ate, None, 9);
    let tok = source.tokenizer();
    std::fs::write(dir.path().join("vocab.txt"), tok.pieces().join("\n") + "\n").unwrap();
    let c = source.config();
    let config = serde_json::json!({
        "vocab_size": c.vocab_size,
        "hidden_size": c.hidden_size,
        "num_hidden_layers": c.num_layers,
        "num_attention_heads": c.num_heads,
        "intermediate_size": c.intermediate_size,
        "max_position_embeddings": c.max_positions,
        "type_vocab_size": 2,
        "layer_norm_eps": 1e-12,
        "hidden_dropout_prob": 0.1
    });
    std::fs::write(dir.path().join("config.json"), config.to_string()).unwrap();
    let tensors: Vec<(String, Tensor)> = source
        .params()
        .iter()
        .filter(|(n, _)| n.starts_with("embeddings.") || n.starts_with("encoder."))
        .map(|(n, v)| {
            let name = format!("bert.{}", n.replace("LayerNorm.weight", "LayerNorm.gamma").replace("LayerNorm.bias", "LayerNorm.beta"));
            (name, v.as_tensor().to_dtype(DType::F32).unwrap())
        })
        .collect();
    let map: std::collections::HashMap<String, Tensor> = tensors.into_iter().collect();
    candle_core::safetensors::save(&map, dir.path().join("model.safetensors")).unwrap();

    let pretrained = TaskModel::pretrained(ModelTask::Ate, None, dir.path(), 0.5, 3).unwrap();
    let s = sentence("p", "the tuna was fresh");
    let a = source.encode_sentence(&s).unwrap();
    let b = pretrained.encode_sentence(&s).unwrap();
    assert_eq!(a.token_ids(), b.token_ids());
    let ha = rows(&source.encoder().encode(&a, 0, &mut Mode::Inference).unwrap());
    let hb = pretrained.encoder().encode(&b, 0, &mut Mode::Inference).unwrap();
    assert_eq!(hb.dims(), &[b.len(), pretrained.config().output_size()]);
    // The transformer weights carry over; the LSTM is freshly initialized,
    // so only the shapes match.
    assert_eq!(ha.len(), hb.dims()[0]);
    assert_eq!(pretrained.tag(&b).unwrap().len(), b.len());
    let _ = EncoderChoice::Pretrained(dir.path().to_owned());
}

fn zero_head(width: usize) -> TaggingHead {
    TaggingHead::from_tensors(
        Tensor::zeros((3, width), DType::F64, &Device::Cpu).unwrap(),
        Tensor::zeros(3, DType::F64, &Device::Cpu).unwrap(),
    )
    .unwrap()
}

fn random_head(seed: u64, width: usize) -> TaggingHead {
    let data: Vec<f64> = (0..3 * width).map(|i| ((i as f64 + 1.0) * (seed as f64 + 0.37)).sin()).collect();
    TaggingHead::from_tensors(
        Tensor::from_vec(data, (3, width), &Device::Cpu).unwrap(),
        Tensor::new(&[0.1f64, -0.2, 0.05], &Device::Cpu).unwrap(),
    )
    .unwrap()
}

fn matrix() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (1usize..12).prop_flat_map(|t| (Just(t), prop::collection::vec(-5.0f64..5.0, t * 4)))
}

proptest! {
    #[test]
    fn tag_rows_are_distributions((t, data) in matrix(), seed in 0u64..100) {
        let h = Tensor::from_vec(data, (t, 4), &Device::Cpu).unwrap();
        for row in rows(&tag_distributions(&h, &random_head(seed, 4)).unwrap()) {
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn shifting_bias_keeps_distribution((t, data) in matrix(), c in -50.0f64..50.0) {
        let h = Tensor::from_vec(data, (t, 4), &Device::Cpu).unwrap();
        let head = random_head(7, 4);
        let shifted = TaggingHead::from_tensors(head.weight().clone(), (head.bias() + c).unwrap()).unwrap();
        let a = rows(&tag_distributions(&h, &head).unwrap());
        let b = rows(&tag_distributions(&h, &shifted).unwrap());
        for (x, y) in a.iter().flatten().zip(b.iter().flatten()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        let d = rows(&sentiment_distribution(&h, &head).unwrap());
        let e = rows(&sentiment_distribution(&h, &shifted).unwrap());
        for (x, y) in d.iter().zip(&e) {
            prop_assert_eq!(asote_core::model::ops::first_argmax(x), asote_core::model::ops::first_argmax(y));
        }
    }

    #[test]
    fn opinion_mean_ignores_order((t, data) in matrix(), picks in prop::collection::vec(0usize..12, 1..5)) {
        let h = Tensor::from_vec(data, (t, 4), &Device::Cpu).unwrap();
        let positions: Vec<usize> = picks.iter().map(|p| p % t).collect();
        let mut reversed = positions.clone();
        reversed.reverse();
        let a: Vec<f64> = opinion_representation(&h, &positions).unwrap().to_vec1().unwrap();
        let b: Vec<f64> = opinion_representation(&h, &reversed).unwrap().to_vec1().unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn losses_are_non_negative((t, data) in matrix(), tags in prop::collection::vec(prop::option::of(0usize..3), 12)) {
        let h = Tensor::from_vec(data, (t, 4), &Device::Cpu).unwrap();
        let labels: Vec<Option<Tag>> = tags[..t].iter().map(|o| o.map(|i| Tag::from_index(i).unwrap())).collect();
        let loss: f64 = tagging_loss(&tag_distributions(&h, &random_head(3, 4)).unwrap(), &labels).unwrap().to_scalar().unwrap();
        prop_assert!(loss >= 0.0);
        let gold: Vec<Sentiment> = (0..t).map(|i| Sentiment::from_index(i % 3).unwrap()).collect();
        let loss: f64 = aopsc_loss(&sentiment_distribution(&h, &random_head(4, 4)).unwrap(), &gold).unwrap().to_scalar().unwrap();
        prop_assert!(loss >= 0.0);
    }
}

#[test]
fn zero_parameters_give_uniform_rows() {
    let h = Tensor::from_vec(vec![0.3f64, -1.0, 2.0, 0.5, 1.0, 1.0, -3.0, 0.0], (2, 4), &Device::Cpu).unwrap();
    for row in rows(&tag_distributions(&h, &zero_head(4)).unwrap()) {
        assert!(row.iter().all(|p| (p - 1.0 / 3.0).abs() < 1e-15));
    }
    let rep = opinion_representation(&h, &[0]).unwrap().unsqueeze(0).unwrap();
    let p = rows(&sentiment_distribution(&rep, &zero_head(4)).unwrap());
    assert!(p[0].iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
}

#[test]
fn certain_gold_gives_zero_loss() {
    let p = Tensor::new(&[[1.0f64, 0.0, 0.0], [0.0, 0.0, 1.0]], &Device::Cpu).unwrap();
    let loss: f64 = tagging_loss(&p, &[Some(Tag::B), Some(Tag::O)]).unwrap().to_scalar().unwrap();
    assert_eq!(loss, 0.0);
    let loss: f64 = aopsc_loss(&p, &[Sentiment::Positive, Sentiment::Negative]).unwrap().to_scalar().unwrap();
    assert_eq!(loss, 0.0);
}

#[test]
fn misaligned_inputs_are_errors() {
    let p = Tensor::full(1.0f64 / 3.0, (2, 3), &Device::Cpu).unwrap();
    assert!(matches!(tagging_loss(&p, &[Some(Tag::B)]), Err(ModelError::Misaligned { .. })));
    assert!(matches!(aopsc_loss(&p, &[Sentiment::Neutral]), Err(ModelError::Misaligned { .. })));
    let h = Tensor::zeros((3, 4), DType::F64, &Device::Cpu).unwrap();
    assert!(matches!(opinion_representation(&h, &[]), Err(ModelError::EmptyPositions)));
    assert!(matches!(opinion_representation(&h, &[3]), Err(ModelError::PositionOutsideSequence { .. })));
}
