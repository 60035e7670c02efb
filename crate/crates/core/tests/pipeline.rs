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

use asote_core::encoding::Variant;
use asote_core::model::{ModelError, ModelTask, TaskModel};
use asote_core::pipeline::{classify_pairs, extract_aspects, extract_opinions, extract_triplets, PipelineBundle};
use asote_core::{Sentiment, Span};
use candle_core::{DType, Device, Tensor};
use common::{sentence, span, tiny};
use proptest::prelude::*;

/// Forces the head to emit `class` everywhere (or a three-way tie when `None`).
fn force(model: &TaskModel, class: Option<usize>) {
    let width = model.config().output_size();
    let params = model.params();
    params.assign("head.weight", &Tensor::zeros((3, width), DType::F64, &Device::Cpu).unwrap()).unwrap();
    let mut bias = [0.0f64; 3];
    if let Some(c) = class {
        bias[c] = 10.0;
    }
    params.assign("head.bias", &Tensor::new(&bias, &Device::Cpu).unwrap()).unwrap();
}

fn bundle(seed: u64) -> PipelineBundle {
    PipelineBundle::new(
        tiny(ModelTask::Ate, None, seed),
        tiny(ModelTask::Towe, Some(Variant::Pbf), seed + 1),
        tiny(ModelTask::Aopsc, Some(Variant::Pbf), seed + 2),
    )
    .unwrap()
}

#[test]
fn bundle_rejects_swapped_models() {
    let err = PipelineBundle::new(
        tiny(ModelTask::Towe, Some(Variant::Pbf), 0),
        tiny(ModelTask::Towe, Some(Variant::Pbf), 1),
        tiny(ModelTask::Aopsc, Some(Variant::Pbf), 2),
    );
    assert!(matches!(err, Err(ModelError::TaskMismatch { expected: ModelTask::Ate, .. })));
}

#[test]
fn outside_everywhere_yields_nothing() {
    let b = bundle(0);
    force(b.ate(), Some(2));
    let s = sentence("o", "the rice is too dry");
    assert!(extract_aspects(&s, &b).unwrap().is_empty());
    assert!(extract_triplets(&s, &b).unwrap().is_empty());
    force(b.towe(), Some(2));
    assert!(extract_opinions(&s, &span(1, 1), &b).unwrap().is_empty());
}

#[test]
fn begin_everywhere_yields_single_word_spans() {
    let b = bundle(3);
    force(b.ate(), Some(0));
    let s = sentence("b", "the rice is too dry");
    let aspects = extract_aspects(&s, &b).unwrap();
    assert_eq!(aspects, (0..5).map(|i| span(i, i)).collect::<Vec<_>>());
}

#[test]
fn tied_sentiment_is_positive() {
    let b = bundle(5);
    force(b.aopsc(), None);
    let s = sentence("t", "the tuna was n't so fresh");
    let got = classify_pairs(&s, &span(1, 1), &[span(3, 5), span(0, 0)], &b).unwrap();
    assert_eq!(got, [Sentiment::Positive, Sentiment::Positive]);
}

#[test]
fn classify_needs_opinions() {
    let b = bundle(6);
    let s = sentence("e", "the rice is dry");
    assert!(classify_pairs(&s, &span(1, 1), &[], &b).is_err());
}

#[test]
fn same_surface_aspects_get_distinct_inputs() {
    let model = tiny(ModelTask::Towe, Some(Variant::Pbf), 8);
    let s = sentence("d", "the rice , the rice");
    let a = model.encode_aspect(&s, &span(1, 1)).unwrap();
    let c = model.encode_aspect(&s, &span(4, 4)).unwrap();
    assert_ne!(a.token_ids(), c.token_ids());
    let other = tiny(ModelTask::Towe, Some(Variant::M1), 8);
    let a = other.encode_aspect(&s, &span(1, 1)).unwrap();
    let c = other.encode_aspect(&s, &span(4, 4)).unwrap();
    assert_eq!(a.token_ids(), c.token_ids());
    assert_ne!(a.position_indices(), c.position_indices());
}

fn words() -> impl Strategy<Value = Vec<&'static str>> {
    prop::collection::vec(prop::sample::select(common::LEXICON.to_vec()), 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn triplets_follow_opinions(ws in words(), seed in 0u64..4, ate in 0usize..3, towe in 0usize..3) {
        let b = bundle(seed);
        force(b.ate(), Some(ate));
        force(b.towe(), Some(towe));
        let s = sentence("p", &ws.join(" "));
        let triplets = extract_triplets(&s, &b).unwrap();
        let mut expected = Vec::new();
        for aspect in extract_aspects(&s, &b).unwrap() {
            for opinion in extract_opinions(&s, &aspect, &b).unwrap() {
                prop_assert!(opinion.end() < s.len());
                expected.push((aspect.clone(), opinion));
            }
        }
        let got: Vec<(Span, Span)> = triplets.iter().map(|t| (t.aspect.clone(), t.opinion.clone())).collect();
        prop_assert_eq!(got, expected);
        prop_assert_eq!(extract_triplets(&s, &b).unwrap(), triplets);
    }

    #[test]
    fn untouched_models_are_deterministic(ws in words(), seed in 0u64..3) {
        let s = sentence("q", &ws.join(" "));
        let first = extract_triplets(&s, &bundle(seed)).unwrap();
        let second = extract_triplets(&s, &bundle(seed)).unwrap();
        prop_assert_eq!(first, second);
    }
}
