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

use std::collections::BTreeMap;
use std::hint::black_box;

use asote_core::encoding::{bio_decode, bio_encode, build_aspect_input, build_ate_input, Variant, WordPieceTokenizer};
use asote_core::eval::{score_asote, score_ope};
use asote_core::model::{EncoderConfig, Mode, ModelTask, TaskModel};
use asote_core::{Sentence, Sentiment, Span, Triplet};
use criterion::{criterion_group, criterion_main, Criterion};

const TEXT: &str = "The rice is too dry , but the tuna was n't so fresh and the service was painfully slow \
                    while the waiters kept smiling at every table near the window";

fn sentence() -> Sentence {
    Sentence::from_text("b", TEXT).unwrap()
}

fn bio(c: &mut Criterion) {
    let spans: Vec<Span> = (0..30).step_by(4).map(|i| Span::bounds(i, i + 1).unwrap()).collect();
    c.bench_function("bio encode+decode 32 words", |b| {
        b.iter(|| bio_decode(&bio_encode(black_box(&spans), 32).unwrap()))
    });
}

fn encoding(c: &mut Criterion) {
    let s = sentence();
    let tok = WordPieceTokenizer::build(s.words().iter().map(String::as_str));
    let aspect = Span::bounds(8, 8).unwrap();
    c.bench_function("ate input", |b| b.iter(|| build_ate_input(black_box(&s), &tok, 512).unwrap()));
    let mut group = c.benchmark_group("aspect input");
    for variant in Variant::ALL {
        group.bench_function(variant.as_str(), |b| {
            b.iter(|| build_aspect_input(black_box(&s), &aspect, variant, &tok, 512).unwrap())
        });
    }
    group.finish();
}

fn scoring(c: &mut Criterion) {
    let mut gold = BTreeMap::new();
    let mut pred = BTreeMap::new();
    for i in 0..1000usize {
        let t = |a: usize, o: usize, s: usize| {
            Triplet::from_parts(Span::bounds(a, a).unwrap(), Sentiment::from_index(s % 3).unwrap(), Span::bounds(o, o + 1).unwrap())
        };
        gold.insert(format!("s{i}"), vec![t(i % 5, 7, i), t(2, 9, i + 1)]);
        pred.insert(format!("s{i}"), vec![t(i % 5, 7, i + i % 2), t(3, 9, i)]);
    }
    c.bench_function("score asote 1000 sentences", |b| b.iter(|| score_asote(black_box(&gold), &pred).unwrap()));
    c.bench_function("score ope 1000 sentences", |b| b.iter(|| score_ope(black_box(&gold), &pred).unwrap()));
}

fn forward(c: &mut Criterion) {
    let s = sentence();
    let tok = WordPieceTokenizer::build(s.words().iter().map(String::as_str));
    let config = EncoderConfig::tiny(tok.vocab_size());
    let model = TaskModel::new(ModelTask::Towe, Some(Variant::Pbf), tok, config, 0).unwrap();
    let input = model.encode_aspect(&s, &Span::bounds(8, 8).unwrap()).unwrap();
    c.bench_function("tiny encoder forward", |b| {
        b.iter(|| model.encoder().encode(black_box(&input), 0, &mut Mode::Inference).unwrap())
    });
    c.bench_function("tiny tagger", |b| b.iter(|| model.tag(black_box(&input)).unwrap()));
}

criterion_group!(benches, bio, encoding, scoring, forward);
criterion_main!(benches);
