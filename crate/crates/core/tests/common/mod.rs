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

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use asote_core::encoding::{Variant, WordPieceTokenizer};
use asote_core::model::{EncoderConfig, ModelTask, TaskModel};
use asote_core::{Sentence, Span};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn span(a: usize, b: usize) -> Span {
    Span::bounds(a, b).unwrap()
}

pub fn sentence(id: &str, text: &str) -> Sentence {
    Sentence::from_text(id, text).unwrap()
}

pub const LEXICON: [&str; 14] = [
    "the", "rice", "is", "too", "dry", "tuna", "was", "n't", "so", "fresh", "service", "slow",
    "great", ",",
];

pub fn tiny(task: ModelTask, variant: Option<Variant>, seed: u64) -> TaskModel {
    let tok = WordPieceTokenizer::build(LEXICON);
    let config = EncoderConfig::tiny(tok.vocab_size());
    TaskModel::new(task, variant, tok, config, seed).unwrap()
}
