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

//! Aspect-sentiment-opinion triplet extraction.
//!
//! A pipeline of three models over a shared encoder architecture: aspect
//! extraction, aspect-conditioned opinion extraction, and aspect-opinion
//! pair sentiment classification. The crate also covers corpus handling,
//! exact-match evaluation and a training harness.

pub mod corpus;
pub mod encoding;
pub mod model;
pub mod eval;
pub mod harness;
pub mod pipeline;
pub mod types;

pub use types::{
    make_triplet, AnnotatedSentence, AopscExample, AspectSentiment, Sentence, Sentiment, Span,
    ToweExample, Triplet, ValidationError,
};
