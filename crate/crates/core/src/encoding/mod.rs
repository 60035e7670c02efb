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

//! Model inputs: tokenization, aspect-conditioned input construction and
//! BIO tagging.

pub mod bio;
pub mod input;
pub mod tokenizer;

use thiserror::Error;

pub use bio::{
    bio_decode, bio_encode, project_tags_to_subwords, tags_from_subwords, SubwordLabels, Tag,
    TagSequence,
};
pub use input::{build_aspect_input, build_ate_input, EncodedInput, Variant};
pub use tokenizer::{TokenizerError, WordPieceTokenizer};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EncodingError {
    #[error("cannot encode an empty sentence")]
    EmptySentence,
    #[error("span [{start}, {end}] exceeds a sequence of {length} words")]
    SpanOutOfRange {
        start: usize,
        end: usize,
        length: usize,
    },
    #[error("span [{start}, {end}] overlaps an earlier span")]
    OverlappingSpans { start: usize, end: usize },
    #[error("expected {expected} labels, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("input needs at least {needed} tokens but the budget is {budget}")]
    Overflow { needed: usize, budget: usize },
    #[error("unknown input variant `{0}`")]
    UnknownVariant(String),
}
