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

//! BIO tag sequences over words, and their projection onto subword tokens.

use std::fmt;
use std::str::FromStr;

use super::input::EncodedInput;
use super::EncodingError;
use crate::types::Span;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    B,
    I,
    O,
}

impl Tag {
    pub const ALL: [Tag; 3] = [Tag::B, Tag::I, Tag::O];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Tag> {
        Self::ALL.get(index).copied()
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tag::B => "B",
            Tag::I => "I",
            Tag::O => "O",
        })
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "B" => Ok(Tag::B),
            "I" => Ok(Tag::I),
            "O" => Ok(Tag::O),
            other => Err(format!("unknown tag `{other}`")),
        }
    }
}

/// Word-level tags.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TagSequence {
    tags: Vec<Tag>,
}

impl TagSequence {
    pub fn new(tags: Vec<Tag>) -> Self {
        Self { tags }
    }

    pub fn outside(length: usize) -> Self {
        Self::new(vec![Tag::O; length])
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

impl fmt::Display for TagSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, t) in self.tags.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{t}")?;
        }
        Ok(())
    }
}

pub fn bio_encode(spans: &[Span], length: usize) -> Result<TagSequence, EncodingError> {
    let mut tags = vec![Tag::O; length];
    for span in spans {
        if span.end() >= length {
            return Err(EncodingError::SpanOutOfRange {
                start: span.start(),
                end: span.end(),
                length,
            });
        }
        if span.words().any(|i| tags[i] != Tag::O) {
            return Err(EncodingError::OverlappingSpans {
                start: span.start(),
                end: span.end(),
            });
        }
        tags[span.start()] = Tag::B;
        for tag in &mut tags[span.start() + 1..=span.end()] {
            *tag = Tag::I;
        }
    }
    Ok(TagSequence::new(tags))
}

/// Decodes maximal `B I*` runs. A stray `I` (at the start or after `O`)
/// opens a new span, so every tag sequence decodes.
pub fn bio_decode(tags: &TagSequence) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    let close = |open: &mut Option<usize>, end: usize, spans: &mut Vec<Span>| {
        if let Some(start) = open.take() {
            spans.push(Span::bounds(start, end).expect("start never exceeds end"));
        }
    };
    for (i, tag) in tags.tags.iter().enumerate() {
        match tag {
            Tag::B => {
                if i > 0 {
                    close(&mut open, i - 1, &mut spans);
                }
                open = Some(i);
            }
            Tag::I => {
                if open.is_none() {
                    open = Some(i);
                }
            }
            Tag::O => {
                if i > 0 {
                    close(&mut open, i - 1, &mut spans);
                }
            }
        }
    }
    if !tags.tags.is_empty() {
        close(&mut open, tags.tags.len() - 1, &mut spans);
    }
    spans
}

/// Per-token training labels: `Some(tag)` on the first subword of each
/// visible word, `None` (loss-masked) everywhere else.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubwordLabels {
    labels: Vec<Option<Tag>>,
}

impl SubwordLabels {
    pub fn labels(&self) -> &[Option<Tag>] {
        &self.labels
    }

    pub fn mask(&self) -> Vec<bool> {
        self.labels.iter().map(Option::is_some).collect()
    }

    pub fn active_count(&self) -> usize {
        self.labels.iter().flatten().count()
    }
}

/// First token of every word that keeps its own tokens in `input`. Words
/// collapsed into the aspect placeholder and words lost to truncation have
/// no head token.
pub fn word_head_tokens(input: &EncodedInput) -> Vec<Option<usize>> {
    let mut claimed = vec![false; input.len()];
    input
        .alignment()
        .iter()
        .enumerate()
        .map(|(word, tokens)| {
            if input.replaced().is_some_and(|span| span.contains(word)) {
                return None;
            }
            let first = *tokens.first()?;
            if claimed[first] {
                return None;
            }
            claimed[first] = true;
            Some(first)
        })
        .collect()
}

pub fn project_tags_to_subwords(
    tags: &TagSequence,
    input: &EncodedInput,
) -> Result<SubwordLabels, EncodingError> {
    if tags.len() != input.word_count() {
        return Err(EncodingError::LengthMismatch {
            expected: input.word_count(),
            found: tags.len(),
        });
    }
    let mut labels = vec![None; input.len()];
    for (word, head) in word_head_tokens(input).into_iter().enumerate() {
        if let Some(token) = head {
            labels[token] = Some(tags.tags[word]);
        }
    }
    Ok(SubwordLabels { labels })
}

/// Reads word tags back from per-token predictions, using each word's first
/// subword. Words without a head token read as `O`.
pub fn tags_from_subwords(
    predicted: &[Tag],
    input: &EncodedInput,
) -> Result<TagSequence, EncodingError> {
    if predicted.len() != input.len() {
        return Err(EncodingError::LengthMismatch {
            expected: input.len(),
            found: predicted.len(),
        });
    }
    Ok(TagSequence::new(
        word_head_tokens(input)
            .into_iter()
            .map(|head| head.map_or(Tag::O, |t| predicted[t]))
            .collect(),
    ))
}
