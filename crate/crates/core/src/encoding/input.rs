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

//! Encoder inputs for aspect extraction and for the seven aspect-conditioned
//! input constructions.
//!
//! Inputs are first laid out at word level (control tokens, sentence words,
//! optional placeholder or markers, optional appended aspect words) and
//! then tokenized piece by piece, which keeps the word-to-token alignment
//! exact.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::tokenizer::{
    WordPieceTokenizer, ASPECT_PLACEHOLDER, CLS, MARKER_BEGIN, MARKER_END, SEP,
};
use super::EncodingError;
use crate::types::{Sentence, Span};

/// How the aspect is conveyed to the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Aspect replaced by a placeholder and appended after a separator.
    #[serde(rename = "PBF")]
    Pbf,
    /// Placeholder only.
    #[serde(rename = "NO_A")]
    NoA,
    /// Appended aspect only.
    #[serde(rename = "NO_P")]
    NoP,
    /// Plain sentence.
    #[serde(rename = "NO_AP")]
    NoAp,
    /// Appended aspect words share the position indices of the in-sentence
    /// aspect words.
    #[serde(rename = "M1")]
    M1,
    /// Position indices are distances to the aspect.
    #[serde(rename = "M2")]
    M2,
    /// Marker tokens around the aspect.
    #[serde(rename = "M3")]
    M3,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Pbf,
        Variant::NoA,
        Variant::NoP,
        Variant::NoAp,
        Variant::M1,
        Variant::M2,
        Variant::M3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Pbf => "PBF",
            Variant::NoA => "NO_A",
            Variant::NoP => "NO_P",
            Variant::NoAp => "NO_AP",
            Variant::M1 => "M1",
            Variant::M2 => "M2",
            Variant::M3 => "M3",
        }
    }

    fn replaces(self) -> bool {
        matches!(self, Variant::Pbf | Variant::NoA)
    }

    fn appends(self) -> bool {
        matches!(self, Variant::Pbf | Variant::NoP | Variant::M1 | Variant::M2)
    }

    /// Whether position indices are always `0..len`.
    pub fn consecutive_positions(self) -> bool {
        !matches!(self, Variant::M1 | Variant::M2)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = EncodingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_uppercase().replace(['-', ' '], "_");
        let key = key.strip_prefix("PBF_").unwrap_or(&key);
        Ok(match key {
            "PBF" => Variant::Pbf,
            "NO_A" | "W/O_A" => Variant::NoA,
            "NO_P" | "W/O_P" => Variant::NoP,
            "NO_AP" | "W/O_AP" => Variant::NoAp,
            "M1" => Variant::M1,
            "M2" => Variant::M2,
            "M3" => Variant::M3,
            _ => return Err(EncodingError::UnknownVariant(s.to_owned())),
        })
    }
}

/// A tokenized encoder input with its alignment back to sentence words.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedInput {
    tokens: Vec<String>,
    token_ids: Vec<u32>,
    segment_indices: Vec<u32>,
    position_indices: Vec<u32>,
    alignment: Vec<Vec<usize>>,
    replaced: Option<Span>,
    truncated: bool,
}

impl EncodedInput {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn segment_indices(&self) -> &[u32] {
        &self.segment_indices
    }

    pub fn position_indices(&self) -> &[u32] {
        &self.position_indices
    }

    /// Token positions of each sentence word. Words collapsed into the
    /// placeholder map to the placeholder's tokens; truncated words map to
    /// nothing.
    pub fn alignment(&self) -> &[Vec<usize>] {
        &self.alignment
    }

    /// The aspect span replaced by the placeholder, if any.
    pub fn replaced(&self) -> Option<&Span> {
        self.replaced.as_ref()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of real (non-padding) tokens.
    pub fn attention_length(&self) -> usize {
        self.tokens.len()
    }

    pub fn word_count(&self) -> usize {
        self.alignment.len()
    }

    /// All token positions of the words in `span`, in order, deduplicated.
    pub fn tokens_of(&self, span: &Span) -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for w in span.words() {
            for &t in self.alignment.get(w).map(Vec::as_slice).unwrap_or(&[]) {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Piece {
    Word(usize),
    Placeholder,
    Marker,
}

struct Layout<'a> {
    sentence: &'a Sentence,
    sentence_part: Vec<(Piece, Vec<String>)>,
    appended: Vec<Vec<String>>,
}

fn check_span(sentence: &Sentence, aspect: &Span) -> Result<(), EncodingError> {
    if !aspect.fits(sentence) {
        return Err(EncodingError::SpanOutOfRange {
            start: aspect.start(),
            end: aspect.end(),
            length: sentence.len(),
        });
    }
    Ok(())
}

fn layout<'a>(
    sentence: &'a Sentence,
    aspect: Option<(&Span, Variant)>,
    tokenizer: &WordPieceTokenizer,
) -> Layout<'a> {
    let word = |i: usize| (Piece::Word(i), tokenizer.tokenize_word(&sentence.words()[i]));
    let mut sentence_part = Vec::with_capacity(sentence.len() + 2);
    let mut appended = Vec::new();
    match aspect {
        None => sentence_part.extend((0..sentence.len()).map(word)),
        Some((aspect, variant)) => {
            for i in 0..sentence.len() {
                if variant.replaces() && aspect.contains(i) {
                    if i == aspect.start() {
                        sentence_part
                            .push((Piece::Placeholder, tokenizer.tokenize_word(ASPECT_PLACEHOLDER)));
                    }
                    continue;
                }
                if variant == Variant::M3 && i == aspect.start() {
                    sentence_part.push((Piece::Marker, vec![MARKER_BEGIN.to_owned()]));
                }
                sentence_part.push(word(i));
                if variant == Variant::M3 && i == aspect.end() {
                    sentence_part.push((Piece::Marker, vec![MARKER_END.to_owned()]));
                }
            }
            if variant.appends() {
                appended = aspect
                    .words()
                    .map(|i| tokenizer.tokenize_word(&sentence.words()[i]))
                    .collect();
            }
        }
    }
    Layout {
        sentence,
        sentence_part,
        appended,
    }
}

fn assemble(
    mut layout: Layout<'_>,
    aspect: Option<(&Span, Variant)>,
    tokenizer: &WordPieceTokenizer,
    budget: usize,
) -> Result<EncodedInput, EncodingError> {
    let appended_len: usize = layout.appended.iter().map(Vec::len).sum();
    let controls = if layout.appended.is_empty() { 2 } else { 3 };
    let fixed = appended_len + controls;
    if fixed > budget {
        return Err(EncodingError::Overflow {
            needed: fixed,
            budget,
        });
    }
    let mut sentence_len: usize = layout.sentence_part.iter().map(|(_, t)| t.len()).sum();
    let mut truncated = false;
    while fixed + sentence_len > budget {
        let (_, tokens) = layout.sentence_part.pop().expect("fixed part fits the budget");
        sentence_len -= tokens.len();
        truncated = true;
    }

    let n = layout.sentence.len();
    let mut tokens = vec![CLS.to_owned()];
    let mut alignment = vec![Vec::new(); n];
    // in-sentence aspect tokens, in order, for M1
    let mut aspect_tokens = Vec::new();
    let mut word_of_token: Vec<Option<usize>> = vec![None];
    for (piece, piece_tokens) in layout.sentence_part {
        let positions: Vec<usize> = (tokens.len()..tokens.len() + piece_tokens.len()).collect();
        match piece {
            Piece::Word(i) => {
                alignment[i] = positions.clone();
                if aspect.is_some_and(|(a, _)| a.contains(i)) {
                    aspect_tokens.extend(positions.iter().copied());
                }
                word_of_token.extend(positions.iter().map(|_| Some(i)));
            }
            Piece::Placeholder => {
                let (a, _) = aspect.expect("placeholder only exists for aspect inputs");
                for i in a.words() {
                    alignment[i] = positions.clone();
                }
                word_of_token.extend(positions.iter().map(|_| Some(a.start())));
            }
            Piece::Marker => word_of_token.extend(positions.iter().map(|_| None)),
        }
        tokens.extend(piece_tokens);
    }
    tokens.push(SEP.to_owned());
    word_of_token.push(None);
    let first_sep = tokens.len() - 1;
    if !layout.appended.is_empty() {
        for piece_tokens in layout.appended {
            tokens.extend(piece_tokens);
        }
        tokens.push(SEP.to_owned());
    }

    let total = tokens.len();
    let segment_indices: Vec<u32> = (0..total).map(|t| u32::from(t > first_sep)).collect();
    let mut position_indices: Vec<u32> = (0..total as u32).collect();
    match aspect {
        Some((_, Variant::M1)) => {
            // appended token k mirrors in-sentence aspect token k
            for (k, slot) in (first_sep + 1..total - 1).enumerate() {
                if let Some(&t) = aspect_tokens.get(k) {
                    position_indices[slot] = t as u32;
                }
            }
            position_indices[total - 1] = first_sep as u32 + 1;
        }
        Some((a, Variant::M2)) => {
            let distance = |w: isize| -> u32 {
                let (s, e) = (a.start() as isize, a.end() as isize);
                if w < s {
                    (s - w) as u32
                } else if w > e {
                    (w - e) as u32
                } else {
                    0
                }
            };
            position_indices[0] = distance(-1);
            for t in 1..first_sep {
                let w = word_of_token[t].expect("M2 sentence tokens all come from words");
                position_indices[t] = distance(w as isize);
            }
            position_indices[first_sep] = distance(n as isize);
            let next = position_indices[..=first_sep].iter().copied().max().unwrap_or(0) + 1;
            for (k, slot) in (first_sep + 1..total).enumerate() {
                position_indices[slot] = next + k as u32;
            }
        }
        _ => {}
    }

    let token_ids = tokens.iter().map(|t| tokenizer.id_or_unk(t)).collect();
    Ok(EncodedInput {
        tokens,
        token_ids,
        segment_indices,
        position_indices,
        alignment,
        replaced: aspect
            .filter(|(_, v)| v.replaces())
            .map(|(a, _)| a.clone()),
        truncated,
    })
}

/// `[CLS] words [SEP]`, single segment, consecutive positions.
pub fn build_ate_input(
    sentence: &Sentence,
    tokenizer: &WordPieceTokenizer,
    budget: usize,
) -> Result<EncodedInput, EncodingError> {
    if sentence.is_empty() {
        return Err(EncodingError::EmptySentence);
    }
    assemble(layout(sentence, None, tokenizer), None, tokenizer, budget)
}

/// Aspect-conditioned input for opinion extraction and pair sentiment.
pub fn build_aspect_input(
    sentence: &Sentence,
    aspect: &Span,
    variant: Variant,
    tokenizer: &WordPieceTokenizer,
    budget: usize,
) -> Result<EncodedInput, EncodingError> {
    if sentence.is_empty() {
        return Err(EncodingError::EmptySentence);
    }
    check_span(sentence, aspect)?;
    let spec = Some((aspect, variant));
    assemble(layout(sentence, spec, tokenizer), spec, tokenizer, budget)
}
