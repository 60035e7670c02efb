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

//! Shared data model: sentences, word spans, sentiments and triplets.
//!
//! Every value here is immutable once constructed. Spans are word-level and
//! inclusive on both ends; equality and hashing only consider the bounds, so
//! spans coming from a prediction file compare equal to gold spans regardless
//! of whether their surface string was filled in.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("{field}: span [{start}, {end}] is out of bounds for a sentence of {len} words")]
    SpanBounds {
        field: &'static str,
        start: i64,
        end: i64,
        len: usize,
    },
    #[error("sentence `{0}` has no words")]
    EmptySentence(String),
    #[error("unknown sentiment label `{0}`")]
    UnknownSentiment(String),
    #[error("triplet aspect [{start}, {end}] is not among the annotated aspects")]
    UnlistedAspect { start: usize, end: usize },
    #[error("{opinions} opinions but {sentiments} sentiments (need equal and at least one)")]
    MisalignedOpinions { opinions: usize, sentiments: usize },
    #[error("{aspects} aspects but {sentiments} aspect sentiments")]
    MisalignedAspectSentiments { aspects: usize, sentiments: usize },
}

/// A tokenized sentence. `words` is never empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    id: String,
    words: Vec<String>,
    raw_text: String,
}

impl Sentence {
    pub fn new(id: impl Into<String>, words: Vec<String>) -> Result<Self, ValidationError> {
        let raw_text = words.join(" ");
        Self::with_raw_text(id, words, raw_text)
    }

    pub fn with_raw_text(
        id: impl Into<String>,
        words: Vec<String>,
        raw_text: impl Into<String>,
    ) -> Result<Self, ValidationError> {
        let id = id.into();
        if words.is_empty() {
            return Err(ValidationError::EmptySentence(id));
        }
        Ok(Self {
            id,
            words,
            raw_text: raw_text.into(),
        })
    }

    /// Splits `text` on whitespace.
    pub fn from_text(id: impl Into<String>, text: &str) -> Result<Self, ValidationError> {
        Self::new(id, text.split_whitespace().map(str::to_owned).collect())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn raw_text(&self) -> &str {
        &self.raw_text
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn span(&self, start: i64, end: i64) -> Result<Span, ValidationError> {
        Span::checked("span", self, start, end)
    }
}

/// Inclusive word range `[start, end]` within a sentence.
#[derive(Debug, Clone)]
pub struct Span {
    start: usize,
    end: usize,
    surface: String,
}

impl Span {
    /// Validates the bounds against `sentence`, naming `field` in the error.
    pub fn checked(
        field: &'static str,
        sentence: &Sentence,
        start: i64,
        end: i64,
    ) -> Result<Self, ValidationError> {
        let len = sentence.len();
        if start < 0 || end < 0 || start > end || end as usize >= len {
            return Err(ValidationError::SpanBounds {
                field,
                start,
                end,
                len,
            });
        }
        let (start, end) = (start as usize, end as usize);
        Ok(Self {
            start,
            end,
            surface: sentence.words[start..=end].join(" "),
        })
    }

    /// A span known only by its bounds (e.g. read from a prediction file).
    /// The surface is left empty.
    pub fn bounds(start: usize, end: usize) -> Result<Self, ValidationError> {
        if start > end {
            return Err(ValidationError::SpanBounds {
                field: "span",
                start: start as i64,
                end: end as i64,
                len: end + 1,
            });
        }
        Ok(Self {
            start,
            end,
            surface: String::new(),
        })
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn end(&self) -> usize {
        self.end
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index <= self.end
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }

    pub fn words(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }

    /// True when the span lies inside `sentence`.
    pub fn fits(&self, sentence: &Sentence) -> bool {
        self.end < sentence.len()
    }
}

impl PartialEq for Span {
    fn eq(&self, other: &Self) -> bool {
        (self.start, self.end) == (other.start, other.end)
    }
}

impl Eq for Span {}

impl Hash for Span {
    fn hash<H: Hasher>(&self, state: &mut H) {
        (self.start, self.end).hash(state);
    }
}

impl PartialOrd for Span {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Span {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.start, self.end).cmp(&(other.start, other.end))
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.surface.is_empty() {
            write!(f, "[{}, {}]", self.start, self.end)
        } else {
            write!(f, "[{}, {}] \"{}\"", self.start, self.end, self.surface)
        }
    }
}

/// Sentiment of an aspect-opinion pair. The class order
/// (positive, neutral, negative) is also the tie-breaking order for argmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sentiment {
    Positive,
    Neutral,
    Negative,
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Positive, Sentiment::Neutral, Sentiment::Negative];
    pub const COUNT: usize = 3;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "positive",
            Sentiment::Neutral => "neutral",
            Sentiment::Negative => "negative",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "positive" | "pos" => Ok(Sentiment::Positive),
            "neutral" | "neu" => Ok(Sentiment::Neutral),
            "negative" | "neg" => Ok(Sentiment::Negative),
            _ => Err(ValidationError::UnknownSentiment(s.to_owned())),
        }
    }
}

/// Aspect-level sentiment as found in raw annotations, which may carry a
/// `conflict` marker. Only used for statistics; models never predict it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AspectSentiment {
    Polarity(Sentiment),
    Conflict,
}

impl AspectSentiment {
    pub fn as_str(self) -> &'static str {
        match self {
            AspectSentiment::Polarity(s) => s.as_str(),
            AspectSentiment::Conflict => "conflict",
        }
    }
}

impl fmt::Display for AspectSentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AspectSentiment {
    type Err = ValidationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("conflict") {
            Ok(AspectSentiment::Conflict)
        } else {
            s.parse().map(AspectSentiment::Polarity)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triplet {
    pub aspect: Span,
    pub sentiment: Sentiment,
    pub opinion: Span,
}

impl Triplet {
    /// Builds a triplet whose spans must both lie inside `sentence`.
    pub fn new(
        sentence: &Sentence,
        aspect: Span,
        sentiment: Sentiment,
        opinion: Span,
    ) -> Result<Self, ValidationError> {
        for (field, span) in [("aspect", &aspect), ("opinion", &opinion)] {
            if !span.fits(sentence) {
                return Err(ValidationError::SpanBounds {
                    field,
                    start: span.start as i64,
                    end: span.end as i64,
                    len: sentence.len(),
                });
            }
        }
        Ok(Self {
            aspect,
            sentiment,
            opinion,
        })
    }

    /// Unchecked constructor for spans that already share a sentence.
    pub fn from_parts(aspect: Span, sentiment: Sentiment, opinion: Span) -> Self {
        Self {
            aspect,
            sentiment,
            opinion,
        }
    }

    /// The (aspect, opinion) pair, dropping the sentiment.
    pub fn pair(&self) -> (Span, Span) {
        (self.aspect.clone(), self.opinion.clone())
    }
}

impl fmt::Display for Triplet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.aspect, self.sentiment, self.opinion)
    }
}

/// Validating constructor kept under the name used by the rest of the crate.
pub fn make_triplet(
    sentence: &Sentence,
    aspect: Span,
    sentiment: Sentiment,
    opinion: Span,
) -> Result<Triplet, ValidationError> {
    Triplet::new(sentence, aspect, sentiment, opinion)
}

/// A sentence with every annotated aspect (including those without
/// triplets), optional aspect-level sentiments, and its triplet set.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedSentence {
    pub sentence: Sentence,
    pub aspects: Vec<Span>,
    /// Aligned with `aspects`.
    pub aspect_sentiments: Vec<Option<AspectSentiment>>,
    pub triplets: Vec<Triplet>,
}

impl AnnotatedSentence {
    /// Validates the annotation and removes duplicate aspects and triplets.
    /// Returns the sentence together with the number of removed duplicates.
    pub fn new(
        sentence: Sentence,
        aspects: Vec<Span>,
        aspect_sentiments: Vec<Option<AspectSentiment>>,
        triplets: Vec<Triplet>,
    ) -> Result<(Self, usize), ValidationError> {
        if aspects.len() != aspect_sentiments.len() {
            return Err(ValidationError::MisalignedAspectSentiments {
                aspects: aspects.len(),
                sentiments: aspect_sentiments.len(),
            });
        }
        let mut removed = 0;
        let mut kept_aspects: Vec<Span> = Vec::with_capacity(aspects.len());
        let mut kept_sentiments = Vec::with_capacity(aspects.len());
        for (aspect, sentiment) in aspects.into_iter().zip(aspect_sentiments) {
            if !aspect.fits(&sentence) {
                return Err(ValidationError::SpanBounds {
                    field: "aspects",
                    start: aspect.start as i64,
                    end: aspect.end as i64,
                    len: sentence.len(),
                });
            }
            if kept_aspects.contains(&aspect) {
                removed += 1;
                continue;
            }
            kept_aspects.push(aspect);
            kept_sentiments.push(sentiment);
        }
        let mut kept_triplets: Vec<Triplet> = Vec::with_capacity(triplets.len());
        for triplet in triplets {
            let triplet = Triplet::new(&sentence, triplet.aspect, triplet.sentiment, triplet.opinion)?;
            if !kept_aspects.contains(&triplet.aspect) {
                return Err(ValidationError::UnlistedAspect {
                    start: triplet.aspect.start,
                    end: triplet.aspect.end,
                });
            }
            if kept_triplets.contains(&triplet) {
                removed += 1;
                continue;
            }
            kept_triplets.push(triplet);
        }
        Ok((
            Self {
                sentence,
                aspects: kept_aspects,
                aspect_sentiments: kept_sentiments,
                triplets: kept_triplets,
            },
            removed,
        ))
    }

    pub fn id(&self) -> &str {
        self.sentence.id()
    }

    pub fn triplets_of<'a>(&'a self, aspect: &'a Span) -> impl Iterator<Item = &'a Triplet> + 'a {
        self.triplets.iter().filter(move |t| &t.aspect == aspect)
    }

    /// Aspects paired with their aspect-level sentiment.
    pub fn aspects_with_sentiment(&self) -> impl Iterator<Item = (&Span, Option<AspectSentiment>)> {
        self.aspects.iter().zip(self.aspect_sentiments.iter().copied())
    }
}

/// Opinion extraction example: one per (sentence, aspect).
#[derive(Debug, Clone, PartialEq)]
pub struct ToweExample {
    pub sentence: Sentence,
    pub aspect: Span,
    pub gold_opinions: Vec<Span>,
}

/// Pair sentiment example: one aspect with all of its opinions.
#[derive(Debug, Clone, PartialEq)]
pub struct AopscExample {
    pub sentence: Sentence,
    pub aspect: Span,
    pub opinions: Vec<Span>,
    pub gold_sentiments: Vec<Sentiment>,
}

impl AopscExample {
    pub fn new(
        sentence: Sentence,
        aspect: Span,
        opinions: Vec<Span>,
        gold_sentiments: Vec<Sentiment>,
    ) -> Result<Self, ValidationError> {
        if opinions.is_empty() || opinions.len() != gold_sentiments.len() {
            return Err(ValidationError::MisalignedOpinions {
                opinions: opinions.len(),
                sentiments: gold_sentiments.len(),
            });
        }
        Ok(Self {
            sentence,
            aspect,
            opinions,
            gold_sentiments,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn rice() -> Sentence {
        Sentence::from_text("s1", "Rice is too dry").unwrap()
    }

    #[test]
    fn make_triplet_keeps_components() {
        let s = rice();
        let aspect = Span::checked("aspect", &s, 0, 0).unwrap();
        let opinion = Span::checked("opinion", &s, 3, 3).unwrap();
        let t = make_triplet(&s, aspect.clone(), Sentiment::Negative, opinion.clone()).unwrap();
        assert_eq!(t.aspect.surface(), "Rice");
        assert_eq!(t.opinion.surface(), "dry");
        assert_eq!(t.sentiment, Sentiment::Negative);
    }

    #[test]
    fn reversed_span_is_rejected_with_field_name() {
        let s = rice();
        let err = Span::checked("aspect", &s, 2, 1).unwrap_err();
        assert!(matches!(err, ValidationError::SpanBounds { field: "aspect", .. }));
        assert!(err.to_string().starts_with("aspect"));
    }

    #[test]
    fn span_validation_boundaries() {
        let s = rice();
        assert!(Span::checked("x", &s, -1, 0).is_err());
        assert!(Span::checked("x", &s, 0, 4).is_err());
        assert!(Span::checked("x", &s, 3, 3).is_ok());
        assert!(Span::checked("x", &s, 0, 3).is_ok());
    }

    #[test]
    fn triplet_rejects_span_from_longer_sentence() {
        let s = rice();
        let long = Sentence::from_text("s2", "a b c d e f").unwrap();
        let opinion = Span::checked("opinion", &long, 5, 5).unwrap();
        let aspect = Span::checked("aspect", &s, 0, 0).unwrap();
        let err = Triplet::new(&s, aspect, Sentiment::Neutral, opinion).unwrap_err();
        assert!(matches!(err, ValidationError::SpanBounds { field: "opinion", .. }));
    }

    #[test]
    fn equal_triplets_collapse_in_a_set() {
        let s = rice();
        let make = || {
            Triplet::new(
                &s,
                Span::checked("aspect", &s, 0, 0).unwrap(),
                Sentiment::Negative,
                Span::checked("opinion", &s, 3, 3).unwrap(),
            )
            .unwrap()
        };
        let set: HashSet<Triplet> = [make(), make()].into_iter().collect();
        assert_eq!(set.len(), 1);
        // surface is not part of identity
        let bare = Triplet::from_parts(
            Span::bounds(0, 0).unwrap(),
            Sentiment::Negative,
            Span::bounds(3, 3).unwrap(),
        );
        assert!(set.contains(&bare));
    }

    #[test]
    fn sentiment_parsing() {
        assert_eq!("Negative".parse::<Sentiment>().unwrap(), Sentiment::Negative);
        assert!("conflict".parse::<Sentiment>().is_err());
        assert_eq!(
            "conflict".parse::<AspectSentiment>().unwrap(),
            AspectSentiment::Conflict
        );
        for s in Sentiment::ALL {
            assert_eq!(Sentiment::from_index(s.index()), Some(s));
        }
    }

    #[test]
    fn annotated_sentence_dedups_and_checks_aspects() {
        let s = rice();
        let a = Span::checked("aspect", &s, 0, 0).unwrap();
        let o = Span::checked("opinion", &s, 3, 3).unwrap();
        let t = Triplet::from_parts(a.clone(), Sentiment::Negative, o.clone());
        let (ann, removed) = AnnotatedSentence::new(
            s.clone(),
            vec![a.clone()],
            vec![None],
            vec![t.clone(), t.clone()],
        )
        .unwrap();
        assert_eq!(removed, 1);
        assert_eq!(ann.triplets.len(), 1);

        let err = AnnotatedSentence::new(s, vec![], vec![], vec![t]).unwrap_err();
        assert!(matches!(err, ValidationError::UnlistedAspect { .. }));
    }

    #[test]
    fn aopsc_example_requires_alignment() {
        let s = rice();
        let a = Span::checked("aspect", &s, 0, 0).unwrap();
        assert!(AopscExample::new(s.clone(), a.clone(), vec![], vec![]).is_err());
        let o = Span::checked("opinion", &s, 3, 3).unwrap();
        assert!(AopscExample::new(s, a, vec![o], vec![Sentiment::Negative]).is_ok());
    }
}
