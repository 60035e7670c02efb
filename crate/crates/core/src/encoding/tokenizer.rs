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

//! Uncased WordPiece tokenization over pre-split words.
//!
//! Each word goes through the usual basic tokenizer steps (lowercasing,
//! accent stripping, punctuation splitting) and then greedy longest-match
//! WordPiece. Vocabularies are either read from a `vocab.txt` or built from
//! a corpus for the tiny encoder configuration.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";
/// Word that replaces an aspect in the sentence.
pub const ASPECT_PLACEHOLDER: &str = "aspect";
pub const MARKER_BEGIN: &str = "#";
pub const MARKER_END: &str = "$";

const SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];
const MAX_WORD_CHARS: usize = 100;

#[derive(Debug, Error)]
pub enum TokenizerError {
    #[error("reading vocabulary {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("vocabulary lacks required token `{0}`")]
    MissingToken(String),
    #[error("vocabulary contains `{0}` twice")]
    DuplicateToken(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPieceTokenizer {
    pieces: Vec<String>,
    ids: HashMap<String, u32>,
    identifier: String,
}

impl WordPieceTokenizer {
    /// Uses `pieces` as the vocabulary, id = position.
    pub fn from_pieces(pieces: Vec<String>) -> Result<Self, TokenizerError> {
        let mut ids = HashMap::with_capacity(pieces.len());
        for (i, p) in pieces.iter().enumerate() {
            if ids.insert(p.clone(), i as u32).is_some() {
                return Err(TokenizerError::DuplicateToken(p.clone()));
            }
        }
        for required in SPECIALS {
            if !ids.contains_key(required) {
                return Err(TokenizerError::MissingToken(required.to_owned()));
            }
        }
        let mut hasher = Sha256::new();
        for p in &pieces {
            hasher.update(p.as_bytes());
            hasher.update(b"\n");
        }
        let identifier = format!("wordpiece-uncased-{}", &hex::encode(hasher.finalize())[..16]);
        Ok(Self {
            pieces,
            ids,
            identifier,
        })
    }

    /// Reads a BERT-style `vocab.txt` (one piece per line).
    pub fn from_vocab_file(path: &Path) -> Result<Self, TokenizerError> {
        let text = fs::read_to_string(path).map_err(|source| TokenizerError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_pieces(text.lines().map(|l| l.trim_end_matches('\r').to_owned()).collect())
    }

    /// Builds a vocabulary covering `words`: every basic token as a whole
    /// piece, plus every character in both initial and `##` form so unseen
    /// words still decompose without `[UNK]`.
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut whole = BTreeSet::new();
        let mut chars = BTreeSet::new();
        for word in words {
            for token in basic_split(word) {
                for c in token.chars() {
                    chars.insert(c.to_string());
                }
                whole.insert(token);
            }
        }
        let mut pieces: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        let mut seen: BTreeSet<String> = pieces.iter().cloned().collect();
        let extra = [ASPECT_PLACEHOLDER, MARKER_BEGIN, MARKER_END]
            .into_iter()
            .map(str::to_owned)
            .chain(whole)
            .chain(chars.iter().cloned())
            .chain(chars.iter().map(|c| format!("##{c}")));
        for p in extra {
            if seen.insert(p.clone()) {
                pieces.push(p);
            }
        }
        Self::from_pieces(pieces).expect("built vocabulary always holds the special tokens")
    }

    /// Stable identifier derived from the vocabulary contents.
    pub fn identifier(&self) -> &str {
        &self.identifier
    }

    pub fn pieces(&self) -> &[String] {
        &self.pieces
    }

    pub fn vocab_size(&self) -> usize {
        self.pieces.len()
    }

    pub fn token_id(&self, piece: &str) -> Option<u32> {
        self.ids.get(piece).copied()
    }

    pub fn id_or_unk(&self, piece: &str) -> u32 {
        self.token_id(piece).unwrap_or_else(|| self.ids[UNK])
    }

    pub fn pad_id(&self) -> u32 {
        self.ids[PAD]
    }

    /// Subword pieces of one word.
    pub fn tokenize_word(&self, word: &str) -> Vec<String> {
        basic_split(word)
            .into_iter()
            .flat_map(|token| self.wordpiece(&token))
            .collect()
    }

    fn wordpiece(&self, token: &str) -> Vec<String> {
        let chars: Vec<char> = token.chars().collect();
        if chars.len() > MAX_WORD_CHARS {
            return vec![UNK.to_owned()];
        }
        let mut out = Vec::new();
        let mut start = 0;
        while start < chars.len() {
            let mut end = chars.len();
            let mut found = None;
            while start < end {
                let mut candidate: String = chars[start..end].iter().collect();
                if start > 0 {
                    candidate.insert_str(0, "##");
                }
                if self.ids.contains_key(&candidate) {
                    found = Some(candidate);
                    break;
                }
                end -= 1;
            }
            match found {
                Some(piece) => {
                    out.push(piece);
                    start = end;
                }
                None => return vec![UNK.to_owned()],
            }
        }
        out
    }
}

fn is_punctuation(c: char) -> bool {
    if c.is_ascii() {
        c.is_ascii_punctuation()
    } else {
        !c.is_alphanumeric() && !c.is_whitespace() && !c.is_control()
    }
}

/// Lowercases, strips combining marks and splits punctuation into separate
/// tokens. Empty input gives no tokens.
pub fn basic_split(word: &str) -> Vec<String> {
    let normalized: String = word
        .to_lowercase()
        .nfd()
        .filter(|c| !unicode_normalization::char::is_combining_mark(*c))
        .collect();
    let mut out = Vec::new();
    let mut current = String::new();
    for c in normalized.chars() {
        if c.is_whitespace() || c.is_control() {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
        } else if is_punctuation(c) {
            if !current.is_empty() {
                out.push(std::mem::take(&mut current));
            }
            out.push(c.to_string());
        } else {
            current.push(c);
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_split_lowercases_and_splits_punctuation() {
        assert_eq!(basic_split("Rice"), ["rice"]);
        assert_eq!(basic_split("n't"), ["n", "'", "t"]);
        assert_eq!(basic_split("Café!"), ["cafe", "!"]);
        assert!(basic_split("").is_empty());
    }

    #[test]
    fn greedy_longest_match() {
        let pieces = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]", "play", "##ing", "##in", "p"];
        let tok = WordPieceTokenizer::from_pieces(pieces.iter().map(|s| s.to_string()).collect())
            .unwrap();
        assert_eq!(tok.tokenize_word("Playing"), ["play", "##ing"]);
        assert_eq!(tok.tokenize_word("xyz"), ["[UNK]"]);
    }

    #[test]
    fn built_vocab_covers_unseen_words_by_characters() {
        let tok = WordPieceTokenizer::build(["Rice", "dry"]);
        assert_eq!(tok.tokenize_word("rice"), ["rice"]);
        assert_eq!(tok.tokenize_word("dice"), ["d", "##i", "##c", "##e"]);
        assert!(tok.token_id(ASPECT_PLACEHOLDER).is_some());
        assert!(tok.token_id(MARKER_END).is_some());
    }

    #[test]
    fn identifier_depends_on_vocab() {
        let a = WordPieceTokenizer::build(["a"]);
        let b = WordPieceTokenizer::build(["b"]);
        assert_ne!(a.identifier(), b.identifier());
        assert_eq!(a.identifier(), WordPieceTokenizer::build(["a"]).identifier());
    }

    #[test]
    fn missing_specials_rejected() {
        assert!(matches!(
            WordPieceTokenizer::from_pieces(vec!["a".into()]),
            Err(TokenizerError::MissingToken(_))
        ));
    }
}
