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

//! ASOTE-JSON corpora: loading, writing, assembly from separate annotation
//! layers, per-task example derivation and dataset statistics.
//!
//! The on-disk format is one JSON record per line:
//!
//! ```text
//! {"id": "...", "words": [...],
//!  "aspects": [{"from": 0, "to": 0, "sentiment": "negative"}],
//!  "triplets": [{"aspect": [0, 0], "sentiment": "negative", "opinion": [3, 3]}]}
//! ```
//!
//! Span ends are inclusive word indices.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    AnnotatedSentence, AopscExample, AspectSentiment, Sentence, Sentiment, Span, ToweExample,
    Triplet, ValidationError,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line} (sentence `{id}`): {source}")]
    Record {
        line: usize,
        id: String,
        #[source]
        source: ValidationError,
    },
    #[error("line {line}: duplicate sentence id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("{file}: sentence `{id}` is not in the aspect file")]
    UnknownSentence { file: &'static str, id: String },
    #[error("opinion file: sentence `{id}` has no aspect {aspect}")]
    UnknownAspect { id: String, aspect: String },
    #[error("pair sentiment file: orphan pair (`{id}`, aspect {aspect}, opinion {opinion})")]
    OrphanPair {
        id: String,
        aspect: String,
        opinion: String,
    },
    #[error("{file}: spans match neither inclusive nor exclusive end indexing")]
    SpanConvention { file: &'static str },
}

impl CorpusError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.to_owned(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub fn as_str(self) -> &'static str {
        match self {
            SplitName::Train => "train",
            SplitName::Dev => "dev",
            SplitName::Test => "test",
        }
    }
}

impl fmt::Display for SplitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "dev" => Ok(SplitName::Dev),
            "test" => Ok(SplitName::Test),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub sentences: Vec<AnnotatedSentence>,
}

impl DatasetSplit {
    pub fn new(name: SplitName, sentences: Vec<AnnotatedSentence>) -> Self {
        Self { name, sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&AnnotatedSentence> {
        self.sentences.iter().find(|s| s.id() == id)
    }
}

/// Warnings collected while loading; none of them abort the load.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub duplicates_removed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SentenceRecord {
    id: String,
    words: Vec<String>,
    aspects: Vec<AspectRecord>,
    triplets: Vec<TripletRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AspectRecord {
    from: i64,
    to: i64,
    sentiment: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct TripletRecord {
    pub aspect: [i64; 2],
    pub sentiment: String,
    pub opinion: [i64; 2],
}

impl TripletRecord {
    pub(crate) fn from_triplet(t: &Triplet) -> Self {
        Self {
            aspect: [t.aspect.start() as i64, t.aspect.end() as i64],
            sentiment: t.sentiment.as_str().to_owned(),
            opinion: [t.opinion.start() as i64, t.opinion.end() as i64],
        }
    }

    pub(crate) fn to_triplet(&self, sentence: &Sentence) -> Result<Triplet, ValidationError> {
        let aspect = Span::checked("aspect", sentence, self.aspect[0], self.aspect[1])?;
        let opinion = Span::checked("opinion", sentence, self.opinion[0], self.opinion[1])?;
        let sentiment = self.sentiment.parse()?;
        Triplet::new(sentence, aspect, sentiment, opinion)
    }
}

fn record_to_sentence(record: SentenceRecord) -> Result<(AnnotatedSentence, usize), ValidationError> {
    let sentence = Sentence::new(record.id, record.words)?;
    let mut aspects = Vec::with_capacity(record.aspects.len());
    let mut sentiments = Vec::with_capacity(record.aspects.len());
    for a in &record.aspects {
        aspects.push(Span::checked("aspects", &sentence, a.from, a.to)?);
        sentiments.push(a.sentiment.as_deref().map(str::parse).transpose()?);
    }
    let triplets = record
        .triplets
        .iter()
        .map(|t| t.to_triplet(&sentence))
        .collect::<Result<Vec<_>, _>>()?;
    AnnotatedSentence::new(sentence, aspects, sentiments, triplets)
}

fn sentence_to_record(s: &AnnotatedSentence) -> SentenceRecord {
    SentenceRecord {
        id: s.id().to_owned(),
        words: s.sentence.words().to_vec(),
        aspects: s
            .aspects_with_sentiment()
            .map(|(span, sentiment)| AspectRecord {
                from: span.start() as i64,
                to: span.end() as i64,
                sentiment: sentiment.map(|s| s.as_str().to_owned()),
            })
            .collect(),
        triplets: s.triplets.iter().map(TripletRecord::from_triplet).collect(),
    }
}

/// Parses ASOTE-JSON lines. Blank lines are skipped.
pub fn read_split<R: BufRead>(
    reader: R,
    name: SplitName,
) -> Result<(DatasetSplit, LoadReport), CorpusError> {
    let mut report = LoadReport::default();
    let mut seen = HashSet::new();
    let mut sentences = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| CorpusError::io(Path::new("<input>"), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SentenceRecord = serde_json::from_str(&line).map_err(|source| {
            CorpusError::Json {
                line: line_no,
                source,
            }
        })?;
        let id = record.id.clone();
        if !seen.insert(id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id });
        }
        let (sentence, removed) = record_to_sentence(record).map_err(|source| CorpusError::Record {
            line: line_no,
            id,
            source,
        })?;
        report.duplicates_removed += removed;
        sentences.push(sentence);
    }
    if report.duplicates_removed > 0 {
        log::warn!(
            "{} duplicate aspects/triplets removed while loading the {name} split",
            report.duplicates_removed
        );
    }
    Ok((DatasetSplit::new(name, sentences), report))
}

pub fn load_split_with_report(
    path: &Path,
    name: SplitName,
) -> Result<(DatasetSplit, LoadReport), CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    read_split(BufReader::new(file), name).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::io(path, source),
        other => other,
    })
}

pub fn load_split(path: &Path, name: SplitName) -> Result<DatasetSplit, CorpusError> {
    load_split_with_report(path, name).map(|(split, _)| split)
}

pub fn write_split_to<W: Write>(split: &DatasetSplit, mut writer: W) -> std::io::Result<()> {
    for sentence in &split.sentences {
        serde_json::to_writer(&mut writer, &sentence_to_record(sentence))?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_split(split: &DatasetSplit, path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::io(path, e))?;
    write_split_to(split, BufWriter::new(file)).map_err(|e| CorpusError::io(path, e))
}

// ---------------------------------------------------------------------------
// Assembly from separate aspect / opinion / pair-sentiment annotation files.

/// Span as written in the import files; `to` may be inclusive or exclusive,
/// `term` is the optional surface used to tell the two apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSpan {
    pub from: i64,
    pub to: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub term: Option<String>,
}

impl RawSpan {
    pub fn new(from: i64, to: i64) -> Self {
        Self {
            from,
            to,
            term: None,
        }
    }

    pub fn with_term(from: i64, to: i64, term: impl Into<String>) -> Self {
        Self {
            from,
            to,
            term: Some(term.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawAspect {
    #[serde(flatten)]
    pub span: RawSpan,
    #[serde(default)]
    pub sentiment: Option<String>,
}

/// One sentence of the aspect-level annotation layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AspectFileRecord {
    pub id: String,
    pub words: Vec<String>,
    pub aspects: Vec<RawAspect>,
}

/// The opinions annotated for one aspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpinionFileRecord {
    pub id: String,
    pub aspect: RawSpan,
    pub opinions: Vec<RawSpan>,
}

/// Sentiment of one aspect-opinion pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSentimentRecord {
    pub id: String,
    pub aspect: RawSpan,
    pub opinion: RawSpan,
    pub sentiment: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanConvention {
    Inclusive,
    Exclusive,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AssemblyReport {
    pub aspect_convention: Option<SpanConvention>,
    pub opinion_convention: Option<SpanConvention>,
    pub pair_convention: Option<SpanConvention>,
    /// (aspect, opinion) pairs from the opinion file with no pair sentiment.
    pub unlabeled_pairs: Vec<String>,
    /// Pairs whose sentiment label was `conflict`; kept out of the triplet set.
    pub conflict_pairs: usize,
    pub duplicates_removed: usize,
}

fn squash(s: &str) -> String {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

fn fits(words: &[String], span: &RawSpan, convention: SpanConvention) -> bool {
    let n = words.len() as i64;
    let (from, last) = match convention {
        SpanConvention::Inclusive => (span.from, span.to),
        SpanConvention::Exclusive => (span.from, span.to - 1),
    };
    if from < 0 || from > last || last >= n {
        return false;
    }
    match &span.term {
        Some(term) => squash(&words[from as usize..=last as usize].concat()) == squash(term),
        None => true,
    }
}

/// Which end conventions are consistent with every span of one file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConventionCandidates {
    pub inclusive: bool,
    pub exclusive: bool,
    pub any_span: bool,
}

impl ConventionCandidates {
    fn decided(self) -> Option<SpanConvention> {
        match (self.any_span, self.inclusive, self.exclusive) {
            (true, true, false) => Some(SpanConvention::Inclusive),
            (true, false, true) => Some(SpanConvention::Exclusive),
            _ => None,
        }
    }
}

/// Checks every span of a file against both readings of `to`. A reading is
/// ruled out by an out-of-range index or a surface mismatch.
pub fn convention_candidates<'a>(
    file: &'static str,
    spans: impl IntoIterator<Item = (&'a [String], &'a RawSpan)>,
) -> Result<ConventionCandidates, CorpusError> {
    let mut c = ConventionCandidates {
        inclusive: true,
        exclusive: true,
        any_span: false,
    };
    for (words, span) in spans {
        c.any_span = true;
        c.inclusive &= fits(words, span, SpanConvention::Inclusive);
        c.exclusive &= fits(words, span, SpanConvention::Exclusive);
    }
    if c.any_span && !c.inclusive && !c.exclusive {
        return Err(CorpusError::SpanConvention { file });
    }
    Ok(c)
}

/// Files whose spans fit both readings follow the files that are decided;
/// with no evidence anywhere, inclusive wins.
fn resolve_conventions(files: &[ConventionCandidates]) -> Vec<Option<SpanConvention>> {
    let decided: Vec<SpanConvention> = files.iter().filter_map(|c| c.decided()).collect();
    let fallback = if !decided.is_empty() && decided.iter().all(|&c| c == SpanConvention::Exclusive) {
        SpanConvention::Exclusive
    } else {
        SpanConvention::Inclusive
    };
    files
        .iter()
        .map(|c| {
            if !c.any_span {
                None
            } else {
                Some(c.decided().unwrap_or(fallback))
            }
        })
        .collect()
}

fn normalize(span: &RawSpan, convention: Option<SpanConvention>) -> (i64, i64) {
    match convention {
        Some(SpanConvention::Exclusive) => (span.from, span.to - 1),
        _ => (span.from, span.to),
    }
}

/// Joins the three annotation layers into an ASOTE split. Every aspect is
/// kept, even without opinions; every labeled pair becomes a triplet.
pub fn assemble_asote(
    name: SplitName,
    aspect_file: &[AspectFileRecord],
    opinion_file: &[OpinionFileRecord],
    pair_file: &[PairSentimentRecord],
) -> Result<(DatasetSplit, AssemblyReport), CorpusError> {
    let mut report = AssemblyReport::default();
    let mut words_by_id: HashMap<&str, &[String]> = HashMap::new();
    for (index, record) in aspect_file.iter().enumerate() {
        if words_by_id
            .insert(record.id.as_str(), record.words.as_slice())
            .is_some()
        {
            return Err(CorpusError::DuplicateId {
                line: index + 1,
                id: record.id.clone(),
            });
        }
    }
    let lookup = |file: &'static str, id: &str| {
        words_by_id
            .get(id)
            .copied()
            .ok_or_else(|| CorpusError::UnknownSentence {
                file,
                id: id.to_owned(),
            })
    };

    let aspect_candidates = convention_candidates(
        "aspect file",
        aspect_file
            .iter()
            .flat_map(|r| r.aspects.iter().map(move |a| (r.words.as_slice(), &a.span))),
    )?;
    let mut opinion_spans = Vec::new();
    for r in opinion_file {
        let words = lookup("opinion file", &r.id)?;
        opinion_spans.push((words, &r.aspect));
        opinion_spans.extend(r.opinions.iter().map(|o| (words, o)));
    }
    let opinion_candidates = convention_candidates("opinion file", opinion_spans)?;
    let mut pair_spans = Vec::new();
    for r in pair_file {
        let words = lookup("pair sentiment file", &r.id)?;
        pair_spans.push((words, &r.aspect));
        pair_spans.push((words, &r.opinion));
    }
    let pair_candidates = convention_candidates("pair sentiment file", pair_spans)?;
    let resolved = resolve_conventions(&[aspect_candidates, opinion_candidates, pair_candidates]);
    report.aspect_convention = resolved[0];
    report.opinion_convention = resolved[1];
    report.pair_convention = resolved[2];

    type PairKey = (String, (i64, i64), (i64, i64));
    let mut pair_sentiments: HashMap<PairKey, &str> = HashMap::new();
    for r in pair_file {
        let key = (
            r.id.clone(),
            normalize(&r.aspect, report.pair_convention),
            normalize(&r.opinion, report.pair_convention),
        );
        pair_sentiments.insert(key, r.sentiment.as_str());
    }

    type Bounds = (i64, i64);
    let mut opinions_by_aspect: HashMap<(String, Bounds), Vec<Bounds>> = HashMap::new();
    for r in opinion_file {
        let aspect = normalize(&r.aspect, report.opinion_convention);
        let entry = opinions_by_aspect.entry((r.id.clone(), aspect)).or_default();
        entry.extend(r.opinions.iter().map(|o| normalize(o, report.opinion_convention)));
    }

    let mut known_aspects: HashSet<(String, (i64, i64))> = HashSet::new();
    let mut used_pairs: HashSet<PairKey> = HashSet::new();
    let mut sentences = Vec::with_capacity(aspect_file.len());
    for (index, record) in aspect_file.iter().enumerate() {
        let line = index + 1;
        let wrap = |source| CorpusError::Record {
            line,
            id: record.id.clone(),
            source,
        };
        let sentence = Sentence::new(record.id.clone(), record.words.clone()).map_err(wrap)?;
        let mut aspects = Vec::new();
        let mut aspect_sentiments = Vec::new();
        let mut triplets = Vec::new();
        for raw in &record.aspects {
            let (from, to) = normalize(&raw.span, report.aspect_convention);
            let aspect = Span::checked("aspects", &sentence, from, to).map_err(wrap)?;
            let sentiment = raw
                .sentiment
                .as_deref()
                .map(AspectSentiment::from_str)
                .transpose()
                .map_err(wrap)?;
            known_aspects.insert((record.id.clone(), (from, to)));
            if let Some(opinions) = opinions_by_aspect.get(&(record.id.clone(), (from, to))) {
                for &(ofrom, oto) in opinions {
                    let opinion = Span::checked("opinion", &sentence, ofrom, oto).map_err(wrap)?;
                    let key = (record.id.clone(), (from, to), (ofrom, oto));
                    match pair_sentiments.get(&key) {
                        None => report.unlabeled_pairs.push(format!(
                            "{} {} {}",
                            record.id, aspect, opinion
                        )),
                        Some(label) => {
                            used_pairs.insert(key);
                            match AspectSentiment::from_str(label).map_err(wrap)? {
                                AspectSentiment::Conflict => report.conflict_pairs += 1,
                                AspectSentiment::Polarity(s) => triplets.push(Triplet::new(
                                    &sentence,
                                    aspect.clone(),
                                    s,
                                    opinion,
                                ).map_err(wrap)?),
                            }
                        }
                    }
                }
            }
            aspects.push(aspect);
            aspect_sentiments.push(sentiment);
        }
        let (annotated, removed) =
            AnnotatedSentence::new(sentence, aspects, aspect_sentiments, triplets).map_err(wrap)?;
        report.duplicates_removed += removed;
        sentences.push(annotated);
    }

    for r in opinion_file {
        let aspect = normalize(&r.aspect, report.opinion_convention);
        if !known_aspects.contains(&(r.id.clone(), aspect)) {
            return Err(CorpusError::UnknownAspect {
                id: r.id.clone(),
                aspect: format!("[{}, {}]", aspect.0, aspect.1),
            });
        }
    }
    let mut orphans: Vec<&PairKey> = pair_sentiments
        .keys()
        .filter(|k| !used_pairs.contains(*k))
        .collect();
    orphans.sort();
    if let Some((id, a, o)) = orphans.first() {
        return Err(CorpusError::OrphanPair {
            id: id.clone(),
            aspect: format!("[{}, {}]", a.0, a.1),
            opinion: format!("[{}, {}]", o.0, o.1),
        });
    }
    if !report.unlabeled_pairs.is_empty() {
        log::warn!(
            "{} aspect-opinion pairs have no pair sentiment and were skipped",
            report.unlabeled_pairs.len()
        );
    }
    Ok((DatasetSplit::new(name, sentences), report))
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CorpusError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| CorpusError::Json {
            line: index + 1,
            source,
        })?);
    }
    Ok(out)
}

pub fn assemble_asote_files(
    name: SplitName,
    aspect_path: &Path,
    opinion_path: &Path,
    pair_path: &Path,
) -> Result<(DatasetSplit, AssemblyReport), CorpusError> {
    let aspects: Vec<AspectFileRecord> = read_jsonl(aspect_path)?;
    let opinions: Vec<OpinionFileRecord> = read_jsonl(opinion_path)?;
    let pairs: Vec<PairSentimentRecord> = read_jsonl(pair_path)?;
    assemble_asote(name, &aspects, &opinions, &pairs)
}

// ---------------------------------------------------------------------------
// Statistics.

/// Dataset statistics in the usual ASOTE column order.
/// `d_s2` and `t_d` need aspect-level sentiments and are `None` when any
/// aspect with triplets lacks one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StatsTable {
    pub n_sentences: usize,
    pub n_aspects: usize,
    pub n_triplets: usize,
    pub n_zero_t: usize,
    pub n_one_t: usize,
    pub n_m_t: usize,
    pub n_d_s1: usize,
    pub n_d_s2: Option<usize>,
    pub n_t_d: Option<usize>,
    pub n_aspect_multi_opinion: usize,
    pub n_opinion_multi_aspect: usize,
}

impl StatsTable {
    pub const HEADER: [&'static str; 11] = [
        "#sentence",
        "#aspects",
        "#triplets",
        "#zero_t",
        "#one_t",
        "#m_t",
        "#d_s1",
        "#d_s2",
        "#t_d",
        "#aspect_with_multiple_opinions",
        "#opinion_with_multiple_aspects",
    ];

    pub fn cells(&self) -> [String; 11] {
        let opt = |v: Option<usize>| v.map_or_else(|| "-".to_owned(), |v| v.to_string());
        [
            self.n_sentences.to_string(),
            self.n_aspects.to_string(),
            self.n_triplets.to_string(),
            self.n_zero_t.to_string(),
            self.n_one_t.to_string(),
            self.n_m_t.to_string(),
            self.n_d_s1.to_string(),
            opt(self.n_d_s2),
            opt(self.n_t_d),
            self.n_aspect_multi_opinion.to_string(),
            self.n_opinion_multi_aspect.to_string(),
        ]
    }

    /// Header plus one row, separated by `delimiter`.
    pub fn render(&self, delimiter: char) -> String {
        let sep = delimiter.to_string();
        format!(
            "{}\n{}\n",
            Self::HEADER.join(&sep),
            self.cells().join(&sep)
        )
    }
}

pub fn compute_statistics(split: &DatasetSplit) -> StatsTable {
    let mut stats = StatsTable {
        n_sentences: split.len(),
        ..StatsTable::default()
    };
    let mut d_s2 = 0;
    let mut t_d = 0;
    let mut sentiments_available = true;
    for sentence in &split.sentences {
        let mut aspects_per_opinion: HashMap<&Span, BTreeSet<&Span>> = HashMap::new();
        for (aspect, aspect_sentiment) in sentence.aspects_with_sentiment() {
            stats.n_aspects += 1;
            let triplets: Vec<&Triplet> = sentence.triplets_of(aspect).collect();
            stats.n_triplets += triplets.len();
            match triplets.len() {
                0 => stats.n_zero_t += 1,
                1 => stats.n_one_t += 1,
                _ => stats.n_m_t += 1,
            }
            let distinct: BTreeSet<Sentiment> = triplets.iter().map(|t| t.sentiment).collect();
            if triplets.len() > 1 && distinct.len() > 1 {
                stats.n_d_s1 += 1;
            }
            let opinions: BTreeSet<&Span> = triplets.iter().map(|t| &t.opinion).collect();
            if opinions.len() > 1 {
                stats.n_aspect_multi_opinion += 1;
            }
            for t in &triplets {
                aspects_per_opinion.entry(&t.opinion).or_default().insert(aspect);
            }
            match aspect_sentiment {
                None if !triplets.is_empty() => sentiments_available = false,
                None => {}
                Some(aspect_sentiment) => {
                    let differs = |s: Sentiment| aspect_sentiment != AspectSentiment::Polarity(s);
                    t_d += triplets.iter().filter(|t| differs(t.sentiment)).count();
                    if triplets.len() == 1
                        && aspect_sentiment != AspectSentiment::Conflict
                        && differs(triplets[0].sentiment)
                    {
                        d_s2 += 1;
                    }
                }
            }
        }
        stats.n_opinion_multi_aspect += aspects_per_opinion.values().filter(|a| a.len() > 1).count();
    }
    if sentiments_available {
        stats.n_d_s2 = Some(d_s2);
        stats.n_t_d = Some(t_d);
    }
    stats
}

// ---------------------------------------------------------------------------
// Per-task examples.

/// Aspect extraction example: a sentence and its (non-overlapping) aspects.
#[derive(Debug, Clone, PartialEq)]
pub struct AteExample {
    pub sentence: Sentence,
    pub aspects: Vec<Span>,
}

/// Returns the examples and how many overlapping aspects had to be dropped
/// to make the aspect set BIO-encodable.
pub fn derive_ate_examples(split: &DatasetSplit) -> (Vec<AteExample>, usize) {
    let mut dropped = 0;
    let examples = split
        .sentences
        .iter()
        .map(|s| {
            let mut sorted = s.aspects.clone();
            sorted.sort();
            let mut aspects: Vec<Span> = Vec::with_capacity(sorted.len());
            for a in sorted {
                if aspects.last().is_some_and(|prev| prev.overlaps(&a)) {
                    dropped += 1;
                } else {
                    aspects.push(a);
                }
            }
            AteExample {
                sentence: s.sentence.clone(),
                aspects,
            }
        })
        .collect();
    (examples, dropped)
}

/// One example per (sentence, aspect). With `drop_opinionless` the aspects
/// without any opinion are removed, which gives TOWE-data semantics.
pub fn derive_towe_examples(split: &DatasetSplit, drop_opinionless: bool) -> Vec<ToweExample> {
    let mut out = Vec::new();
    for s in &split.sentences {
        for aspect in &s.aspects {
            let gold: BTreeSet<Span> = s.triplets_of(aspect).map(|t| t.opinion.clone()).collect();
            if drop_opinionless && gold.is_empty() {
                continue;
            }
            out.push(ToweExample {
                sentence: s.sentence.clone(),
                aspect: aspect.clone(),
                gold_opinions: gold.into_iter().collect(),
            });
        }
    }
    out
}

/// One example per aspect that has at least one triplet.
pub fn derive_aopsc_examples(split: &DatasetSplit) -> Vec<AopscExample> {
    let mut out = Vec::new();
    for s in &split.sentences {
        for aspect in &s.aspects {
            let mut pairs: Vec<(Span, Sentiment)> = s
                .triplets_of(aspect)
                .map(|t| (t.opinion.clone(), t.sentiment))
                .collect();
            if pairs.is_empty() {
                continue;
            }
            pairs.sort();
            let (opinions, sentiments) = pairs.into_iter().unzip();
            out.push(AopscExample {
                sentence: s.sentence.clone(),
                aspect: aspect.clone(),
                opinions,
                gold_sentiments: sentiments,
            });
        }
    }
    out
}

/// Gold triplets per sentence id.
pub fn gold_triplets(split: &DatasetSplit) -> BTreeMap<String, Vec<Triplet>> {
    split
        .sentences
        .iter()
        .map(|s| (s.id().to_owned(), s.triplets.clone()))
        .collect()
}

/// Gold aspects per sentence id.
pub fn gold_aspects(split: &DatasetSplit) -> BTreeMap<String, Vec<Span>> {
    split
        .sentences
        .iter()
        .map(|s| (s.id().to_owned(), s.aspects.clone()))
        .collect()
}
