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

//! Exact-match scoring, multi-run aggregation and prediction files.
//!
//! Everything is micro-averaged over the whole split and uses set
//! semantics: duplicate predictions count once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{DatasetSplit, TripletRecord};
use crate::types::{Sentence, Sentiment, Span, Triplet, ValidationError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EvalTask {
    Asote,
    Ope,
    Towe,
    Ate,
    Aopsc,
}

impl EvalTask {
    pub const ALL: [EvalTask; 5] = [EvalTask::Asote, EvalTask::Ope, EvalTask::Towe, EvalTask::Ate, EvalTask::Aopsc];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalTask::Asote => "ASOTE",
            EvalTask::Ope => "OPE",
            EvalTask::Towe => "TOWE",
            EvalTask::Ate => "ATE",
            EvalTask::Aopsc => "AOPSC",
        }
    }
}

impl fmt::Display for EvalTask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for EvalTask {
    type Err = String;

    /// Case-insensitive task name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EvalTask::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown evaluation task `{s}`"))
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sentence ids differ: {only_gold} only in gold (e.g. `{gold_example}`), {only_pred} only in predictions (e.g. `{pred_example}`)")]
    IdMismatch {
        only_gold: usize,
        only_pred: usize,
        gold_example: String,
        pred_example: String,
    },
    #[error("prediction for `{0}` has no gold counterpart")]
    UnknownKey(String),
    #[error("cannot aggregate reports of different tasks ({0} and {1})")]
    MixedTasks(EvalTask, EvalTask),
    #[error("no reports to aggregate")]
    NoRuns,
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("prediction line {line}: {message}")]
    Record { line: usize, message: String },
}

/// Corpus-level scores for one task. `accuracy` is set for AOPSC only;
/// `runs` is the number of reports averaged into this one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: EvalTask,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub n_gold: usize,
    pub n_pred: usize,
    pub n_correct: usize,
    #[serde(default = "one")]
    pub runs: usize,
}

fn one() -> usize {
    1
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricReport {
    pub fn from_counts(task: EvalTask, n_gold: usize, n_pred: usize, n_correct: usize) -> Self {
        let precision = ratio(n_correct, n_pred);
        let recall = ratio(n_correct, n_gold);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            task,
            precision,
            recall,
            f1,
            accuracy: None,
            n_gold,
            n_pred,
            n_correct,
            runs: 1,
        }
    }
}

fn check_ids<A, B>(gold: &BTreeMap<String, A>, pred: &BTreeMap<String, B>) -> Result<(), EvalError> {
    let only_gold: Vec<&String> = gold.keys().filter(|k| !pred.contains_key(*k)).collect();
    let only_pred: Vec<&String> = pred.keys().filter(|k| !gold.contains_key(*k)).collect();
    if only_gold.is_empty() && only_pred.is_empty() {
        return Ok(());
    }
    Err(EvalError::IdMismatch {
        only_gold: only_gold.len(),
        only_pred: only_pred.len(),
        gold_example: only_gold.first().map(|s| s.to_string()).unwrap_or_default(),
        pred_example: only_pred.first().map(|s| s.to_string()).unwrap_or_default(),
    })
}

/// Per-key set counting: `(n_gold, n_pred, n_correct)`.
fn count_sets<K, T, I, J>(items: impl Iterator<Item = (K, I, J)>) -> (usize, usize, usize)
where
    T: Ord,
    I: IntoIterator<Item = T>,
    J: IntoIterator<Item = T>,
{
    let (mut g, mut p, mut c) = (0, 0, 0);
    for (_, gold, pred) in items {
        let gold: BTreeSet<T> = gold.into_iter().collect();
        let pred: BTreeSet<T> = pred.into_iter().collect();
        g += gold.len();
        p += pred.len();
        c += gold.intersection(&pred).count();
    }
    (g, p, c)
}

type TripletKey = (Span, Sentiment, Span);

fn triplet_key(t: &Triplet) -> TripletKey {
    (t.aspect.clone(), t.sentiment, t.opinion.clone())
}

/// Exact triplet match per sentence. Both sides must cover the same ids.
pub fn score_asote(
    gold: &BTreeMap<String, Vec<Triplet>>,
    pred: &BTreeMap<String, Vec<Triplet>>,
) -> Result<MetricReport, EvalError> {
    check_ids(gold, pred)?;
    let (g, p, c) = count_sets(gold.iter().map(|(id, ts)| {
        (id, ts.iter().map(triplet_key), pred[id].iter().map(triplet_key))
    }));
    Ok(MetricReport::from_counts(EvalTask::Asote, g, p, c))
}

/// Aspect-opinion pair match, ignoring sentiment.
pub fn score_ope(
    gold: &BTreeMap<String, Vec<Triplet>>,
    pred: &BTreeMap<String, Vec<Triplet>>,
) -> Result<MetricReport, EvalError> {
    check_ids(gold, pred)?;
    let (g, p, c) = count_sets(gold.iter().map(|(id, ts)| {
        (id, ts.iter().map(Triplet::pair), pred[id].iter().map(Triplet::pair))
    }));
    Ok(MetricReport::from_counts(EvalTask::Ope, g, p, c))
}

/// Opinion spans per (sentence id, gold aspect). Gold keys missing from
/// `pred` count as empty predictions.
pub fn score_towe(
    gold: &BTreeMap<(String, Span), Vec<Span>>,
    pred: &BTreeMap<(String, Span), Vec<Span>>,
) -> Result<MetricReport, EvalError> {
    if let Some((id, aspect)) = pred.keys().find(|k| !gold.contains_key(*k)) {
        return Err(EvalError::UnknownKey(format!("{id} aspect {aspect}")));
    }
    let empty = Vec::new();
    let (g, p, c) = count_sets(gold.iter().map(|(key, spans)| {
        (key, spans.iter().cloned(), pred.get(key).unwrap_or(&empty).iter().cloned())
    }));
    Ok(MetricReport::from_counts(EvalTask::Towe, g, p, c))
}

/// Exact aspect span match per sentence.
pub fn score_ate(
    gold: &BTreeMap<String, Vec<Span>>,
    pred: &BTreeMap<String, Vec<Span>>,
) -> Result<MetricReport, EvalError> {
    check_ids(gold, pred)?;
    let (g, p, c) = count_sets(gold.iter().map(|(id, spans)| {
        (id, spans.iter().cloned(), pred[id].iter().cloned())
    }));
    Ok(MetricReport::from_counts(EvalTask::Ate, g, p, c))
}

/// Key of one aspect-opinion pair: sentence id, aspect, opinion.
pub type PairKey = (String, Span, Span);

/// Pair sentiment accuracy. Both maps must hold the same pairs; precision,
/// recall and F1 all equal the accuracy.
pub fn score_aopsc(
    gold: &BTreeMap<PairKey, Sentiment>,
    pred: &BTreeMap<PairKey, Sentiment>,
) -> Result<MetricReport, EvalError> {
    if let Some((id, a, o)) = pred.keys().find(|k| !gold.contains_key(*k)) {
        return Err(EvalError::UnknownKey(format!("{id} pair {a}-{o}")));
    }
    if let Some((id, a, o)) = gold.keys().find(|k| !pred.contains_key(*k)) {
        return Err(EvalError::UnknownKey(format!("{id} pair {a}-{o} has no prediction")));
    }
    let correct = gold.iter().filter(|(k, s)| pred[*k] == **s).count();
    let mut report = MetricReport::from_counts(EvalTask::Aopsc, gold.len(), pred.len(), correct);
    let accuracy = ratio(correct, gold.len());
    report.precision = accuracy;
    report.recall = accuracy;
    report.f1 = accuracy;
    report.accuracy = Some(accuracy);
    Ok(report)
}

/// Mean of the metrics over runs. Counts are summed so the support stays
/// visible; the metrics are not recomputed from them.
pub fn aggregate_runs(reports: &[MetricReport]) -> Result<MetricReport, EvalError> {
    let first = reports.first().ok_or(EvalError::NoRuns)?;
    if let Some(other) = reports.iter().find(|r| r.task != first.task) {
        return Err(EvalError::MixedTasks(first.task, other.task));
    }
    let n = reports.len() as f64;
    let mean = |f: fn(&MetricReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
    Ok(MetricReport {
        task: first.task,
        precision: mean(|r| r.precision),
        recall: mean(|r| r.recall),
        f1: mean(|r| r.f1),
        accuracy: first
            .accuracy
            .map(|_| mean(|r| r.accuracy.unwrap_or(0.0))),
        n_gold: reports.iter().map(|r| r.n_gold).sum(),
        n_pred: reports.iter().map(|r| r.n_pred).sum(),
        n_correct: reports.iter().map(|r| r.n_correct).sum(),
        runs: reports.iter().map(|r| r.runs).sum(),
    })
}

/// Aligned text table with columns P, R, F1 (in percent) and accuracy.
pub fn render_table(reports: &[MetricReport]) -> String {
    let mut out = format!("{:<6} {:>6} {:>6} {:>6} {:>6}\n", "task", "P", "R", "F1", "Acc");
    for r in reports {
        let pct = |v: f64| format!("{:.1}", 100.0 * v);
        out.push_str(&format!(
            "{:<6} {:>6} {:>6} {:>6} {:>6}\n",
            r.task.as_str(),
            pct(r.precision),
            pct(r.recall),
            pct(r.f1),
            r.accuracy.map_or_else(|| "-".to_owned(), pct)
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Prediction files.

#[derive(Debug, Serialize, Deserialize)]
struct PredictionRecord {
    id: String,
    triplets: Vec<TripletRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    aspects: Option<Vec<[i64; 2]>>,
}

/// One sentence's pipeline output. `aspects` holds every extracted aspect,
/// including those that produced no triplet.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePrediction {
    pub id: String,
    pub triplets: Vec<Triplet>,
    pub aspects: Option<Vec<Span>>,
}

pub fn write_predictions_to<W: Write>(predictions: &[SentencePrediction], mut writer: W) -> std::io::Result<()> {
    for p in predictions {
        let record = PredictionRecord {
            id: p.id.clone(),
            triplets: p.triplets.iter().map(TripletRecord::from_triplet).collect(),
            aspects: p
                .aspects
                .as_ref()
                .map(|a| a.iter().map(|s| [s.start() as i64, s.end() as i64]).collect()),
        };
        serde_json::to_writer(&mut writer, &record)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_predictions(predictions: &[SentencePrediction], path: &Path) -> Result<(), EvalError> {
    let io = |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    write_predictions_to(predictions, std::io::BufWriter::new(file)).map_err(io)
}

/// Reads predictions, resolving spans against the sentences of `gold`.
pub fn read_predictions_from<R: BufRead>(reader: R, gold: &DatasetSplit) -> Result<Vec<SentencePrediction>, EvalError> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let record_err = |message: String| EvalError::Record { line: line_no, message };
        let line = line.map_err(|e| record_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord = serde_json::from_str(&line).map_err(|e| record_err(e.to_string()))?;
        let sentence: &Sentence = &gold
            .get(&record.id)
            .ok_or_else(|| EvalError::UnknownKey(record.id.clone()))?
            .sentence;
        if !seen.insert(record.id.clone()) {
            return Err(record_err(format!("sentence `{}` predicted twice", record.id)));
        }
        let invalid = |e: ValidationError| record_err(format!("sentence `{}`: {e}", record.id));
        let triplets = record
            .triplets
            .iter()
            .map(|t| t.to_triplet(sentence))
            .collect::<Result<Vec<_>, _>>()
            .map_err(invalid)?;
        let aspects = record
            .aspects
            .map(|list| {
                list.iter()
                    .map(|[from, to]| Span::checked("aspects", sentence, *from, *to))
                    .collect::<Result<Vec<_>, _>>()
            })
            .transpose()
            .map_err(invalid)?;
        out.push(SentencePrediction {
            id: record.id,
            triplets,
            aspects,
        });
    }
    Ok(out)
}

pub fn read_predictions(path: &Path, gold: &DatasetSplit) -> Result<Vec<SentencePrediction>, EvalError> {
    let file = std::fs::File::open(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_predictions_from(std::io::BufReader::new(file), gold)
}

/// Predicted triplets per id.
pub fn triplets_by_id(predictions: &[SentencePrediction]) -> BTreeMap<String, Vec<Triplet>> {
    predictions.iter().map(|p| (p.id.clone(), p.triplets.clone())).collect()
}

/// Predicted aspects per id; falls back to the triplets' aspects when a
/// record carries no aspect list.
pub fn aspects_by_id(predictions: &[SentencePrediction]) -> BTreeMap<String, Vec<Span>> {
    predictions
        .iter()
        .map(|p| {
            let aspects = p
                .aspects
                .clone()
                .unwrap_or_else(|| p.triplets.iter().map(|t| t.aspect.clone()).collect());
            (p.id.clone(), aspects)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(a: usize, b: usize) -> Span {
        Span::bounds(a, b).unwrap()
    }

    fn t(a: usize, s: Sentiment, o: usize) -> Triplet {
        Triplet::from_parts(span(a, a), s, span(o, o))
    }

    fn one_sentence(ts: Vec<Triplet>) -> BTreeMap<String, Vec<Triplet>> {
        BTreeMap::from([("s".to_owned(), ts)])
    }

    #[test]
    fn task_names_parse() {
        for t in EvalTask::ALL {
            assert_eq!(t.as_str().to_lowercase().parse::<EvalTask>(), Ok(t));
        }
        assert!("F1".parse::<EvalTask>().is_err());
    }

    #[test]
    fn worked_case() {
        let t1 = t(0, Sentiment::Positive, 2);
        let t2 = t(1, Sentiment::Negative, 3);
        let r = score_asote(&one_sentence(vec![t1.clone()]), &one_sentence(vec![t1, t2])).unwrap();
        assert_eq!(r.precision, 0.5);
        assert_eq!(r.recall, 1.0);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ope_ignores_sentiment_and_empty_pred_scores_zero() {
        let g = one_sentence(vec![t(0, Sentiment::Positive, 2)]);
        let p = one_sentence(vec![t(0, Sentiment::Negative, 2)]);
        assert_eq!(score_asote(&g, &p).unwrap().n_correct, 0);
        assert_eq!(score_ope(&g, &p).unwrap().f1, 1.0);
        let r = score_ope(&g, &one_sentence(vec![])).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn duplicates_count_once() {
        let g = one_sentence(vec![t(0, Sentiment::Positive, 2)]);
        let p = one_sentence(vec![t(0, Sentiment::Positive, 2), t(0, Sentiment::Positive, 2)]);
        let r = score_asote(&g, &p).unwrap();
        assert_eq!((r.n_pred, r.f1), (1, 1.0));
    }

    #[test]
    fn id_mismatch_is_an_error() {
        let g = one_sentence(vec![]);
        let p = BTreeMap::from([("other".to_owned(), vec![])]);
        assert!(matches!(score_asote(&g, &p), Err(EvalError::IdMismatch { .. })));
    }

    #[test]
    fn towe_rejects_unknown_keys_and_ignores_empty_aspects() {
        let gold = BTreeMap::from([
            (("s".to_owned(), span(0, 0)), vec![span(2, 2)]),
            (("s".to_owned(), span(4, 4)), vec![]),
        ]);
        let pred = BTreeMap::from([(("s".to_owned(), span(0, 0)), vec![span(2, 2)])]);
        let r = score_towe(&gold, &pred).unwrap();
        assert_eq!((r.n_gold, r.n_pred, r.f1), (1, 1, 1.0));
        let bad = BTreeMap::from([(("s".to_owned(), span(1, 1)), vec![])]);
        assert!(matches!(score_towe(&gold, &bad), Err(EvalError::UnknownKey(_))));
    }

    #[test]
    fn aopsc_accuracy() {
        let key = |i: usize| ("s".to_owned(), span(0, 0), span(i, i));
        let gold: BTreeMap<_, _> = (1..5).map(|i| (key(i), Sentiment::Positive)).collect();
        let mut pred = gold.clone();
        pred.insert(key(4), Sentiment::Negative);
        assert_eq!(score_aopsc(&gold, &pred).unwrap().accuracy, Some(0.75));
    }

    #[test]
    fn aggregate_means_metrics() {
        let mut a = MetricReport::from_counts(EvalTask::Asote, 10, 10, 6);
        let mut b = a.clone();
        a.f1 = 0.6;
        b.f1 = 0.8;
        let m = aggregate_runs(&[a.clone(), b.clone()]).unwrap();
        assert!((m.f1 - 0.7).abs() < 1e-12);
        assert_eq!(m.runs, 2);
        assert_eq!(aggregate_runs(&[b, a]).unwrap(), m);
        let ate = MetricReport::from_counts(EvalTask::Ate, 1, 1, 1);
        assert!(matches!(aggregate_runs(&[m, ate]), Err(EvalError::MixedTasks(..))));
    }
}
