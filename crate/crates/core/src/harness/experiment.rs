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

//! Pipeline prediction, multi-seed experiments and corpus statistics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::info;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::train::{gold_opinions, gold_pairs, predict_opinions, predict_pairs, train};
use super::HarnessError;
use crate::corpus::{compute_statistics, gold_aspects, gold_triplets, load_split, DatasetSplit, SplitName, StatsTable};
use crate::encoding::Variant;
use crate::eval::{
    aggregate_runs, aspects_by_id, score_aopsc, score_asote, score_ate, score_ope, score_towe,
    triplets_by_id, write_predictions, EvalTask, MetricReport, SentencePrediction,
};
use crate::model::{ModelTask, TaskModel};
use crate::pipeline::{extract_aspects, classify_pairs, extract_opinions, PipelineBundle};
use crate::types::Triplet;

/// Runs the pipeline over every sentence of `split`, keeping ids and order.
pub fn predict_split(bundle: &PipelineBundle, split: &DatasetSplit) -> Result<Vec<SentencePrediction>, HarnessError> {
    let mut out = Vec::with_capacity(split.len());
    for s in &split.sentences {
        let aspects = extract_aspects(&s.sentence, bundle)?;
        let mut triplets = Vec::new();
        for aspect in &aspects {
            let opinions = extract_opinions(&s.sentence, aspect, bundle)?;
            if opinions.is_empty() {
                continue;
            }
            let sentiments = classify_pairs(&s.sentence, aspect, &opinions, bundle)?;
            for (opinion, sentiment) in opinions.into_iter().zip(sentiments) {
                triplets.push(Triplet::from_parts(aspect.clone(), sentiment, opinion));
            }
        }
        out.push(SentencePrediction {
            id: s.id().to_owned(),
            triplets,
            aspects: Some(aspects),
        });
    }
    Ok(out)
}

/// Checkpoint paths of the three models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkpoints {
    pub ate: PathBuf,
    pub towe: PathBuf,
    pub aopsc: PathBuf,
}

/// Loads the three checkpoints and writes the prediction file. With
/// `expected` set, the aspect-conditioned checkpoints must have been
/// trained with that variant; otherwise they only have to agree.
pub fn predict(
    checkpoints: &Checkpoints,
    dataset: &Path,
    expected: Option<Variant>,
    out: &Path,
) -> Result<Vec<SentencePrediction>, HarnessError> {
    let bundle = match expected {
        Some(v) => PipelineBundle::load(&checkpoints.ate, &checkpoints.towe, &checkpoints.aopsc, v, v)?,
        None => {
            let towe = TaskModel::load(&checkpoints.towe)?;
            let variant = towe.variant().ok_or_else(|| {
                HarnessError::Config(format!("{} is not an opinion extraction checkpoint", checkpoints.towe.display()))
            })?;
            PipelineBundle::new(
                TaskModel::load_expecting(&checkpoints.ate, ModelTask::Ate, None)?,
                towe,
                TaskModel::load_expecting(&checkpoints.aopsc, ModelTask::Aopsc, Some(variant))?,
            )?
        }
    };
    let split = load_split(dataset, SplitName::Test)?;
    let predictions = predict_split(&bundle, &split)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    write_predictions(&predictions, out)?;
    Ok(predictions)
}

/// ASOTE, OPE and ATE scores of a prediction file's contents.
pub fn score_predictions(gold: &DatasetSplit, predictions: &[SentencePrediction]) -> Result<Vec<MetricReport>, HarnessError> {
    let gold_t = gold_triplets(gold);
    let pred_t = triplets_by_id(predictions);
    Ok(vec![
        score_asote(&gold_t, &pred_t)?,
        score_ope(&gold_t, &pred_t)?,
        score_ate(&gold_aspects(gold), &aspects_by_id(predictions))?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u32,
    pub dir: PathBuf,
    pub reports: Vec<MetricReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dir: PathBuf,
    pub seeds: Vec<SeedReport>,
    pub aggregate: Vec<MetricReport>,
}

/// Seeds of the default five-run protocol.
pub const DEFAULT_SEEDS: [u32; 5] = [0, 1, 2, 3, 4];

/// Trains the three models per seed under `<root>/<hash>/seed-<n>/`,
/// scores the test split, and averages each selected metric over seeds.
/// An empty `tasks` selects all five.
pub fn run_experiment(
    template: &TrainConfig,
    seeds: &[u32],
    tasks: &[EvalTask],
    root: &Path,
) -> Result<ExperimentReport, HarnessError> {
    if seeds.is_empty() {
        return Err(HarnessError::Config("run-experiment needs at least one seed".into()));
    }
    let selected = |t: EvalTask| tasks.is_empty() || tasks.contains(&t);
    let test = load_split(&template.data.test, SplitName::Test)?;
    let mut seed_reports = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let mut config = template.clone();
        config.seed = seed;
        config.early_stop_metric = None;
        let dir = config.run_dir(root);
        std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
        let mut checkpoints = BTreeMap::new();
        for task in ModelTask::ALL {
            config.task = task;
            std::fs::write(dir.join(format!("{task}.toml")), config.render()).map_err(|e| HarnessError::io(&dir, e))?;
            let outcome = train(&config, &dir)?;
            info!("seed {seed} {task}: best dev {:.4} at epoch {}", outcome.best_dev, outcome.best_epoch);
            checkpoints.insert(task, outcome.checkpoint);
        }
        let paths = Checkpoints {
            ate: checkpoints[&ModelTask::Ate].clone(),
            towe: checkpoints[&ModelTask::Towe].clone(),
            aopsc: checkpoints[&ModelTask::Aopsc].clone(),
        };
        let predictions = predict(&paths, &template.data.test, Some(template.variant), &dir.join("predictions.jsonl"))?;
        let mut reports = score_predictions(&test, &predictions)?;
        let towe = TaskModel::load(&paths.towe)?;
        reports.push(score_towe(&gold_opinions(&test), &predict_opinions(&towe, &test)?)?);
        let aopsc = TaskModel::load(&paths.aopsc)?;
        reports.push(score_aopsc(&gold_pairs(&test), &predict_pairs(&aopsc, &test)?)?);
        reports.retain(|r| selected(r.task));
        write_json(&dir.join("report.json"), &reports)?;
        seed_reports.push(SeedReport { seed, dir, reports });
    }
    let mut aggregate = Vec::new();
    for (index, first) in seed_reports[0].reports.iter().enumerate() {
        let runs: Vec<MetricReport> = seed_reports.iter().map(|s| s.reports[index].clone()).collect();
        debug_assert!(runs.iter().all(|r| r.task == first.task));
        aggregate.push(aggregate_runs(&runs)?);
    }
    let dir = root.join(template.experiment_hash());
    let report = ExperimentReport {
        dir: dir.clone(),
        seeds: seed_reports,
        aggregate,
    };
    write_json(&dir.join("aggregate.json"), &report)?;
    Ok(report)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
}

/// Statistics table of one ASOTE-JSON split.
pub fn stats_command(dataset: &Path) -> Result<StatsTable, HarnessError> {
    Ok(compute_statistics(&load_split(dataset, SplitName::Train)?))
}
