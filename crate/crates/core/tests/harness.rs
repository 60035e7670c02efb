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

mod common;

use std::path::Path;

use asote_core::corpus::{load_split, SplitName};
use asote_core::encoding::Variant;
use asote_core::eval::{read_predictions, EvalTask};
use asote_core::harness::{
    fit, predict, run_experiment, stats_command, train, Checkpoints, DataPaths, EpochRecord, HarnessError,
    TrainConfig,
};
use asote_core::model::{ModelTask, TaskModel};
use common::fixture;

fn config(task: ModelTask, seed: u32) -> TrainConfig {
    let path = fixture("ten_sentences.jsonl");
    let mut c = TrainConfig::new(
        task,
        DataPaths {
            train: path.clone(),
            dev: path.clone(),
            test: path,
        },
    );
    c.seed = seed;
    c.batch_size = 4;
    c.learning_rate = 1e-3;
    c.max_epochs = 3;
    c.patience = 2;
    c.dropout = 0.1;
    c
}

fn split() -> asote_core::corpus::DatasetSplit {
    load_split(&fixture("ten_sentences.jsonl"), SplitName::Train).unwrap()
}

fn read_log(path: &Path) -> Vec<EpochRecord> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn same_seed_gives_identical_logs() {
    let s = split();
    for task in ModelTask::ALL {
        let a = fit(&config(task, 7), &s, &s).unwrap();
        let b = fit(&config(task, 7), &s, &s).unwrap();
        let bits = |log: &[EpochRecord]| log.iter().map(|r| r.train_loss.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.log), bits(&b.log), "{task}");
        assert_eq!(a.log, b.log);
    }
}

#[test]
fn best_epoch_carries_the_best_dev_metric() {
    let s = split();
    let mut c = config(ModelTask::Towe, 2);
    c.max_epochs = 5;
    c.learning_rate = 3e-3;
    let fitted = fit(&c, &s, &s).unwrap();
    let max = fitted.log.iter().map(|r| r.dev_metric).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(fitted.best_dev, max);
    assert_eq!(fitted.log[fitted.best_epoch - 1].dev_metric, max);
    let again = asote_core::harness::task_report(&fitted.model, &s).unwrap();
    assert!((again.f1 - max).abs() < 1e-12);
    for pair in fitted.log.windows(2) {
        assert!(pair[1].best_dev >= pair[0].best_dev);
    }
}

#[test]
fn training_writes_checkpoint_and_log() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(ModelTask::Aopsc, 1);
    let outcome = train(&c, dir.path()).unwrap();
    assert_eq!(outcome.checkpoint, dir.path().join("aopsc.safetensors"));
    let log = read_log(&outcome.log);
    assert_eq!(log.len(), outcome.epochs_run);
    let model = TaskModel::load(&outcome.checkpoint).unwrap();
    assert_eq!(model.task(), ModelTask::Aopsc);
    assert_eq!(model.variant(), Some(Variant::Pbf));
    let report = asote_core::harness::task_report(&model, &split()).unwrap();
    assert!((report.f1 - outcome.best_dev).abs() < 1e-12);
}

#[test]
fn exploding_learning_rate_aborts() {
    let s = split();
    let mut c = config(ModelTask::Ate, 0);
    c.learning_rate = 1e30;
    c.max_epochs = 20;
    c.patience = 20;
    match fit(&c, &s, &s) {
        Err(e @ HarnessError::NonFinite { .. }) => assert_eq!(e.category(), "training"),
        Err(other) => panic!("unexpected error {other}"),
        Ok(f) => panic!("training survived with best dev {}", f.best_dev),
    }
}

#[test]
fn invalid_configs_are_config_errors() {
    let s = split();
    let mut c = config(ModelTask::Ate, 0);
    c.batch_size = 0;
    let err = fit(&c, &s, &s).err().unwrap();
    assert_eq!(err.category(), "config");
    let mut c = config(ModelTask::Towe, 0);
    c.data.train = fixture("missing.jsonl");
    let err = train(&c, tempfile::tempdir().unwrap().path()).err().unwrap();
    assert_eq!(err.category(), "data");
}

#[test]
fn one_seed_experiment_matches_a_direct_run() {
    let root = tempfile::tempdir().unwrap();
    let template = config(ModelTask::Ate, 0);
    let report = run_experiment(&template, &[3], &[EvalTask::Asote, EvalTask::Ate], root.path()).unwrap();
    assert_eq!(report.seeds.len(), 1);
    let seed = &report.seeds[0];
    assert_eq!(report.aggregate, seed.reports);
    assert_eq!(
        seed.reports.iter().map(|r| r.task).collect::<Vec<_>>(),
        [EvalTask::Asote, EvalTask::Ate]
    );
    assert!(report.dir.join("aggregate.json").is_file());

    // Retraining the same configuration elsewhere reproduces the checkpoint.
    let mut direct = template.clone();
    direct.seed = 3;
    direct.task = ModelTask::Ate;
    let other = tempfile::tempdir().unwrap();
    train(&direct, other.path()).unwrap();
    let a = TaskModel::load(&other.path().join("ate.safetensors")).unwrap();
    let b = TaskModel::load(&seed.dir.join("ate.safetensors")).unwrap();
    assert_eq!(a.params().num_parameters(), b.params().num_parameters());
    for ((na, va), (nb, vb)) in a.params().iter().zip(b.params().iter()) {
        assert_eq!(na, nb);
        let x: Vec<f64> = va.as_tensor().flatten_all().unwrap().to_vec1().unwrap();
        let y: Vec<f64> = vb.as_tensor().flatten_all().unwrap().to_vec1().unwrap();
        assert!(x == y, "{na} differs");
    }
    assert_eq!(
        std::fs::read(other.path().join("ate-log.jsonl")).unwrap(),
        std::fs::read(seed.dir.join("ate-log.jsonl")).unwrap()
    );

    // Predictions keep ids and order.
    let predictions = read_predictions(&seed.dir.join("predictions.jsonl"), &split()).unwrap();
    let ids: Vec<&str> = predictions.iter().map(|p| p.id.as_str()).collect();
    let gold_split = split();
    let gold: Vec<&str> = gold_split.sentences.iter().map(|s| s.id()).collect();
    assert_eq!(ids, gold);

    // An empty dataset gives an empty prediction file.
    let empty = root.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let checkpoints = Checkpoints {
        ate: seed.dir.join("ate.safetensors"),
        towe: seed.dir.join("towe.safetensors"),
        aopsc: seed.dir.join("aopsc.safetensors"),
    };
    let out = root.path().join("empty-pred.jsonl");
    assert!(predict(&checkpoints, &empty, None, &out).unwrap().is_empty());
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "");
    let err = predict(&checkpoints, &empty, Some(Variant::M2), &out).err().unwrap();
    assert_eq!(err.category(), "checkpoint");
}

#[test]
fn two_seed_aggregate_lies_between_runs() {
    let root = tempfile::tempdir().unwrap();
    let mut template = config(ModelTask::Ate, 0);
    template.max_epochs = 2;
    let report = run_experiment(&template, &[0, 1], &[], root.path()).unwrap();
    assert_eq!(report.aggregate.len(), 5);
    for (index, agg) in report.aggregate.iter().enumerate() {
        let values: Vec<f64> = report.seeds.iter().map(|s| s.reports[index].f1).collect();
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= agg.f1 + 1e-12 && agg.f1 <= hi + 1e-12, "{:?}", agg.task);
        assert_eq!(agg.runs, 2);
    }
    assert_ne!(report.seeds[0].dir, report.seeds[1].dir);
    assert_eq!(report.seeds[0].dir.parent(), report.seeds[1].dir.parent());
}

#[test]
fn stats_of_an_empty_split_are_zero() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    let table = stats_command(&empty).unwrap();
    assert!(table.cells().iter().all(|c| c == "0"), "{:?}", table.cells());
    let full = stats_command(&fixture("ten_sentences.jsonl")).unwrap();
    assert_eq!(full.cells()[0], "10");
}
