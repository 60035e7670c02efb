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

//! `asote`: train the three models, run the pipeline, score predictions and
//! inspect corpora.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use asote_core::corpus::{assemble_asote_files, load_split, write_split, SplitName};
use asote_core::encoding::Variant;
use asote_core::eval::{read_predictions, render_table, score_aopsc, score_towe, EvalTask, MetricReport};
use asote_core::harness::{
    gold_opinions, gold_pairs, predict, predict_opinions, predict_pairs, run_experiment, score_predictions,
    stats_command, train, Checkpoints, DataPaths, HarnessError, TrainConfig, DEFAULT_SEEDS,
};
use asote_core::model::{ModelTask, TaskModel};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "asote", version, about = "Aspect-sentiment-opinion triplet extraction")]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; writes `<task>.safetensors` and `<task>-log.jsonl`.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory [default: $ASOTE_HOME/<hash>/seed-<n>]
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, env = "ASOTE_HOME", default_value = "runs", hide_env_values = true)]
        home: PathBuf,
    },
    /// Run the three-stage pipeline over a dataset and write predictions.
    Predict {
        #[arg(long)]
        ate: PathBuf,
        #[arg(long)]
        towe: PathBuf,
        #[arg(long)]
        aopsc: PathBuf,
        /// ASOTE-JSON lines to predict on.
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Input variant both aspect-conditioned checkpoints must have.
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Score a prediction file against gold (ASOTE, OPE, ATE); TOWE and
    /// AOPSC need their checkpoints.
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Opinion extraction checkpoint, scored on gold aspects.
        #[arg(long)]
        towe: Option<PathBuf>,
        /// Pair sentiment checkpoint, scored on gold pairs.
        #[arg(long)]
        aopsc: Option<PathBuf>,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Corpus statistics of one split.
    Stats {
        dataset: PathBuf,
        #[arg(long, default_value_t = '\t')]
        delimiter: char,
        #[arg(long)]
        json: bool,
    },
    /// Join aspect, opinion and pair-sentiment files into ASOTE-JSON lines.
    Assemble {
        #[arg(long)]
        aspects: PathBuf,
        #[arg(long)]
        opinions: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, default_value = "train")]
        split: SplitName,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train all three models per seed, predict, and average test metrics.
    RunExperiment {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SEEDS)]
        seeds: Vec<u32>,
        /// Metrics to report [default: all]
        #[arg(long, value_delimiter = ',')]
        tasks: Vec<EvalTask>,
        #[arg(long, env = "ASOTE_HOME", default_value = "runs", hide_env_values = true)]
        home: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Training configuration: a TOML file plus one flag per key.
#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// ate, towe or aopsc.
    #[arg(long)]
    task: Option<String>,
    #[arg(long)]
    variant: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `tiny` or `pretrained:<dir>`.
    #[arg(long)]
    encoder: Option<String>,
    #[arg(long)]
    early_stop_metric: Option<String>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    dev: Option<String>,
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    #[arg(long)]
    learning_rate: Option<String>,
    #[arg(long)]
    dropout: Option<String>,
    #[arg(long)]
    patience: Option<String>,
    #[arg(long)]
    max_epochs: Option<String>,
}

impl ConfigArgs {
    /// Flag values keyed by config key, in an order where each intermediate
    /// config stays valid.
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        [
            ("task", &self.task),
            ("variant", &self.variant),
            ("seed", &self.seed),
            ("encoder", &self.encoder),
            ("early_stop_metric", &self.early_stop_metric),
            ("data.train", &self.train),
            ("data.dev", &self.dev),
            ("data.test", &self.test),
            ("batch_size", &self.batch_size),
            ("learning_rate", &self.learning_rate),
            ("dropout", &self.dropout),
            ("patience", &self.patience),
            ("max_epochs", &self.max_epochs),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
        .collect()
    }

    fn resolve(&self, need_task: bool) -> Result<TrainConfig, HarnessError> {
        let mut config = match &self.config {
            Some(path) => TrainConfig::load(path)?,
            None => {
                if need_task && self.task.is_none() {
                    return Err(HarnessError::Config("either --config or --task is required".into()));
                }
                let empty = DataPaths {
                    train: PathBuf::new(),
                    dev: PathBuf::new(),
                    test: PathBuf::new(),
                };
                TrainConfig::new(ModelTask::Ate, empty)
            }
        };
        for (key, value) in self.overrides() {
            config.set(key, value)?;
        }
        config.validate()?;
        Ok(config)
    }
}

/// Fails with a config error naming the first unset data path.
fn require_data(config: &TrainConfig, test: bool) -> Result<(), HarnessError> {
    let data = &config.data;
    let mut paths = vec![("train", &data.train), ("dev", &data.dev)];
    if test {
        paths.push(("test", &data.test));
    }
    match paths.into_iter().find(|(_, p)| p.as_os_str().is_empty()) {
        Some((name, _)) => Err(HarnessError::Config(format!("data.{name} is not set (use --{name} or --config)"))),
        None => Ok(()),
    }
}

fn load_task_model(path: &Path, task: ModelTask) -> Result<TaskModel, HarnessError> {
    let model = TaskModel::load(path)?;
    if model.task() != task {
        return Err(asote_core::model::ModelError::TaskMismatch {
            expected: task,
            found: model.task(),
        }
        .into());
    }
    Ok(model)
}

fn print_reports(reports: &[MetricReport], json: bool) {
    if json {
        println!("{}", serde_json::to_string_pretty(reports).expect("reports serialize"));
    } else {
        print!("{}", render_table(reports));
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Train { config, out, home } => {
            let config = config.resolve(true)?;
            require_data(&config, false)?;
            let dir = out.unwrap_or_else(|| config.run_dir(&home));
            let outcome = train(&config, &dir)?;
            println!("{}", serde_json::to_string_pretty(&outcome).expect("outcome serializes"));
        }
        Command::Predict {
            ate,
            towe,
            aopsc,
            dataset,
            out,
            variant,
        } => {
            let checkpoints = Checkpoints { ate, towe, aopsc };
            let predictions = predict(&checkpoints, &dataset, variant, &out)?;
            let triplets: usize = predictions.iter().map(|p| p.triplets.len()).sum();
            println!(
                "{} sentences, {triplets} triplets -> {}",
                predictions.len(),
                out.display()
            );
        }
        Command::Eval {
            gold,
            predictions,
            towe,
            aopsc,
            json,
        } => {
            let gold = load_split(&gold, SplitName::Test)?;
            let predictions = read_predictions(&predictions, &gold)?;
            let mut reports = score_predictions(&gold, &predictions)?;
            if let Some(path) = towe {
                let model = load_task_model(&path, ModelTask::Towe)?;
                reports.push(score_towe(&gold_opinions(&gold), &predict_opinions(&model, &gold)?)?);
            }
            if let Some(path) = aopsc {
                let model = load_task_model(&path, ModelTask::Aopsc)?;
                reports.push(score_aopsc(&gold_pairs(&gold), &predict_pairs(&model, &gold)?)?);
            }
            print_reports(&reports, json);
        }
        Command::Stats {
            dataset,
            delimiter,
            json,
        } => {
            let table = stats_command(&dataset)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&table).expect("table serializes"));
            } else {
                print!("{}", table.render(delimiter));
            }
        }
        Command::Assemble {
            aspects,
            opinions,
            pairs,
            split,
            out,
        } => {
            let (assembled, report) = assemble_asote_files(split, &aspects, &opinions, &pairs)?;
            write_split(&assembled, &out)?;
            let triplets: usize = assembled.sentences.iter().map(|s| s.triplets.len()).sum();
            println!(
                "{} sentences, {triplets} triplets -> {}",
                assembled.len(),
                out.display()
            );
            if !report.unlabeled_pairs.is_empty() {
                eprintln!("warning: {} opinion pairs without a sentiment label", report.unlabeled_pairs.len());
            }
            if report.conflict_pairs > 0 {
                eprintln!("warning: {} conflict pairs left out", report.conflict_pairs);
            }
            if report.duplicates_removed > 0 {
                eprintln!("warning: {} duplicates removed", report.duplicates_removed);
            }
        }
        Command::RunExperiment {
            config,
            seeds,
            tasks,
            home,
            json,
        } => {
            let template = config.resolve(false)?;
            require_data(&template, true)?;
            let report = run_experiment(&template, &seeds, &tasks, &home)?;
            print_reports(&report.aggregate, json);
            if !json {
                println!("artifacts: {}", report.dir.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error[usage] {first}");
            return ExitCode::from(2);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}] {message}", e.category());
            ExitCode::FAILURE
        }
    }
}
