//! End-to-end runs: load and preprocess a dataset, train federations, and
//! compute the reports each front end needs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::control::{grid_search, HyperGrid, HyperParams, TrialOutcome, TrialResult};
use crate::data::{
    load_dataset_csv, parse_csv, preprocess, Dataset, DatasetKind, PreprocessOptions, RawTable, Samples, SplitSpec,
};
use crate::federation::{run_federation, FederationConfig, FederationRun, TrainConfig};
use crate::interpret::{
    input_x_gradient, interpret_clients, AttributionReport, BaselineConfig, BaselineDnn, InterpretReport,
};
use crate::metrics::Metrics;
use crate::model::{evaluate, Classifier};
use crate::nam::{NamConfig, NamModel};
use crate::{Error, Result};

/// Complete description of a run; what config files deserialize into.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetKind,
    /// Defaults to the bundled file for `dataset`.
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub target_col: Option<String>,
    #[serde(default)]
    pub iris_two_class: bool,
    #[serde(default)]
    pub split: SplitSpec,
    #[serde(default)]
    pub federation: FederationConfig,
    #[serde(default)]
    pub model: NamConfig,
    #[serde(default)]
    pub training: TrainConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub grid: HyperGrid,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Also write shapes.svg.
    #[serde(default)]
    pub svg: bool,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn new(dataset: DatasetKind) -> Self {
        Self {
            dataset,
            csv: None,
            target_col: None,
            iris_two_class: false,
            split: SplitSpec::default(),
            federation: FederationConfig::default(),
            model: NamConfig::default(),
            training: TrainConfig::default(),
            baseline: BaselineConfig::default(),
            grid: HyperGrid::default(),
            out_dir: default_out_dir(),
            seed: 0,
            svg: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn validate(&self) -> Result<()> {
        self.split.validate()?;
        self.federation.validate()?;
        self.model.validate()?;
        self.training.validate()?;
        self.grid.validate()?;
        if self.baseline.hidden.contains(&0) || !(0.0..1.0).contains(&self.baseline.dropout) {
            return Err(Error::InvalidConfig(
                "baseline layers need at least one unit and dropout in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Federation settings with the run seed applied.
    pub fn federation(&self) -> FederationConfig {
        FederationConfig {
            seed: self.seed,
            ..self.federation.clone()
        }
    }

    pub fn csv_path(&self) -> PathBuf {
        self.csv.clone().unwrap_or_else(|| default_csv_path(self.dataset))
    }

    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            target_col: self.target_col.clone(),
            iris_two_class: self.iris_two_class,
        }
    }

    /// This config with one grid point's hyperparameters substituted.
    pub fn with_hyperparams(&self, p: &HyperParams) -> Self {
        let mut cfg = self.clone();
        cfg.model.dropout = p.dropout;
        cfg.model.hidden_layers = p.hidden_layers;
        cfg.training.learning_rate = p.learning_rate;
        cfg.training.batch_size = p.batch_size;
        cfg
    }
}

pub fn default_csv_file(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::Heart => "heart.csv",
        DatasetKind::Wine => "winequality-red.csv",
        DatasetKind::Iris => "iris.csv",
    }
}

/// `data/<file>` under the working directory if present, else the copy in
/// this source tree.
pub fn default_csv_path(kind: DatasetKind) -> PathBuf {
    let local = Path::new("data").join(default_csv_file(kind));
    if local.exists() {
        return local;
    }
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(default_csv_file(kind))
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let opts = cfg.preprocess_options();
    let raw = load_dataset_csv(&cfg.csv_path(), cfg.dataset, &opts)?;
    preprocess(&raw, cfg.dataset, &cfg.split, &opts, cfg.seed)
}

/// Same as [`load_dataset`] for CSV text already in memory.
pub fn dataset_from_text(cfg: &RunConfig, name: &str, text: &str) -> Result<Dataset> {
    let opts = cfg.preprocess_options();
    let mut categorical: Vec<&str> = cfg.dataset.categorical_columns().to_vec();
    if let Some(t) = &opts.target_col {
        categorical.push(t);
    }
    let raw: RawTable = parse_csv(Path::new(name), text, &categorical)?;
    preprocess(&raw, cfg.dataset, &cfg.split, &opts, cfg.seed)
}

pub fn init_nam(cfg: &RunConfig, ds: &Dataset) -> Result<NamModel> {
    NamModel::new(ds.feature_names.clone(), ds.task, &cfg.model, cfg.seed)
}

pub fn init_baseline(cfg: &RunConfig, ds: &Dataset) -> Result<BaselineDnn> {
    BaselineDnn::new(ds.feature_names.len(), ds.task, &cfg.baseline, cfg.seed)
}

pub fn test_metrics<M: Classifier>(model: &M, ds: &Dataset, threshold: f64) -> Result<Metrics> {
    Ok(evaluate(model, &ds.test, threshold)?.metrics)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub run: FederationRun<NamModel>,
    pub test: Metrics,
    pub report: InterpretReport,
}

/// Federated NAM training followed by test metrics and the
/// interpretability report.
pub fn train_nam(cfg: &RunConfig, ds: &Dataset, jobs: usize) -> Result<TrainOutcome> {
    let init = init_nam(cfg, ds)?;
    let run = run_federation(&init, &ds.train, &cfg.federation(), &cfg.split, &cfg.training, jobs)?;
    let test = test_metrics(&run.global, ds, cfg.training.threshold)?;
    let report = interpret_clients(
        &run.clients,
        &run.global,
        &ds.train,
        cfg.federation.aggregation.shape_average(),
    )?;
    Ok(TrainOutcome { run, test, report })
}

#[derive(Debug, Clone)]
pub struct BaselineOutcome {
    pub run: FederationRun<BaselineDnn>,
    pub test: Metrics,
    pub attributions: AttributionReport,
}

/// Federated baseline MLP on the same partition and seed, plus its
/// input-times-gradient attributions on the test rows.
pub fn train_baseline(cfg: &RunConfig, ds: &Dataset, jobs: usize) -> Result<BaselineOutcome> {
    let init = init_baseline(cfg, ds)?;
    let run = run_federation(&init, &ds.train, &cfg.federation(), &cfg.split, &cfg.training, jobs)?;
    let test = test_metrics(&run.global, ds, cfg.training.threshold)?;
    let attributions = input_x_gradient(&run.global, &ds.test, &ds.feature_names)?;
    Ok(BaselineOutcome {
        run,
        test,
        attributions,
    })
}

/// Runs one federation per grid point. Every trial reuses the run seed, so
/// trials share data splits, partitions and random streams and differ only
/// in their hyperparameters. Per-client validation accuracy is the global
/// model's accuracy on each client's validation rows.
pub fn tune(cfg: &RunConfig, ds: &Dataset, jobs: usize) -> Result<(HyperParams, Vec<TrialResult>)> {
    grid_search(&cfg.grid, jobs, |_, p| {
        let trial = cfg.with_hyperparams(p);
        trial.validate()?;
        let init = init_nam(&trial, ds)?;
        let run = run_federation(&init, &ds.train, &trial.federation(), &trial.split, &trial.training, 1)?;
        let threshold = trial.training.threshold;
        let client_val_acc = run
            .clients
            .iter()
            .map(|c| {
                let data: &Samples = if c.val.is_empty() { &c.shard } else { &c.val };
                Ok(evaluate(&run.global, data, threshold)?.metrics.accuracy)
            })
            .collect::<Result<Vec<f64>>>()?;
        let test = test_metrics(&run.global, ds, threshold)?;
        Ok(TrialOutcome {
            client_val_acc,
            global_val_auc: run.logs.last().map_or(f64::NAN, |l| l.global_val_auc),
            global_test_acc: test.accuracy,
            global_test_auc: test.auc,
        })
    })
}

/// trials.csv with one `client{i}_val_acc` column per client.
pub fn trials_csv(trials: &[TrialResult], num_clients: usize) -> String {
    let mut header = vec!["trial_id", "dropout", "lr", "layers", "batch"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    header.extend((1..=num_clients).map(|i| format!("client{i}_val_acc")));
    header.extend(["mean_val_acc", "global_test_acc", "global_test_auc"].map(String::from));
    let mut out = header.join(",") + "\n";
    for t in trials {
        let p = &t.params;
        let mut row = vec![
            t.trial_id.to_string(),
            format!("{:?}", p.dropout),
            format!("{:?}", p.learning_rate),
            p.hidden_layers.to_string(),
            p.batch_size.to_string(),
        ];
        match &t.outcome {
            Ok(o) => {
                row.extend(o.client_val_acc.iter().map(|a| format!("{a:?}")));
                row.extend([o.mean_val_acc(), o.global_test_acc, o.global_test_auc].map(|v| format!("{v:?}")));
            }
            Err(_) => row.extend(std::iter::repeat("NaN".to_string()).take(num_clients + 3)),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// benchmark.csv: one row per model, then one row per feature attribution.
pub fn benchmark_csv(nam: &Metrics, dnn: &Metrics, attributions: &AttributionReport) -> String {
    let mut out = String::from("kind,name,accuracy,auc,avg_attribution\n");
    for (name, m) in [("fednam", nam), ("dnn", dnn)] {
        out.push_str(&format!("model,{name},{:?},{:?},\n", m.accuracy, m.auc));
    }
    for (f, v) in attributions.feature_names.iter().zip(&attributions.values) {
        out.push_str(&format!("attribution,{},,,{v:?}\n", csv_field(f)));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(RunConfig::from_json(r#"{"dataset": "iris", "bogus": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"dataset": "iris", "federation": {"rounds": 0}}"#).is_err());
        let cfg = RunConfig::from_json(r#"{"dataset": "iris", "seed": 7}"#).unwrap();
        assert_eq!(cfg.federation().seed, 7);
    }

    #[test]
    fn config_round_trips() {
        let cfg = RunConfig::new(DatasetKind::Wine);
        assert_eq!(RunConfig::from_json(&cfg.to_json().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn bundled_iris_loads() {
        let ds = load_dataset(&RunConfig::new(DatasetKind::Iris)).unwrap();
        assert_eq!(ds.train.len(), 120);
        assert_eq!(ds.test.len(), 30);
    }
}
