//! Commands behind the `fednam` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use fednam::data::DatasetKind;
use fednam::data::Samples;
use fednam::federation::{make_clients, round_logs_csv};
use fednam::interpret::{export_reports, global_interpret, interpret_clients, InterpretReport, ReportSet};
use fednam::nam::NamModel;
use fednam::pipeline::{self, benchmark_csv, trials_csv, RunConfig};
use fednam::Error;

#[derive(Debug, Parser)]
#[command(name = "fednam", version, about = "Federated neural additive models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a federated NAM and write the model, logs, metrics and reports.
    Train(Common),
    /// Recompute contribution and shape reports from a saved model.
    Explain {
        #[command(flatten)]
        common: Common,
        /// Global model JSON written by `train`.
        #[arg(long)]
        model: PathBuf,
    },
    /// Grid-search hyperparameters; writes trials.csv and best.json.
    Tune(Common),
    /// Compare against a federated plain MLP; writes benchmark.csv.
    Benchmark(Common),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for clients or grid trials.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_parser = ["heart", "wine", "iris"])]
    pub dataset: Option<String>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub target_col: Option<String>,
    /// Binary decision threshold.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Also write shapes.svg.
    #[arg(long)]
    pub svg: bool,
}

/// A failure with the process exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.error.fmt(f)
    }
}

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_TRAINING: i32 = 3;

type CliResult<T> = std::result::Result<T, CliError>;

fn at(code: i32) -> impl Fn(Error) -> CliError {
    move |error| CliError { code, error }
}

/// Training-stage errors exit 3 unless they are really configuration
/// problems.
fn training(error: Error) -> CliError {
    let code = match error {
        Error::InvalidConfig(_) | Error::ArchitectureMismatch(_) => EXIT_CONFIG,
        _ => EXIT_TRAINING,
    };
    CliError { code, error }
}

/// Merges the config file (if any) with command-line overrides.
pub fn resolve_config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| at(EXIT_CONFIG)(Error::io(path, e)))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| at(EXIT_CONFIG)(Error::InvalidConfig(format!("{}: {e}", path.display()))))?
        }
        None => {
            let kind = common.dataset.as_deref().ok_or_else(|| {
                at(EXIT_CONFIG)(Error::InvalidConfig("either --config or --dataset is required".into()))
            })?;
            RunConfig::new(kind.parse().map_err(at(EXIT_CONFIG))?)
        }
    };
    if let Some(d) = &common.dataset {
        cfg.dataset = d.parse::<DatasetKind>().map_err(at(EXIT_CONFIG))?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out_dir = o.clone();
    }
    if let Some(c) = &common.csv {
        cfg.csv = Some(c.clone());
    }
    if let Some(t) = &common.target_col {
        cfg.target_col = Some(t.clone());
    }
    if let Some(t) = common.threshold {
        cfg.training.threshold = t;
    }
    cfg.svg |= common.svg;
    cfg.validate().map_err(at(EXIT_CONFIG))?;
    Ok(cfg)
}

fn load_data(cfg: &RunConfig) -> CliResult<fednam::data::Dataset> {
    pipeline::load_dataset(cfg).map_err(at(EXIT_DATA))
}

/// Writes every file only after all of them have been rendered.
fn write_all(dir: &Path, files: &[(String, String)]) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| at(EXIT_DATA)(Error::io(dir, e)))?;
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| at(EXIT_DATA)(Error::io(&path, e)))?;
    }
    Ok(())
}

fn export(
    cfg: &RunConfig,
    ds: &fednam::data::Dataset,
    report: &InterpretReport,
    metrics: Option<&fednam::metrics::Metrics>,
) -> CliResult<()> {
    let ranges = ds.train.ranges();
    export_reports(
        &ReportSet {
            feature_names: &ds.feature_names,
            interpret: Some(report),
            grid: Some((&ranges, &ds.scaler)),
            attributions: None,
            metrics,
            svg: cfg.svg,
        },
        &cfg.out_dir,
    )
    .map_err(at(EXIT_DATA))?;
    Ok(())
}

pub fn cmd_train(common: &Common) -> CliResult<()> {
    let cfg = resolve_config(common)?;
    let ds = load_data(&cfg)?;
    let out = pipeline::train_nam(&cfg, &ds, common.jobs).map_err(training)?;
    let mut files = vec![
        ("config.json".to_string(), cfg.to_json().map_err(at(EXIT_CONFIG))?),
        ("model.json".to_string(), out.run.global.to_json().map_err(training)?),
        ("rounds.csv".to_string(), round_logs_csv(&out.run.logs)),
    ];
    for c in &out.run.clients {
        files.push((
            format!("client_{}.json", c.client_id + 1),
            c.model.to_json().map_err(training)?,
        ));
    }
    write_all(&cfg.out_dir, &files)?;
    export(&cfg, &ds, &out.report, Some(&out.test))?;
    log::info!("test accuracy {:.4}, auc {:.4}", out.test.accuracy, out.test.auc);
    println!("accuracy,{:?}\nauc,{:?}", out.test.accuracy, out.test.auc);
    Ok(())
}

pub fn cmd_explain(common: &Common, model_path: &Path) -> CliResult<()> {
    let cfg = resolve_config(common)?;
    let global = NamModel::load(model_path).map_err(at(EXIT_CONFIG))?;
    let mut client_models = Vec::new();
    let dir = model_path.parent().unwrap_or(Path::new("."));
    for i in 1..=cfg.federation.num_clients {
        let p = dir.join(format!("client_{i}.json"));
        if !p.exists() {
            break;
        }
        client_models.push(NamModel::load(&p).map_err(at(EXIT_CONFIG))?);
    }
    let ds = load_data(&cfg)?;
    if global.feature_names() != ds.feature_names.as_slice() || global.task() != ds.task {
        return Err(at(EXIT_CONFIG)(Error::Schema(format!(
            "model {} was trained on features {:?} ({:?}); the dataset has {:?} ({:?})",
            model_path.display(),
            global.feature_names(),
            global.task(),
            ds.feature_names,
            ds.task
        ))));
    }
    let average = cfg.federation.aggregation.shape_average();
    let report = if client_models.len() == cfg.federation.num_clients {
        let mut clients =
            make_clients(&global, &ds.train, &cfg.federation(), &cfg.split, &cfg.training).map_err(training)?;
        for (c, m) in clients.iter_mut().zip(client_models) {
            c.model = m;
        }
        interpret_clients(&clients, &global, &ds.train, average)
    } else {
        let none: [(&NamModel, &Samples); 0] = [];
        global_interpret(&none, &global, &ds.train, false)
    }
    .map_err(training)?;
    export(&cfg, &ds, &report, None)
}

pub fn cmd_tune(common: &Common) -> CliResult<()> {
    let cfg = resolve_config(common)?;
    let ds = load_data(&cfg)?;
    let (best, trials) = pipeline::tune(&cfg, &ds, common.jobs).map_err(training)?;
    let best_cfg = cfg.with_hyperparams(&best);
    write_all(
        &cfg.out_dir,
        &[
            (
                "trials.csv".to_string(),
                trials_csv(&trials, cfg.federation.num_clients),
            ),
            ("best.json".to_string(), best_cfg.to_json().map_err(at(EXIT_CONFIG))?),
        ],
    )?;
    println!(
        "best: dropout {} lr {} layers {} batch {}",
        best.dropout, best.learning_rate, best.hidden_layers, best.batch_size
    );
    Ok(())
}

pub fn cmd_benchmark(common: &Common) -> CliResult<()> {
    let cfg = resolve_config(common)?;
    let ds = load_data(&cfg)?;
    let nam = pipeline::train_nam(&cfg, &ds, common.jobs).map_err(training)?;
    let dnn = pipeline::train_baseline(&cfg, &ds, common.jobs).map_err(training)?;
    write_all(
        &cfg.out_dir,
        &[
            (
                "benchmark.csv".to_string(),
                benchmark_csv(&nam.test, &dnn.test, &dnn.attributions),
            ),
            (
                "attributions.csv".to_string(),
                fednam::interpret::attributions_csv(&dnn.attributions).map_err(training)?,
            ),
        ],
    )?;
    println!(
        "fednam accuracy {:?} auc {:?}\ndnn accuracy {:?} auc {:?}",
        nam.test.accuracy, nam.test.auc, dnn.test.accuracy, dnn.test.auc
    );
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Train(c) => cmd_train(c),
        Command::Explain { common, model } => cmd_explain(common, model),
        Command::Tune(c) => cmd_tune(c),
        Command::Benchmark(c) => cmd_benchmark(c),
    }
}
