//! Interpretability reports: sampled shape curves, per-owner contribution
//! rankings, and input-times-gradient attributions for a plain MLP
//! baseline.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{Samples, Scaler};
use crate::federation::{average_shape_functions, ClientState};
use crate::metrics::Metrics;
use crate::model::{add_into, Classifier};
use crate::nam::NamModel;
use crate::nn::{loss_and_grad, Activation, Gradients, Mlp, Mode, Parameters};
use crate::task::Task;
use crate::{Error, Result};

/// Points per sampled shape curve.
pub const CURVE_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Owner {
    /// 0-based client id; displayed 1-based.
    Client(usize),
    Global,
}

impl fmt::Display for Owner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Owner::Client(i) => write!(f, "client{}", i + 1),
            Owner::Global => f.write_str("global"),
        }
    }
}

/// A feature's effective shape sampled on a grid and centered.
///
/// `values[i] + offset` is the model's effective shape at `grid[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeCurve {
    pub feature_index: usize,
    pub class_index: usize,
    pub owner: Owner,
    /// Standardized feature units.
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub offset: f64,
}

/// Evenly spaced grid of [`CURVE_POINTS`] points over `[lo, hi]`. A
/// degenerate range gives a single point.
pub fn curve_grid(lo: f64, hi: f64) -> Vec<f64> {
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return vec![lo];
    }
    let step = (hi - lo) / (CURVE_POINTS - 1) as f64;
    (0..CURVE_POINTS)
        .map(|i| {
            if i == CURVE_POINTS - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Samples `output_weights[class, feature] * f_feature` over `range` and
/// subtracts the grid mean.
pub fn sample_shape_curve(
    model: &NamModel,
    feature: usize,
    class: usize,
    range: (f64, f64),
    owner: Owner,
) -> Result<ShapeCurve> {
    if feature >= model.num_features() {
        return Err(Error::shape("feature index bound", model.num_features(), feature));
    }
    if class >= model.num_outputs() {
        return Err(Error::TargetOutOfRange {
            target: class,
            classes: model.num_outputs(),
        });
    }
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(Error::InvalidConfig(format!("invalid feature range [{lo}, {hi}]")));
    }
    if hi == lo {
        log::warn!(
            "feature {:?} has a degenerate range; its curve is a single point",
            model.feature_names()[feature]
        );
    }
    let grid = curve_grid(lo, hi);
    let raw: Vec<f64> = grid.iter().map(|&x| model.effective_shape(class, feature, x)).collect();
    let offset = raw.iter().sum::<f64>() / raw.len() as f64;
    let values = raw.iter().map(|v| v - offset).collect();
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("shape curve"));
    }
    Ok(ShapeCurve {
        feature_index: feature,
        class_index: class,
        owner,
        grid,
        values,
        offset,
    })
}

/// Curves for every (feature, class) pair, feature-major.
pub fn sample_all_curves(model: &NamModel, ranges: &[(f64, f64)], owner: Owner) -> Result<Vec<ShapeCurve>> {
    if ranges.len() != model.num_features() {
        return Err(Error::shape("feature ranges", model.num_features(), ranges.len()));
    }
    let mut out = Vec::with_capacity(ranges.len() * model.num_outputs());
    for (k, &r) in ranges.iter().enumerate() {
        for c in 0..model.num_outputs() {
            out.push(sample_shape_curve(model, k, c, r, owner)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature_index: usize,
    pub name: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContributionReport {
    pub owner: Owner,
    /// Sorted by rank.
    pub scores: Vec<FeatureScore>,
}

impl ContributionReport {
    /// Feature names in rank order.
    pub fn ranking(&self) -> Vec<&str> {
        self.scores.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn rank_of(&self, name: &str) -> Option<usize> {
        self.scores.iter().find(|s| s.name == name).map(|s| s.rank)
    }

    pub fn score_of(&self, feature_index: usize) -> Option<f64> {
        self.scores
            .iter()
            .find(|s| s.feature_index == feature_index)
            .map(|s| s.score)
    }
}

/// Mean absolute effective-shape value per feature over `data`, with each
/// shape centered on its mean over the same rows (so the score ignores
/// constants that could equally sit in the bias). Multiclass scores average
/// over classes. Features are ranked by descending score, ties by index.
pub fn contribution_scores(model: &NamModel, data: &Samples, owner: Owner) -> Result<ContributionReport> {
    if data.is_empty() {
        return Err(Error::Empty("contribution data"));
    }
    if data.n_features() != model.num_features() {
        return Err(Error::shape(
            "contribution data width",
            model.num_features(),
            data.n_features(),
        ));
    }
    let n = data.len() as f64;
    let classes = model.num_outputs();
    let mut scores = Vec::with_capacity(model.num_features());
    for k in 0..model.num_features() {
        let f: Vec<f64> = data.rows().map(|(x, _)| model.feature_nets()[k].eval(x[k])).collect();
        let mean = f.iter().sum::<f64>() / n;
        // |w f - mean(w f)| = |w| |f - mean f|
        let spread = f.iter().map(|v| (v - mean).abs()).sum::<f64>() / n;
        let total: f64 = (0..classes).map(|c| model.output_weight(c, k).abs() * spread).sum();
        let score = total / classes as f64;
        if !score.is_finite() {
            return Err(Error::NonFinite("contribution score"));
        }
        scores.push(FeatureScore {
            feature_index: k,
            name: model.feature_names()[k].clone(),
            score,
            rank: 0,
        });
    }
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.feature_index.cmp(&b.feature_index)));
    for (i, s) in scores.iter_mut().enumerate() {
        s.rank = i + 1;
    }
    Ok(ContributionReport { owner, scores })
}

/// Client and global interpretability artifacts for one federated run.
#[derive(Debug, Clone, PartialEq)]
pub struct InterpretReport {
    pub client_contributions: Vec<ContributionReport>,
    pub global_contributions: ContributionReport,
    pub client_curves: Vec<ShapeCurve>,
    pub global_curves: Vec<ShapeCurve>,
}

impl InterpretReport {
    pub fn contributions(&self) -> impl Iterator<Item = &ContributionReport> {
        self.client_contributions
            .iter()
            .chain(std::iter::once(&self.global_contributions))
    }

    pub fn curves(&self) -> impl Iterator<Item = &ShapeCurve> {
        self.client_curves.iter().chain(&self.global_curves)
    }
}

/// Builds the full report. Curves share one grid per feature spanning the
/// training range. Global curves are the pointwise average of client curves
/// when `average_shapes` is set, otherwise they are sampled from `global`.
/// Global contributions use `global` on the whole training set; client
/// contributions use each client's model on the rows it owns.
pub fn global_interpret(
    clients: &[(&NamModel, &Samples)],
    global: &NamModel,
    train: &Samples,
    average_shapes: bool,
) -> Result<InterpretReport> {
    let ranges = train.ranges();
    let mut client_contributions = Vec::with_capacity(clients.len());
    let mut per_client_curves = Vec::with_capacity(clients.len());
    for (i, (model, data)) in clients.iter().enumerate() {
        client_contributions.push(contribution_scores(model, data, Owner::Client(i))?);
        per_client_curves.push(sample_all_curves(model, &ranges, Owner::Client(i))?);
    }
    let global_curves = if average_shapes && !clients.is_empty() {
        (0..per_client_curves[0].len())
            .map(|j| {
                let curves: Vec<&ShapeCurve> = per_client_curves.iter().map(|c| &c[j]).collect();
                average_shape_functions(&curves)
            })
            .collect::<Result<_>>()?
    } else {
        sample_all_curves(global, &ranges, Owner::Global)?
    };
    Ok(InterpretReport {
        client_contributions,
        global_contributions: contribution_scores(global, train, Owner::Global)?,
        client_curves: per_client_curves.into_iter().flatten().collect(),
        global_curves,
    })
}

/// [`global_interpret`] over finished client states; each client owns its
/// training and validation rows.
pub fn interpret_clients(
    clients: &[ClientState<NamModel>],
    global: &NamModel,
    train: &Samples,
    average_shapes: bool,
) -> Result<InterpretReport> {
    let owned: Vec<Samples> = clients
        .iter()
        .map(|c| Samples::concat([&c.shard, &c.val]))
        .collect::<Result<_>>()?;
    let pairs: Vec<(&NamModel, &Samples)> = clients.iter().zip(&owned).map(|(c, d)| (&c.model, d)).collect();
    global_interpret(&pairs, global, train, average_shapes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            dropout: 0.0,
        }
    }
}

/// A plain MLP over all features jointly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDnn {
    pub task: Task,
    pub mlp: Mlp,
}

impl BaselineDnn {
    pub fn new(num_features: usize, task: Task, config: &BaselineConfig, seed: u64) -> Result<Self> {
        if num_features == 0 {
            return Err(Error::InvalidConfig("baseline needs at least one feature".into()));
        }
        let mut dims = vec![num_features];
        dims.extend(&config.hidden);
        dims.push(task.outputs());
        let mut acts = vec![Activation::Relu; config.hidden.len()];
        acts.push(Activation::Identity);
        Ok(Self {
            task,
            mlp: Mlp::xavier(&dims, acts, config.dropout, seed)?,
        })
    }
}

impl Parameters for BaselineDnn {
    fn tensors(&self) -> Vec<&[f64]> {
        self.mlp.tensors()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.mlp.tensors_mut()
    }
}

impl Classifier for BaselineDnn {
    fn task(&self) -> Task {
        self.task
    }

    fn num_features(&self) -> usize {
        self.mlp.in_dim()
    }

    fn accumulate(&self, x: &[f64], label: usize, seed: u64, grads: &mut Gradients) -> Result<f64> {
        let (logits, trace) = self.mlp.forward(x, Mode::Train, seed)?;
        let (loss, dlogits) = loss_and_grad(&logits, label, self.task)?;
        add_into(grads, self.mlp.backward(&trace, &dlogits)?.into_gradients().0)?;
        Ok(loss)
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.mlp.infer(x)
    }

    fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        let (_, trace) = self.mlp.forward(x, Mode::Infer, 0)?;
        let mut seed_grad = vec![0.0; self.mlp.out_dim()];
        *seed_grad.get_mut(class).ok_or(Error::TargetOutOfRange {
            target: class,
            classes: self.mlp.out_dim(),
        })? = 1.0;
        Ok(self.mlp.backward(&trace, &seed_grad)?.input)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub feature_names: Vec<String>,
    pub values: Vec<f64>,
}

/// Mean over `data` of `x_k * d logit / d x_k`. Binary models use their
/// single logit; multiclass models use the logit of each row's true class.
pub fn input_x_gradient<M: Classifier>(
    model: &M,
    data: &Samples,
    feature_names: &[String],
) -> Result<AttributionReport> {
    if data.is_empty() {
        return Err(Error::Empty("attribution data"));
    }
    let k = model.num_features();
    let mut values = vec![0.0; k];
    for (x, y) in data.rows() {
        let class = match model.task() {
            Task::Binary => 0,
            Task::Multiclass { .. } => y,
        };
        let g = model.input_gradient(x, class)?;
        for ((acc, gi), xi) in values.iter_mut().zip(&g).zip(x) {
            *acc += gi * xi;
        }
    }
    let n = data.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("attribution"));
    }
    Ok(AttributionReport {
        feature_names: feature_names.to_vec(),
        values,
    })
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io {
        path: "<memory>".into(),
        source: e.into_error(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn contributions_csv<'a>(reports: impl IntoIterator<Item = &'a ContributionReport>) -> Result<String> {
    to_csv(
        &["owner", "feature", "score", "rank"],
        reports.into_iter().flat_map(|r| {
            r.scores
                .iter()
                .map(move |s| vec![r.owner.to_string(), s.name.clone(), num(s.score), s.rank.to_string()])
        }),
    )
}

pub fn shapes_csv<'a>(curves: impl IntoIterator<Item = &'a ShapeCurve>, feature_names: &[String]) -> Result<String> {
    to_csv(
        &["owner", "feature", "class", "x", "value"],
        curves.into_iter().flat_map(|c| {
            c.grid.iter().zip(&c.values).map(move |(x, v)| {
                vec![
                    c.owner.to_string(),
                    feature_names[c.feature_index].clone(),
                    c.class_index.to_string(),
                    num(*x),
                    num(*v),
                ]
            })
        }),
    )
}

/// Grid points in standardized and raw units, one row per (feature, point).
pub fn grid_csv(ranges: &[(f64, f64)], scaler: &Scaler, feature_names: &[String]) -> Result<String> {
    to_csv(
        &["feature", "x", "x_raw"],
        ranges.iter().enumerate().flat_map(|(k, &(lo, hi))| {
            curve_grid(lo, hi)
                .into_iter()
                .map(move |x| vec![feature_names[k].clone(), num(x), num(scaler.inverse(k, x))])
        }),
    )
}

pub fn attributions_csv(report: &AttributionReport) -> Result<String> {
    to_csv(
        &["feature", "avg_attribution"],
        report
            .feature_names
            .iter()
            .zip(&report.values)
            .map(|(n, v)| vec![n.clone(), num(*v)]),
    )
}

pub fn metrics_csv(metrics: &Metrics) -> Result<String> {
    to_csv(
        &["metric", "value"],
        [
            vec!["accuracy".to_string(), num(metrics.accuracy)],
            vec!["auc".to_string(), num(metrics.auc)],
        ],
    )
}

/// Small-multiples plot, one panel per (feature, class): client curves thin,
/// global curve thick.
pub fn shapes_svg<'a>(curves: impl IntoIterator<Item = &'a ShapeCurve>, feature_names: &[String]) -> String {
    use std::collections::BTreeMap;
    let mut panels: BTreeMap<(usize, usize), Vec<&ShapeCurve>> = BTreeMap::new();
    for c in curves {
        panels.entry((c.feature_index, c.class_index)).or_default().push(c);
    }
    let (pw, ph, cols) = (220.0, 160.0, 4usize);
    let rows = panels.len().div_ceil(cols).max(1);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        pw * cols as f64,
        ph * rows as f64
    );
    for (i, ((k, c), curves)) in panels.iter().enumerate() {
        let (ox, oy) = (pw * (i % cols) as f64, ph * (i / cols) as f64);
        let all = curves.iter().flat_map(|c| c.values.iter().copied());
        let (lo, hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        svg.push_str(&format!(
            "<g transform=\"translate({ox},{oy})\"><rect x=\"20\" y=\"20\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#ccc\"/>\n<text x=\"20\" y=\"14\">{} (class {c})</text>\n",
            pw - 30.0,
            ph - 40.0,
            xml_escape(&feature_names[*k])
        ));
        for curve in curves {
            let (g0, g1) = (curve.grid[0], *curve.grid.last().unwrap_or(&curve.grid[0]));
            let gspan = if g1 > g0 { g1 - g0 } else { 1.0 };
            let pts: Vec<String> = curve
                .grid
                .iter()
                .zip(&curve.values)
                .map(|(x, v)| {
                    let px = 20.0 + (x - g0) / gspan * (pw - 30.0);
                    let py = 20.0 + (hi - v) / span * (ph - 40.0);
                    format!("{px:.2},{py:.2}")
                })
                .collect();
            let (width, color) = match curve.owner {
                Owner::Global => (2.5, "#000"),
                Owner::Client(_) => (1.0, "#4682b4"),
            };
            svg.push_str(&format!(
                "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\" points=\"{}\"/>\n",
                pts.join(" ")
            ));
        }
        svg.push_str("</g>\n");
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Everything `export_reports` can write; `None` fields are skipped.
#[derive(Debug, Clone, Copy)]
pub struct ReportSet<'a> {
    pub feature_names: &'a [String],
    pub interpret: Option<&'a InterpretReport>,
    pub grid: Option<(&'a [(f64, f64)], &'a Scaler)>,
    pub attributions: Option<&'a AttributionReport>,
    pub metrics: Option<&'a Metrics>,
    pub svg: bool,
}

/// Writes contributions.csv, shapes.csv, grid.csv, attributions.csv,
/// metrics.csv and optionally shapes.svg into `out_dir`. Every file is
/// rendered in memory before anything is written.
pub fn export_reports(reports: &ReportSet<'_>, out_dir: &Path) -> Result<Vec<String>> {
    let mut files: Vec<(&str, String)> = Vec::new();
    if let Some(r) = reports.interpret {
        files.push(("contributions.csv", contributions_csv(r.contributions())?));
        files.push(("shapes.csv", shapes_csv(r.curves(), reports.feature_names)?));
        if reports.svg {
            files.push(("shapes.svg", shapes_svg(r.curves(), reports.feature_names)));
        }
    }
    if let Some((ranges, scaler)) = reports.grid {
        files.push(("grid.csv", grid_csv(ranges, scaler, reports.feature_names)?));
    }
    if let Some(a) = reports.attributions {
        files.push(("attributions.csv", attributions_csv(a)?));
    }
    if let Some(m) = reports.metrics {
        files.push(("metrics.csv", metrics_csv(m)?));
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        written.push(name.to_string());
    }
    Ok(written)
}
