//! CSV ingestion, target encoding, z-score standardization and stratified
//! splitting for the three benchmark tables (Heart Disease, red Wine
//! quality, Iris).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::task::Task;
use crate::{Error, Result};

/// Feature matrix (row-major) with integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    n_features: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl Samples {
    pub fn new(n_features: usize, x: Vec<f64>, y: Vec<usize>) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::InvalidConfig("samples need at least one feature".into()));
        }
        if x.len() != n_features * y.len() {
            return Err(Error::shape("sample matrix", n_features * y.len(), x.len()));
        }
        Ok(Self { n_features, x, y })
    }

    pub fn empty(n_features: usize) -> Self {
        Self {
            n_features,
            x: Vec::new(),
            y: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], usize)> + '_ {
        self.x.chunks_exact(self.n_features).zip(self.y.iter().copied())
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.x.chunks_exact(self.n_features).map(|r| r[k]).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Samples {
        let mut x = Vec::with_capacity(indices.len() * self.n_features);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Samples {
            n_features: self.n_features,
            x,
            y,
        }
    }

    /// Row-wise concatenation.
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Samples>) -> Result<Samples> {
        let mut iter = parts.into_iter().peekable();
        let n_features = iter.peek().map(|s| s.n_features).ok_or(Error::Empty("concat"))?;
        let mut out = Samples::empty(n_features);
        for s in iter {
            if s.n_features != n_features {
                return Err(Error::shape("concat feature count", n_features, s.n_features));
            }
            out.x.extend_from_slice(&s.x);
            out.y.extend_from_slice(&s.y);
        }
        Ok(out)
    }

    /// Per-feature `(min, max)`.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        (0..self.n_features)
            .map(|k| {
                self.column(k)
                    .into_iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .collect()
    }
}

/// A parsed CSV table. Every cell is numeric; declared categorical columns
/// that contain non-numeric strings are encoded by alphabetical order of
/// their distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Column name -> category names, index == code.
    pub categories: BTreeMap<String, Vec<String>>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_columns(&self) -> usize {
        self.header.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Reads a comma-separated file with a header row.
///
/// Cells in `categorical` columns may be arbitrary strings; any other cell
/// must parse as a decimal number. Errors carry 1-based line numbers.
pub fn load_csv(path: &Path, categorical: &[&str]) -> Result<RawTable> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(path, &text, categorical)
}

pub fn parse_csv(path: &Path, text: &str, categorical: &[&str]) -> Result<RawTable> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(parse_err(1, "empty file: no header row".into()));
    }
    if let Some(dup) = header
        .iter()
        .enumerate()
        .find_map(|(i, h)| header[..i].contains(h).then_some(h))
    {
        return Err(parse_err(1, format!("duplicate column name {dup:?}")));
    }
    let is_categorical: Vec<bool> = header.iter().map(|h| categorical.contains(&h.as_str())).collect();

    let mut cells: Vec<Vec<String>> = Vec::new();
    let mut lines: Vec<u64> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.kind() {
                csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                    parse_err(line, format!("ragged row: expected {expected_len} fields, found {len}"))
                }
                _ => parse_err(line, e.to_string()),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        cells.push(record.iter().map(str::to_string).collect());
        lines.push(line);
    }
    if cells.is_empty() {
        return Err(parse_err(2, "empty file: header but no data rows".into()));
    }

    let mut categories = BTreeMap::new();
    let mut rows = vec![vec![0.0; header.len()]; cells.len()];
    for (c, name) in header.iter().enumerate() {
        let parsed: Vec<Option<f64>> = cells.iter().map(|r| r[c].parse::<f64>().ok()).collect();
        for (r, row) in cells.iter().enumerate() {
            if row[c].is_empty() {
                return Err(parse_err(lines[r], format!("missing value in column {name:?}")));
            }
        }
        if parsed.iter().all(Option::is_some) {
            for (r, v) in parsed.into_iter().enumerate() {
                let v = v.unwrap_or_default();
                if !v.is_finite() {
                    return Err(parse_err(lines[r], format!("non-finite value in column {name:?}")));
                }
                rows[r][c] = v;
            }
        } else if is_categorical[c] {
            let names: Vec<String> = cells
                .iter()
                .map(|r| r[c].clone())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for (r, row) in cells.iter().enumerate() {
                rows[r][c] = names.binary_search(&row[c]).unwrap_or_default() as f64;
            }
            categories.insert(name.clone(), names);
        } else {
            let r = parsed.iter().position(Option::is_none).unwrap_or_default();
            return Err(parse_err(
                lines[r],
                format!("non-numeric value {:?} in column {name:?}", cells[r][c]),
            ));
        }
    }
    Ok(RawTable {
        path: path.to_path_buf(),
        header,
        rows,
        categories,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Heart,
    Wine,
    Iris,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Heart => "heart",
            DatasetKind::Wine => "wine",
            DatasetKind::Iris => "iris",
        }
    }

    pub fn feature_columns(self) -> &'static [&'static str] {
        match self {
            DatasetKind::Heart => &[
                "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak", "slope", "ca",
                "thal",
            ],
            DatasetKind::Wine => &[
                "fixed acidity",
                "volatile acidity",
                "citric acid",
                "residual sugar",
                "chlorides",
                "free sulfur dioxide",
                "total sulfur dioxide",
                "density",
                "pH",
                "sulphates",
                "alcohol",
            ],
            DatasetKind::Iris => &["sepal_length", "sepal_width", "petal_length", "petal_width"],
        }
    }

    pub fn target_column(self) -> &'static str {
        match self {
            DatasetKind::Heart => "target",
            DatasetKind::Wine => "quality",
            DatasetKind::Iris => "species",
        }
    }

    /// Columns allowed to hold strings.
    pub fn categorical_columns(self) -> &'static [&'static str] {
        match self {
            DatasetKind::Heart => &["sex", "cp", "fbs", "restecg", "exang", "slope", "ca", "thal"],
            DatasetKind::Wine => &[],
            DatasetKind::Iris => &["species"],
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heart" => Ok(DatasetKind::Heart),
            "wine" => Ok(DatasetKind::Wine),
            "iris" => Ok(DatasetKind::Iris),
            other => Err(Error::InvalidConfig(format!(
                "unknown dataset {other:?} (expected heart, wine or iris)"
            ))),
        }
    }
}

/// Wine quality at or above this is the positive class.
pub const WINE_QUALITY_THRESHOLD: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSpec {
    /// Fraction of all rows held out for testing.
    pub test_fraction: f64,
    /// Fraction of each client shard held out for validation.
    pub val_fraction: f64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.20,
            val_fraction: 0.10,
            stratified: true,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("test_fraction", self.test_fraction),
            ("val_fraction", self.val_fraction),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must be in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

/// Per-feature z-score parameters, fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    /// Population mean and standard deviation per column. A constant column
    /// gets std 1 and a warning.
    pub fn fit(samples: &Samples, names: &[String]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Empty("scaler fit"));
        }
        let n = samples.len() as f64;
        let mut means = Vec::with_capacity(samples.n_features());
        let mut stds = Vec::with_capacity(samples.n_features());
        for k in 0..samples.n_features() {
            let col = samples.column(k);
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            let mut std = var.sqrt();
            if std == 0.0 || !std.is_finite() {
                log::warn!(
                    "feature {:?} is constant on the training split; using std = 1",
                    names.get(k).map_or("?", String::as_str)
                );
                std = 1.0;
            }
            means.push(mean);
            stds.push(std);
        }
        Ok(Self { means, stds })
    }

    pub fn transform(&self, samples: &Samples) -> Samples {
        let mut out = samples.clone();
        let k = self.means.len();
        for (i, v) in out.x.iter_mut().enumerate() {
            let c = i % k;
            *v = (*v - self.means[c]) / self.stds[c];
        }
        out
    }

    pub fn inverse(&self, feature: usize, z: f64) -> f64 {
        z * self.stds[feature] + self.means[feature]
    }
}

/// Index split into `(train, test)`; both sorted ascending.
///
/// Stratified splits allocate the test count `round(n * fraction)` across
/// classes by largest remainder. If any class has fewer than two members
/// the split falls back to unstratified with a warning.
pub fn train_test_split(
    labels: &[usize],
    test_fraction: f64,
    stratified: bool,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 rows to split, got {n}")));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut rng = seed::rng(seed::derive(seed, &[seed::tag::SPLIT]));

    let mut groups = group_by_label(labels);
    let mut stratify = stratified;
    if stratify && groups.values().any(|g| g.len() < 2) {
        log::warn!("a class has fewer than 2 members; falling back to an unstratified split");
        stratify = false;
    }
    let mut test = Vec::with_capacity(n_test);
    if stratify {
        let quotas = largest_remainder(&groups.values().map(Vec::len).collect::<Vec<_>>(), n_test);
        for (group, quota) in groups.values_mut().zip(quotas) {
            group.shuffle(&mut rng);
            test.extend_from_slice(&group[..quota]);
        }
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test.extend_from_slice(&all[..n_test]);
    }
    test.sort_unstable();
    let mut is_test = vec![false; n];
    for &i in &test {
        is_test[i] = true;
    }
    let train = (0..n).filter(|&i| !is_test[i]).collect();
    Ok((train, test))
}

pub(crate) fn group_by_label(labels: &[usize]) -> BTreeMap<usize, Vec<usize>> {
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.iter().enumerate() {
        groups.entry(y).or_default().push(i);
    }
    groups
}

/// Distributes `total` across groups proportionally to `sizes`, rounding by
/// largest remainder (ties go to the earlier group).
fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let exact: Vec<f64> = sizes.iter().map(|&s| s as f64 * total as f64 / n as f64).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    let mut left = total - quotas.iter().sum::<usize>();
    for &g in order.iter().cycle().take(sizes.len() * 2) {
        if left == 0 {
            break;
        }
        if quotas[g] < sizes[g] {
            quotas[g] += 1;
            left -= 1;
        }
    }
    quotas
}

/// A preprocessed dataset: standardized train/test splits plus everything
/// needed to map back to raw units.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub task: Task,
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub scaler: Scaler,
    pub train: Samples,
    pub test: Samples,
}

#[derive(Debug, Clone, Default)]
pub struct PreprocessOptions {
    /// Overrides the dataset's standard target column; also disables the
    /// feature-name schema check.
    pub target_col: Option<String>,
    /// Keep only the first two Iris classes (setosa, versicolor) as a
    /// binary task.
    pub iris_two_class: bool,
}

/// Reads the CSV for `kind` with the right categorical declarations.
pub fn load_dataset_csv(path: &Path, kind: DatasetKind, options: &PreprocessOptions) -> Result<RawTable> {
    let mut categorical: Vec<&str> = kind.categorical_columns().to_vec();
    if let Some(t) = &options.target_col {
        categorical.push(t);
    }
    load_csv(path, &categorical)
}

/// Encodes the target, splits train/test and standardizes features with a
/// scaler fitted on the training rows only.
pub fn preprocess(
    raw: &RawTable,
    kind: DatasetKind,
    split: &SplitSpec,
    options: &PreprocessOptions,
    seed: u64,
) -> Result<Dataset> {
    split.validate()?;
    let target = options.target_col.as_deref().unwrap_or(kind.target_column());
    let t_idx = raw
        .column_index(target)
        .ok_or_else(|| Error::Schema(format!("target column {target:?} not found in {}", raw.path.display())))?;
    let feature_idx: Vec<usize> = if options.target_col.is_some() {
        (0..raw.n_columns()).filter(|&c| c != t_idx).collect()
    } else {
        kind.feature_columns()
            .iter()
            .map(|name| {
                raw.column_index(name).ok_or_else(|| {
                    Error::Schema(format!(
                        "{} is missing expected {} column {name:?}",
                        raw.path.display(),
                        kind.name()
                    ))
                })
            })
            .collect::<Result<_>>()?
    };
    if feature_idx.is_empty() {
        return Err(Error::Schema("no feature columns".into()));
    }
    let feature_names: Vec<String> = feature_idx.iter().map(|&c| raw.header[c].clone()).collect();

    let (labels, class_names, task, keep) = encode_target(raw, kind, t_idx, target, options)?;
    let mut x = Vec::with_capacity(keep.len() * feature_idx.len());
    let mut y = Vec::with_capacity(keep.len());
    for &r in &keep {
        x.extend(feature_idx.iter().map(|&c| raw.rows[r][c]));
        y.push(labels[r]);
    }
    let all = Samples::new(feature_idx.len(), x, y)?;

    let (train_idx, test_idx) = train_test_split(all.labels(), split.test_fraction, split.stratified, seed)?;
    let train_raw = all.subset(&train_idx);
    let scaler = Scaler::fit(&train_raw, &feature_names)?;
    Ok(Dataset {
        kind,
        task,
        feature_names,
        class_names,
        train: scaler.transform(&train_raw),
        test: scaler.transform(&all.subset(&test_idx)),
        scaler,
    })
}

type EncodedTarget = (Vec<usize>, Vec<String>, Task, Vec<usize>);

fn encode_target(
    raw: &RawTable,
    kind: DatasetKind,
    t_idx: usize,
    target: &str,
    options: &PreprocessOptions,
) -> Result<EncodedTarget> {
    let values: Vec<f64> = raw.rows.iter().map(|r| r[t_idx]).collect();
    let all_rows: Vec<usize> = (0..values.len()).collect();
    match kind {
        DatasetKind::Heart => {
            let labels = values
                .iter()
                .enumerate()
                .map(|(r, &v)| match v {
                    0.0 => Ok(0),
                    1.0 => Ok(1),
                    v => Err(Error::Schema(format!(
                        "heart target must be 0 or 1, row {} has {v}",
                        r + 1
                    ))),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((labels, vec!["absent".into(), "present".into()], Task::Binary, all_rows))
        }
        DatasetKind::Wine => {
            let labels = values
                .iter()
                .map(|&q| usize::from(q >= WINE_QUALITY_THRESHOLD))
                .collect();
            Ok((
                labels,
                vec!["quality<6".into(), "quality>=6".into()],
                Task::Binary,
                all_rows,
            ))
        }
        DatasetKind::Iris => {
            let names = raw.categories.get(target).cloned().unwrap_or_else(|| {
                let distinct: BTreeSet<u64> = values.iter().map(|v| v.to_bits()).collect();
                distinct.into_iter().map(|b| f64::from_bits(b).to_string()).collect()
            });
            let labels: Vec<usize> = values.iter().map(|&v| v as usize).collect();
            if names.len() < 2 {
                return Err(Error::Schema("iris target has fewer than two classes".into()));
            }
            if options.iris_two_class {
                let keep = all_rows.into_iter().filter(|&r| labels[r] < 2).collect();
                Ok((labels, names[..2].to_vec(), Task::Binary, keep))
            } else {
                let classes = names.len();
                Ok((labels, names, Task::Multiclass { classes }, all_rows))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, categorical: &[&str]) -> Result<RawTable> {
        parse_csv(Path::new("mem.csv"), text, categorical)
    }

    #[test]
    fn parses_numbers_and_categories() {
        let t = parse("a,b,c\n1,x,2.5\n3,y,-1\n4,x,0\n", &["b"]).unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.n_columns(), 3);
        assert_eq!(t.rows[1], vec![3.0, 1.0, -1.0]);
        assert_eq!(t.categories["b"], vec!["x".to_string(), "y".to_string()]);
    }

    #[test]
    fn numeric_categorical_column_stays_numeric() {
        let t = parse("a,b\n1,3\n2,7\n", &["b"]).unwrap();
        assert_eq!(t.rows[1], vec![2.0, 7.0]);
        assert!(t.categories.is_empty());
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = parse("a,b\n1,2\n3\n", &[]).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("ragged"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_line_and_column() {
        let err = parse("a,b\n1,2\n3,oops\n", &[]).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("oops") && message.contains("\"b\""), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(parse("", &[]), Err(Error::Parse { .. })));
        assert!(matches!(parse("a,b\n", &[]), Err(Error::Parse { .. })));
    }

    #[test]
    fn missing_cell_rejected() {
        assert!(matches!(parse("a,b\n1,\n", &[]), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn split_is_disjoint_exhaustive_and_deterministic() {
        let labels: Vec<usize> = (0..150).map(|i| i / 50).collect();
        let (train, test) = train_test_split(&labels, 0.2, true, 5).unwrap();
        assert_eq!(train.len(), 120);
        assert_eq!(test.len(), 30);
        for c in 0..3 {
            assert_eq!(test.iter().filter(|&&i| labels[i] == c).count(), 10);
        }
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..150).collect::<Vec<_>>());
        assert_eq!(
            (train.clone(), test.clone()),
            train_test_split(&labels, 0.2, true, 5).unwrap()
        );
        assert_ne!(test, train_test_split(&labels, 0.2, true, 6).unwrap().1);
    }

    #[test]
    fn singleton_class_falls_back_to_unstratified() {
        let labels = vec![0, 0, 0, 0, 0, 0, 0, 0, 0, 1];
        let (train, test) = train_test_split(&labels, 0.3, true, 0).unwrap();
        assert_eq!(test.len(), 3);
        assert_eq!(train.len() + test.len(), 10);
    }

    #[test]
    fn largest_remainder_sums_to_total() {
        assert_eq!(largest_remainder(&[50, 50, 50], 30), vec![10, 10, 10]);
        assert_eq!(largest_remainder(&[3, 3, 4], 5).iter().sum::<usize>(), 5);
        assert_eq!(largest_remainder(&[1, 1], 1).iter().sum::<usize>(), 1);
    }

    #[test]
    fn scaler_standardizes_training_columns() {
        let s = Samples::new(2, vec![1.0, 5.0, 2.0, 5.0, 4.0, 5.0, 9.0, 5.0], vec![0, 1, 0, 1]).unwrap();
        let names = vec!["a".into(), "b".into()];
        let scaler = Scaler::fit(&s, &names).unwrap();
        assert_eq!(scaler.stds[1], 1.0, "constant column falls back to 1");
        let z = scaler.transform(&s);
        let col = z.column(0);
        let mean = col.iter().sum::<f64>() / 4.0;
        let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 4.0).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-6);
        assert!((scaler.inverse(0, col[3]) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn wine_threshold() {
        let t = parse(
            "fixed acidity,volatile acidity,citric acid,residual sugar,chlorides,free sulfur dioxide,total sulfur dioxide,density,pH,sulphates,alcohol,quality\n\
             1,1,1,1,1,1,1,1,1,1,1,6\n2,2,2,2,2,2,2,2,2,2,2,5\n3,3,3,3,3,3,3,3,3,3,3,7\n4,4,4,4,4,4,4,4,4,4,4,3\n",
            &[],
        )
        .unwrap();
        let (labels, _, task, _) =
            encode_target(&t, DatasetKind::Wine, 11, "quality", &PreprocessOptions::default()).unwrap();
        assert_eq!(labels, vec![1, 0, 1, 0]);
        assert_eq!(task, Task::Binary);
    }

    #[test]
    fn unknown_schema_rejected() {
        let t = parse("a,b,target\n1,2,0\n3,4,1\n", &[]).unwrap();
        let r = preprocess(
            &t,
            DatasetKind::Heart,
            &SplitSpec::default(),
            &PreprocessOptions::default(),
            0,
        );
        assert!(matches!(r, Err(Error::Schema(_))));
    }

    #[test]
    fn target_override_uses_remaining_columns() {
        let text = "a,b,label\n".to_string()
            + &(0..20)
                .map(|i| format!("{},{},{}\n", i, i * 2, i % 2))
                .collect::<String>();
        let t = parse(&text, &["label"]).unwrap();
        let opts = PreprocessOptions {
            target_col: Some("label".into()),
            ..Default::default()
        };
        let d = preprocess(&t, DatasetKind::Heart, &SplitSpec::default(), &opts, 0).unwrap();
        assert_eq!(d.feature_names, vec!["a".to_string(), "b".to_string()]);
        assert_eq!(d.train.len() + d.test.len(), 20);
    }

    #[test]
    fn heart_target_must_be_binary() {
        let text = "age,sex,cp,trestbps,chol,fbs,restecg,thalach,exang,oldpeak,slope,ca,thal,target\n\
                    1,1,1,1,1,1,1,1,1,1,1,1,1,2\n2,2,2,2,2,2,2,2,2,2,2,2,2,0\n";
        let t = parse(text, &[]).unwrap();
        let r = preprocess(
            &t,
            DatasetKind::Heart,
            &SplitSpec::default(),
            &PreprocessOptions::default(),
            0,
        );
        assert!(matches!(r, Err(Error::Schema(_))));
    }
}
