mod common;

use common::{names, rng};
use fednam::data::{load_csv, DatasetKind, Samples};
use fednam::interpret::{export_reports, global_interpret, ReportSet, CURVE_POINTS};
use fednam::nam::{NamConfig, NamModel};
use fednam::pipeline::{default_csv_path, load_dataset, RunConfig};
use fednam::Task;
use rand::Rng;

fn toy_data(k: usize, rows: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let x = (0..rows * k).map(|_| r.random_range(-2.0..2.0)).collect();
    let y = (0..rows).map(|i| i % 3).collect();
    Samples::new(k, x, y).unwrap()
}

#[test]
fn identical_clients_report_like_the_global_model() {
    let mut r = rng(5);
    let mut m = NamModel::new(names(3), Task::Multiclass { classes: 3 }, &NamConfig::default(), 9).unwrap();
    common::randomize(&mut m, &mut r, 0.5);
    let data = toy_data(3, 40, 6);
    let clients = [(&m, &data), (&m, &data), (&m, &data)];
    let report = global_interpret(&clients, &m, &data, true).unwrap();
    for c in &report.client_contributions {
        assert_eq!(c.ranking(), report.global_contributions.ranking());
        for (a, b) in c.scores.iter().zip(&report.global_contributions.scores) {
            assert_eq!(a.score, b.score);
        }
    }
    let per_owner = report.global_curves.len();
    for (i, curve) in report.client_curves.iter().enumerate() {
        assert_eq!(curve.values, report.global_curves[i % per_owner].values);
    }
}

#[test]
fn reports_are_written() {
    let m = NamModel::new(names(2), Task::Binary, &NamConfig::default(), 1).unwrap();
    let data = toy_data(2, 20, 2);
    let report = global_interpret(&[(&m, &data), (&m, &data)], &m, &data, false).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_reports(
        &ReportSet {
            feature_names: &names(2),
            interpret: Some(&report),
            grid: None,
            attributions: None,
            metrics: None,
            svg: true,
        },
        dir.path(),
    )
    .unwrap();
    let contributions = std::fs::read_to_string(dir.path().join("contributions.csv")).unwrap();
    assert_eq!(contributions.lines().count(), 1 + 3 * 2);
    let shapes = std::fs::read_to_string(dir.path().join("shapes.csv")).unwrap();
    assert_eq!(shapes.lines().count(), 1 + 3 * 2 * CURVE_POINTS);
    assert!(std::fs::read_to_string(dir.path().join("shapes.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn bundled_files_have_expected_shapes() {
    for (kind, rows, cols) in [
        (DatasetKind::Heart, 303, 14),
        (DatasetKind::Wine, 1599, 12),
        (DatasetKind::Iris, 150, 5),
    ] {
        let t = load_csv(&default_csv_path(kind), kind.categorical_columns()).unwrap();
        assert_eq!((t.n_rows(), t.n_columns()), (rows, cols), "{kind:?}");
    }
}

#[test]
fn standardized_training_columns() {
    for kind in [DatasetKind::Heart, DatasetKind::Wine, DatasetKind::Iris] {
        let ds = load_dataset(&RunConfig::new(kind)).unwrap();
        let n = ds.train.len() as f64;
        for k in 0..ds.train.n_features() {
            let col = ds.train.column(k);
            let mean = col.iter().sum::<f64>() / n;
            let std = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
            assert!(mean.abs() < 1e-9, "{kind:?} feature {k} mean {mean}");
            assert!((std - 1.0).abs() < 1e-6, "{kind:?} feature {k} std {std}");
        }
    }
}

#[test]
fn split_is_reproducible() {
    let a = load_dataset(&RunConfig::new(DatasetKind::Wine)).unwrap();
    let b = load_dataset(&RunConfig::new(DatasetKind::Wine)).unwrap();
    assert_eq!(a.train, b.train);
    assert_eq!(a.test, b.test);
    assert_eq!(a.train.len() + a.test.len(), 1599);
}
