mod common;

use common::{names, pairwise_auc, random_nam, rng};
use fednam::control::{Decision, EarlyStopConfig, EarlyStopState, PlateauConfig, PlateauSchedule};
use fednam::data::{train_test_split, Samples, Scaler};
use fednam::interpret::{contribution_scores, sample_shape_curve, Owner};
use fednam::metrics::roc_auc;
use fednam::nn::{sigmoid, softmax};
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #[test]
    fn softmax_is_a_distribution(z in prop::collection::vec(-1e3f64..1e3, 1..8)) {
        let p = softmax(&z);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn sigmoid_stays_open_unit(z in -1e6f64..1e6) {
        let s = sigmoid(z);
        prop_assert!(s > 0.0 && s < 1.0);
    }

    #[test]
    fn auc_matches_pairwise_count(
        pairs in prop::collection::vec((0u8..20, any::<bool>()), 2..120),
    ) {
        let scores: Vec<f64> = pairs.iter().map(|(s, _)| *s as f64 / 20.0).collect();
        let labels: Vec<bool> = pairs.iter().map(|(_, l)| *l).collect();
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));
        prop_assert_eq!(roc_auc(&scores, &labels), pairwise_auc(&scores, &labels));
    }

    #[test]
    fn early_stop_waits_for_patience(
        losses in prop::collection::vec(0.0f64..2.0, 1..80),
        patience in 1usize..25,
    ) {
        let mut s: EarlyStopState<usize> = EarlyStopState::new(EarlyStopConfig { patience, ..EarlyStopConfig::default() });
        let mut flat = 0;
        let mut best = f64::INFINITY;
        for (i, &l) in losses.iter().enumerate() {
            let d = s.update(l, || i);
            if best - l > 1e-4 { best = l; flat = 0 } else { flat += 1 }
            if d != Decision::Continue {
                prop_assert!(flat >= patience);
                break;
            }
            prop_assert!(s.best_loss() <= l + 1e-4);
        }
    }

    #[test]
    fn lr_never_increases_or_undershoots(
        losses in prop::collection::vec(0.0f64..2.0, 1..200),
        lr0 in 1e-5f64..1.0,
    ) {
        let cfg = PlateauConfig::default();
        let mut sched = PlateauSchedule::new(cfg.clone());
        let mut lr = lr0;
        for l in losses {
            let next = sched.update(lr, l);
            prop_assert!(next <= lr);
            prop_assert!(next >= cfg.min_lr.min(lr0));
            lr = next;
        }
    }

    #[test]
    fn split_is_a_partition(n in 2usize..300, frac in 0.05f64..0.95, seed in any::<u64>(), strat in any::<bool>()) {
        let labels: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % 3).collect();
        let (tr, te) = train_test_split(&labels, frac, strat, seed).unwrap();
        let mut all = [tr.clone(), te.clone()].concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert!(!tr.is_empty() && !te.is_empty());
        prop_assert_eq!(train_test_split(&labels, frac, strat, seed).unwrap(), (tr, te));
    }

    #[test]
    fn standardized_columns_are_unit(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 2..60)) {
        let x: Vec<f64> = rows.concat();
        let s = Samples::new(3, x, vec![0; rows.len()]).unwrap();
        let scaler = Scaler::fit(&s, &names(3)).unwrap();
        let z = scaler.transform(&s);
        for k in 0..3 {
            let col = z.column(k);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            if scaler.stds[k] != 1.0 || rows.iter().any(|r| r[k] != rows[0][k]) {
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                prop_assert!((var.sqrt() - 1.0).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn auc_oracle_on_random_sets() {
    let mut r = rng(41);
    for _ in 0..100 {
        let (scores, labels) = common::random_scored_labels(&mut r, 200);
        assert_eq!(roc_auc(&scores, &labels), pairwise_auc(&scores, &labels));
    }
}

#[test]
fn centered_curves_have_zero_mean() {
    let mut r = rng(42);
    for _ in 0..100 {
        let m = random_nam(&mut r);
        let k = r.random_range(0..m.num_features());
        let c = r.random_range(0..m.num_outputs());
        let lo = r.random_range(-4.0..0.0);
        let curve = sample_shape_curve(&m, k, c, (lo, lo + r.random_range(0.1..6.0)), Owner::Global).unwrap();
        let mean = curve.values.iter().sum::<f64>() / curve.values.len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!(curve.values.iter().all(|v| v.is_finite()));
        for (x, v) in curve.grid.iter().zip(&curve.values) {
            assert!((v + curve.offset - m.effective_shape(c, k, *x)).abs() < 1e-9);
        }
    }
}

#[test]
fn scaling_an_output_weight_scales_its_score() {
    let mut r = rng(43);
    for _ in 0..100 {
        let m = random_nam(&mut r);
        let k = m.num_features();
        let rows = 30;
        let x: Vec<f64> = (0..rows * k).map(|_| r.random_range(-2.0..2.0)).collect();
        let data = Samples::new(k, x, vec![0; rows]).unwrap();
        let before = contribution_scores(&m, &data, Owner::Global).unwrap();
        let j = r.random_range(0..k);
        let mut scaled = m.clone();
        for c in 0..m.num_outputs() {
            scaled.output_weights_mut()[c * k + j] *= 10.0;
        }
        let after = contribution_scores(&scaled, &data, Owner::Global).unwrap();
        let (b, a) = (before.score_of(j).unwrap(), after.score_of(j).unwrap());
        assert!((a - 10.0 * b).abs() <= 1e-12 * a.abs().max(1e-300), "{a} vs 10 * {b}");
        let name = &m.feature_names()[j];
        assert!(after.rank_of(name).unwrap() <= before.rank_of(name).unwrap());
        assert!(after.scores.iter().all(|s| s.score >= 0.0));
    }
}
