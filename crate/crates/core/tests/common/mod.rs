//! Independent oracles and random-model helpers shared by integration and
//! acceptance tests.
#![allow(dead_code)]

use fednam::data::Samples;
use fednam::interpret::{BaselineConfig, BaselineDnn};
use fednam::model::Classifier;
use fednam::nam::{HiddenUnit, NamConfig, NamModel};
use fednam::nn::{Gradients, Parameters};
use fednam::Task;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn names(k: usize) -> Vec<String> {
    (0..k).map(|i| format!("x{i}")).collect()
}

/// Overwrites every parameter with U(-scale, scale).
pub fn randomize<P: Parameters>(model: &mut P, rng: &mut ChaCha8Rng, scale: f64) {
    for t in model.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.random_range(-scale..scale);
        }
    }
}

pub fn random_task(rng: &mut ChaCha8Rng) -> Task {
    if rng.random_bool(0.5) {
        Task::Binary
    } else {
        Task::Multiclass {
            classes: rng.random_range(3..=4),
        }
    }
}

pub fn random_nam(rng: &mut ChaCha8Rng) -> NamModel {
    let k = rng.random_range(1..=4);
    let cfg = NamConfig {
        hidden_layers: rng.random_range(1..=3),
        hidden_units: rng.random_range(2..=8),
        unit: if rng.random_bool(0.5) {
            HiddenUnit::Relu
        } else {
            HiddenUnit::Exu
        },
        dropout: if rng.random_bool(0.5) { 0.0 } else { 0.2 },
    };
    let task = random_task(rng);
    let mut m = NamModel::new(names(k), task, &cfg, rng.random()).unwrap();
    randomize(&mut m, rng, 1.0);
    m
}

pub fn random_baseline(rng: &mut ChaCha8Rng) -> BaselineDnn {
    let k = rng.random_range(1..=5);
    let cfg = BaselineConfig {
        hidden: (0..rng.random_range(1..=3)).map(|_| rng.random_range(2..=8)).collect(),
        dropout: if rng.random_bool(0.5) { 0.0 } else { 0.2 },
    };
    let task = random_task(rng);
    let mut m = BaselineDnn::new(k, task, &cfg, rng.random()).unwrap();
    randomize(&mut m, rng, 1.0);
    m
}

pub fn random_input(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    (0..k).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Passes when `|a - n| <= rel * max(|a|, |n|)` or `|a - n| <= abs`.
pub fn close(a: f64, n: f64, rel: f64, abs: f64) -> bool {
    let d = (a - n).abs();
    d <= abs || d <= rel * a.abs().max(n.abs())
}

/// Worst mismatch between backprop and central differences, over every
/// parameter and every input coordinate. Returns a description of the
/// first failure, if any.
pub fn gradient_check<M: Classifier>(model: &M, x: &[f64], label: usize, seed: u64) -> Result<usize, String> {
    const EPS: f64 = 1e-5;
    const REL: f64 = 1e-4;
    const ABS: f64 = 1e-6;
    let loss = |m: &M| {
        let mut scratch = Gradients::zeros_like(m);
        m.accumulate(x, label, seed, &mut scratch).unwrap()
    };
    let mut grads = Gradients::zeros_like(model);
    model.accumulate(x, label, seed, &mut grads).unwrap();
    let mut checked = 0;
    let shapes = model.tensor_shapes();
    for (t, &len) in shapes.iter().enumerate() {
        for j in 0..len {
            let mut plus = model.clone();
            plus.tensors_mut()[t][j] += EPS;
            let mut minus = model.clone();
            minus.tensors_mut()[t][j] -= EPS;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * EPS);
            let analytic = grads.0[t][j];
            if !close(analytic, numeric, REL, ABS) {
                return Err(format!(
                    "tensor {t} index {j}: backprop {analytic} vs numeric {numeric}"
                ));
            }
            checked += 1;
        }
    }
    for class in 0..model.task().outputs() {
        let g = model.input_gradient(x, class).unwrap();
        for i in 0..x.len() {
            let mut xp = x.to_vec();
            xp[i] += EPS;
            let mut xm = x.to_vec();
            xm[i] -= EPS;
            let numeric = (model.logits(&xp).unwrap()[class] - model.logits(&xm).unwrap()[class]) / (2.0 * EPS);
            if !close(g[i], numeric, REL, ABS) {
                return Err(format!(
                    "input {i} class {class}: backprop {} vs numeric {numeric}",
                    g[i]
                ));
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Weighted mean written as a plain loop: sum_i n_i w_i / sum_i n_i.
pub fn naive_weighted_mean(values: &[Vec<f64>], counts: &[usize]) -> Vec<f64> {
    let total: f64 = counts.iter().map(|&n| n as f64).sum();
    let mut out = vec![0.0; values[0].len()];
    for (v, &n) in values.iter().zip(counts) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += n as f64 * x;
        }
    }
    out.iter().map(|o| o / total).collect()
}

/// AUC by counting every (positive, negative) pair; ties count one half.
pub fn pairwise_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let mut twice_wins = 0u64;
    let mut pairs = 0u64;
    for (i, &pi) in positive.iter().enumerate() {
        if !pi {
            continue;
        }
        for (j, &pj) in positive.iter().enumerate() {
            if pj {
                continue;
            }
            pairs += 1;
            twice_wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    (twice_wins as f64 / 2.0) / pairs as f64
}

/// Random scores (coarsely quantized so ties occur) and labels with both
/// classes present.
pub fn random_scored_labels(rng: &mut ChaCha8Rng, max_n: usize) -> (Vec<f64>, Vec<bool>) {
    let n = rng.random_range(2..=max_n);
    let levels = rng.random_range(2..=50) as f64;
    let mut scores: Vec<f64> = (0..n)
        .map(|_| (rng.random::<f64>() * levels).floor() / levels)
        .collect();
    let mut labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.4)).collect();
    labels[0] = true;
    labels[1] = false;
    scores[0] = scores[0].max(0.0);
    (scores, labels)
}

/// Linearly separable two-feature toy data.
pub fn separable_toy(n: usize, seed: u64) -> Samples {
    let mut r = rng(seed);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    while y.len() < n {
        let a: f64 = r.random_range(-1.0..1.0);
        let b: f64 = r.random_range(-1.0..1.0);
        let margin = a - 0.5 * b;
        if margin.abs() < 0.1 {
            continue;
        }
        x.extend([a, b]);
        y.push(usize::from(margin > 0.0));
    }
    Samples::new(2, x, y).unwrap()
}
