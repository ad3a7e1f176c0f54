mod common;

use common::{names, random_input, random_nam, randomize, rng};
use fednam::nam::{NamConfig, NamModel};
use fednam::nn::{Activation, Mlp, Mode};
use fednam::Task;

#[test]
fn logits_are_bias_plus_feature_terms() {
    let mut r = rng(21);
    for _ in 0..50 {
        let m = random_nam(&mut r);
        for _ in 0..20 {
            let x = random_input(&mut r, m.num_features());
            let d = m.decompose(&x).unwrap();
            for (a, b) in d.reconstruct().iter().zip(&m.logits(&x).unwrap()) {
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "{a} vs {b}");
            }
        }
    }
}

#[test]
fn each_term_depends_only_on_its_feature() {
    let mut r = rng(22);
    for _ in 0..30 {
        let m = random_nam(&mut r);
        let k = m.num_features();
        let x = random_input(&mut r, k);
        let base = m.decompose(&x).unwrap();
        for j in 0..k {
            let mut moved = x.clone();
            moved[j] += 0.731;
            let d = m.decompose(&moved).unwrap();
            for i in (0..k).filter(|&i| i != j) {
                assert_eq!(d.terms[i].values, base.terms[i].values);
            }
        }
    }
}

#[test]
fn dropout_is_unbiased_in_expectation() {
    // Hidden ReLU layer with dropout followed by a linear output: the mean
    // train-mode output over many masks matches inference.
    let mut r = rng(23);
    let mut mlp = Mlp::xavier(&[3, 16, 1], vec![Activation::Relu, Activation::Identity], 0.3, 5).unwrap();
    randomize(&mut mlp, &mut r, 1.0);
    let x = [0.4, -1.2, 0.9];
    let expected = mlp.infer(&x).unwrap()[0];
    let masks = 20_000;
    let mean = (0..masks)
        .map(|s| mlp.forward(&x, Mode::Train, s).unwrap().0[0])
        .sum::<f64>()
        / masks as f64;
    assert!((mean - expected).abs() <= 0.02 * expected.abs(), "{mean} vs {expected}");
}

#[test]
fn inference_ignores_dropout() {
    let cfg = NamConfig {
        dropout: 0.5,
        ..NamConfig::default()
    };
    let m = NamModel::new(names(3), Task::Binary, &cfg, 9).unwrap();
    let x = [0.1, 0.2, 0.3];
    let a = m.forward(&x, Mode::Infer, 1).unwrap().logits;
    let b = m.forward(&x, Mode::Infer, 2).unwrap().logits;
    assert_eq!(a, b);
}
