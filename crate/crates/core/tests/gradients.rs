mod common;

use common::{gradient_check, random_baseline, random_input, random_nam, rng};
use fednam::model::Classifier;
use rand::Rng;

#[test]
fn nam_backprop_matches_central_differences() {
    let mut r = rng(11);
    for case in 0..20 {
        let m = random_nam(&mut r);
        let x = random_input(&mut r, m.num_features());
        let label = r.random_range(0..m.task().classes());
        let seed = r.random();
        if let Err(e) = gradient_check(&m, &x, label, seed) {
            panic!("case {case}: {e}");
        }
    }
}

#[test]
fn baseline_backprop_matches_central_differences() {
    let mut r = rng(12);
    for case in 0..20 {
        let m = random_baseline(&mut r);
        let x = random_input(&mut r, m.num_features());
        let label = r.random_range(0..m.task().classes());
        let seed = r.random();
        if let Err(e) = gradient_check(&m, &x, label, seed) {
            panic!("case {case}: {e}");
        }
    }
}
