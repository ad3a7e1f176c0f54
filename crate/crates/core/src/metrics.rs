//! Accuracy and ROC-AUC.
//!
//! AUC is computed from the Mann-Whitney rank sum with average ranks for
//! ties, which equals the fraction of (positive, negative) pairs where the
//! positive scores higher, counting ties as one half.

use serde::{Deserialize, Serialize};

use crate::task::Task;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    /// NaN when undefined (a single class present).
    pub auc: f64,
}

/// Predicted label for one probability vector.
pub fn predict_label(probs: &[f64], task: Task, threshold: f64) -> usize {
    match task {
        Task::Binary => usize::from(probs[0] >= threshold),
        Task::Multiclass { .. } => {
            probs
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) },
                )
                .0
        }
    }
}

pub fn accuracy(probs: &[Vec<f64>], labels: &[usize], task: Task, threshold: f64) -> Result<f64> {
    check_aligned(probs, labels, task)?;
    let correct = probs
        .iter()
        .zip(labels)
        .filter(|(p, &y)| predict_label(p, task, threshold) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Binary ROC-AUC by rank sum. Returns NaN (with a warning) when only one
/// class is present.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        log::warn!("ROC-AUC undefined: only one class present in {} labels", positive.len());
        return f64::NAN;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Ranks are 1-based; ties share the average rank. Twice the rank sum is
    // an integer, so accumulate that to stay exact.
    let mut twice_rank_sum_pos: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // Average of ranks i+1..=j, doubled: (i + 1 + j).
        let twice_avg = (i + 1 + j) as u64;
        let pos_in_tie = order[i..j].iter().filter(|&&k| positive[k]).count() as u64;
        twice_rank_sum_pos += twice_avg * pos_in_tie;
        i = j;
    }
    let n_pos = n_pos as u64;
    // U = R_pos - n_pos (n_pos + 1) / 2, doubled.
    let twice_u = twice_rank_sum_pos - n_pos * (n_pos + 1);
    (twice_u as f64 / 2.0) / (n_pos as f64 * n_neg as f64)
}

/// One-vs-rest macro AUC for multiclass; plain AUC for binary.
pub fn auc(probs: &[Vec<f64>], labels: &[usize], task: Task) -> Result<f64> {
    check_aligned(probs, labels, task)?;
    match task {
        Task::Binary => {
            let scores: Vec<f64> = probs.iter().map(|p| p[0]).collect();
            let pos: Vec<bool> = labels.iter().map(|&y| y == 1).collect();
            Ok(roc_auc(&scores, &pos))
        }
        Task::Multiclass { classes } => {
            let per_class: Vec<f64> = (0..classes)
                .map(|c| {
                    let scores: Vec<f64> = probs.iter().map(|p| p[c]).collect();
                    let pos: Vec<bool> = labels.iter().map(|&y| y == c).collect();
                    roc_auc(&scores, &pos)
                })
                .filter(|a| !a.is_nan())
                .collect();
            if per_class.is_empty() {
                Ok(f64::NAN)
            } else {
                Ok(per_class.iter().sum::<f64>() / per_class.len() as f64)
            }
        }
    }
}

pub fn compute_metrics(probs: &[Vec<f64>], labels: &[usize], task: Task, threshold: f64) -> Result<Metrics> {
    Ok(Metrics {
        accuracy: accuracy(probs, labels, task, threshold)?,
        auc: auc(probs, labels, task)?,
    })
}

fn check_aligned(probs: &[Vec<f64>], labels: &[usize], task: Task) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(Error::shape("probabilities vs labels", labels.len(), probs.len()));
    }
    if labels.is_empty() {
        return Err(Error::Empty("metrics"));
    }
    if let Some(p) = probs.iter().find(|p| p.len() != task.outputs()) {
        return Err(Error::shape("probability vector", task.outputs(), p.len()));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= task.classes()) {
        return Err(Error::TargetOutOfRange {
            target: y,
            classes: task.classes(),
        });
    }
    Ok(())
}
