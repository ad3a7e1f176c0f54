use super::activation::{sigmoid, softmax, LOGIT_CLAMP};
use crate::task::Task;
use crate::{Error, Result};

/// Cross-entropy loss and its gradient with respect to the logits.
///
/// Binary tasks take one logit and use sigmoid cross-entropy, multiclass
/// tasks use softmax cross-entropy. Logits are clamped to `[-30, 30]` first.
pub fn loss_and_grad(logits: &[f64], target: usize, task: Task) -> Result<(f64, Vec<f64>)> {
    if logits.len() != task.outputs() {
        return Err(Error::shape("logits", task.outputs(), logits.len()));
    }
    if target >= task.classes() {
        return Err(Error::TargetOutOfRange {
            target,
            classes: task.classes(),
        });
    }
    match task {
        Task::Binary => {
            let z = logits[0].clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
            let y = target as f64;
            // softplus(z) - y z, written to avoid overflow.
            let loss = z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
            Ok((loss, vec![sigmoid(z) - y]))
        }
        Task::Multiclass { .. } => {
            let p = softmax(logits);
            let loss = -p[target].ln();
            let grad = p
                .iter()
                .enumerate()
                .map(|(c, &pc)| if c == target { pc - 1.0 } else { pc })
                .collect();
            Ok((loss, grad))
        }
    }
}

/// Probabilities from logits via the inverse link.
pub fn probabilities(logits: &[f64], task: Task) -> Vec<f64> {
    match task {
        Task::Binary => vec![sigmoid(logits[0])],
        Task::Multiclass { .. } => softmax(logits),
    }
}
