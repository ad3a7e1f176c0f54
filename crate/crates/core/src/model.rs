use crate::data::Samples;
use crate::metrics::{compute_metrics, Metrics};
use crate::nam::{NamGrads, NamModel};
use crate::nn::{loss_and_grad, probabilities, Gradients, Mode, Parameters};
use crate::task::Task;
use crate::{Error, Result};

/// What the federation loop needs from a trainable classifier.
pub trait Classifier: Parameters + Clone + Send + Sync {
    fn task(&self) -> Task;

    fn num_features(&self) -> usize;

    /// Train-mode forward and backward for one example. Adds the loss
    /// gradient into `grads` and returns the loss.
    fn accumulate(&self, x: &[f64], label: usize, seed: u64, grads: &mut Gradients) -> Result<f64>;

    /// Inference-mode logits.
    fn logits(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Inference-mode gradient of logit `class` with respect to the input.
    fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>>;

    fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(probabilities(&self.logits(x)?, self.task()))
    }
}

/// Mean inference-mode loss plus accuracy and AUC over `data`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub metrics: Metrics,
}

pub fn evaluate<M: Classifier>(model: &M, data: &Samples, threshold: f64) -> Result<Evaluation> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation set"));
    }
    let task = model.task();
    let mut loss = 0.0;
    let mut probs = Vec::with_capacity(data.len());
    for (x, y) in data.rows() {
        let logits = model.logits(x)?;
        loss += loss_and_grad(&logits, y, task)?.0;
        probs.push(probabilities(&logits, task));
    }
    Ok(Evaluation {
        loss: loss / data.len() as f64,
        metrics: compute_metrics(&probs, data.labels(), task, threshold)?,
    })
}

/// Class probabilities for every row of `data`.
pub fn predict_all<M: Classifier>(model: &M, data: &Samples) -> Result<Vec<Vec<f64>>> {
    data.rows().map(|(x, _)| model.predict_proba(x)).collect()
}

pub(crate) fn add_into(grads: &mut Gradients, tensors: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut n = 0;
    for (acc, t) in grads.0.iter_mut().zip(tensors) {
        if acc.len() != t.len() {
            return Err(Error::ArchitectureMismatch("gradient tensor length".into()));
        }
        for (a, v) in acc.iter_mut().zip(&t) {
            *a += v;
        }
        n += 1;
    }
    if n != grads.0.len() {
        return Err(Error::ArchitectureMismatch("gradient tensor count".into()));
    }
    Ok(())
}

impl NamGrads {
    fn into_tensors(self) -> impl Iterator<Item = Vec<f64>> {
        self.into_gradients().0.into_iter()
    }
}

impl Classifier for NamModel {
    fn task(&self) -> Task {
        NamModel::task(self)
    }

    fn num_features(&self) -> usize {
        NamModel::num_features(self)
    }

    fn accumulate(&self, x: &[f64], label: usize, seed: u64, grads: &mut Gradients) -> Result<f64> {
        let fwd = self.forward(x, Mode::Train, seed)?;
        let (loss, dlogits) = loss_and_grad(&fwd.logits, label, self.task())?;
        add_into(grads, self.backward(&fwd, &dlogits)?.into_tensors())?;
        Ok(loss)
    }

    fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        NamModel::logits(self, x)
    }

    fn input_gradient(&self, x: &[f64], class: usize) -> Result<Vec<f64>> {
        let fwd = self.forward(x, Mode::Infer, 0)?;
        let mut seed_grad = vec![0.0; self.num_outputs()];
        *seed_grad.get_mut(class).ok_or(Error::TargetOutOfRange {
            target: class,
            classes: self.num_outputs(),
        })? = 1.0;
        Ok(self.backward(&fwd, &seed_grad)?.input)
    }
}
