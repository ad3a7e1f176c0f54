use crate::{Error, Result};

/// A model viewed as an ordered list of flat parameter tensors.
///
/// Optimizers and federated averaging only ever see this view, so the same
/// code updates NAMs and plain MLPs. The order of `tensors` and
/// `tensors_mut` must agree, and must agree with the order of any
/// [`Gradients`] produced for the model.
pub trait Parameters {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;

    /// Tensor lengths, used as an architecture fingerprint.
    fn tensor_shapes(&self) -> Vec<usize> {
        self.tensors().iter().map(|t| t.len()).collect()
    }

    fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Gradients aligned with a model's [`Parameters::tensors`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Vec<f64>>);

impl Gradients {
    pub fn zeros_like<P: Parameters + ?Sized>(model: &P) -> Self {
        Gradients(model.tensors().iter().map(|t| vec![0.0; t.len()]).collect())
    }

    pub fn shapes(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    pub fn add_assign(&mut self, other: &Gradients) -> Result<()> {
        if self.shapes() != other.shapes() {
            return Err(Error::ArchitectureMismatch("gradient tensor shapes differ".into()));
        }
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.0 {
            for x in t.iter_mut() {
                *x *= factor;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flatten().copied().collect()
    }
}

/// Copies every tensor value into a flat vector.
pub fn flatten_params<P: Parameters + ?Sized>(model: &P) -> Vec<f64> {
    model.tensors().iter().flat_map(|t| t.iter().copied()).collect()
}
