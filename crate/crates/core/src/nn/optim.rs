use serde::{Deserialize, Serialize};

use super::{Gradients, Parameters};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Optimizer with its running state. Adam moments are allocated lazily on
/// the first step so one state can be created before the model shape is
/// known.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        check_lr(learning_rate)?;
        Ok(Self {
            kind,
            learning_rate,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        })
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn set_learning_rate(&mut self, lr: f64) -> Result<()> {
        check_lr(lr)?;
        self.learning_rate = lr;
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Applies one update in place. Non-finite gradients leave both the
    /// parameters and the optimizer state untouched.
    pub fn step<P: Parameters + ?Sized>(&mut self, params: &mut P, grads: &Gradients) -> Result<()> {
        if params.tensor_shapes() != grads.shapes() {
            return Err(Error::ArchitectureMismatch(
                "gradient shapes do not match parameters".into(),
            ));
        }
        if !grads.is_finite() {
            return Err(Error::NonFinite("gradients"));
        }
        let lr = self.learning_rate;
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.tensors_mut().into_iter().zip(&grads.0) {
                    for (p, g) in p.iter_mut().zip(g) {
                        *p -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam => {
                if self.m.is_empty() {
                    self.m = grads.0.iter().map(|g| vec![0.0; g.len()]).collect();
                    self.v = self.m.clone();
                }
                let t = self.step as i32;
                let bc1 = 1.0 - BETA1.powi(t);
                let bc2 = 1.0 - BETA2.powi(t);
                for (((p, g), m), v) in params
                    .tensors_mut()
                    .into_iter()
                    .zip(&grads.0)
                    .zip(&mut self.m)
                    .zip(&mut self.v)
                {
                    for i in 0..p.len() {
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g[i];
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g[i] * g[i];
                        let m_hat = m[i] / bc1;
                        let v_hat = v[i] / bc2;
                        p[i] -= lr * m_hat / (v_hat.sqrt() + EPS);
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_lr(lr: f64) -> Result<()> {
    if lr >= 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "learning rate must be non-negative and finite, got {lr}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalar(Vec<f64>);

    impl Parameters for Scalar {
        fn tensors(&self) -> Vec<&[f64]> {
            vec![&self.0]
        }
        fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
            vec![&mut self.0]
        }
    }

    #[test]
    fn sgd_step() {
        let mut p = Scalar(vec![1.0]);
        let mut opt = Optimizer::new(OptimizerKind::Sgd, 0.1).unwrap();
        opt.step(&mut p, &Gradients(vec![vec![2.0]])).unwrap();
        assert!((p.0[0] - 0.8).abs() < 1e-15);
        assert_eq!(opt.steps(), 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::Adam] {
            let mut p = Scalar(vec![1.25, -3.0]);
            let mut opt = Optimizer::new(kind, 0.01).unwrap();
            opt.step(&mut p, &Gradients(vec![vec![0.0, 0.0]])).unwrap();
            assert_eq!(p.0, vec![1.25, -3.0], "{kind:?}");
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        // Hand computation: m = 0.1, v = 0.001, m_hat = 1, v_hat = 1,
        // update = lr * 1 / (1 + 1e-8).
        let mut p = Scalar(vec![0.0]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.001).unwrap();
        opt.step(&mut p, &Gradients(vec![vec![1.0]])).unwrap();
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p.0[0] - expected).abs() < 1e-15, "{}", p.0[0]);
    }

    #[test]
    fn non_finite_gradient_rejected_without_update() {
        let mut p = Scalar(vec![1.0]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.1).unwrap();
        let err = opt.step(&mut p, &Gradients(vec![vec![f64::NAN]]));
        assert!(matches!(err, Err(Error::NonFinite(_))));
        assert_eq!(p.0, vec![1.0]);
        assert_eq!(opt.steps(), 0);
    }

    #[test]
    fn learning_rate_must_be_non_negative() {
        assert!(Optimizer::new(OptimizerKind::Adam, -1.0).is_err());
        assert!(Optimizer::new(OptimizerKind::Adam, f64::NAN).is_err());
    }

    #[test]
    fn zero_learning_rate_is_a_no_op() {
        let mut p = Scalar(vec![1.5]);
        let mut opt = Optimizer::new(OptimizerKind::Adam, 0.0).unwrap();
        opt.step(&mut p, &Gradients(vec![vec![0.7]])).unwrap();
        assert_eq!(p.0, vec![1.5]);
    }
}
