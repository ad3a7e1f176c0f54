use serde::{Deserialize, Serialize};

/// Per-layer activation.
///
/// `ExU` is special: it changes the affine part of the layer as well. A layer
/// with ExU activation computes `z_j = sum_i exp(W_ji) * (x_i - b_j)` and then
/// caps it to `[0, 1]`. For the single-input first layer of a feature net this
/// is exactly `min(max((x - b) * exp(w), 0), 1)` per unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Exu,
    Identity,
    Sigmoid,
    Softmax,
}

pub(crate) const LOGIT_CLAMP: f64 = 30.0;

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

/// Numerically stable softmax with the same logit clamp as [`sigmoid`].
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let clamped: Vec<f64> = z.iter().map(|v| v.clamp(-LOGIT_CLAMP, LOGIT_CLAMP)).collect();
    let max = clamped.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = clamped.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl Activation {
    /// Applies the activation to a full pre-activation vector.
    pub fn apply(self, z: &[f64]) -> Vec<f64> {
        match self {
            Activation::Relu => z.iter().map(|&v| v.max(0.0)).collect(),
            Activation::Exu => z.iter().map(|&v| v.clamp(0.0, 1.0)).collect(),
            Activation::Identity => z.to_vec(),
            Activation::Sigmoid => z.iter().map(|&v| sigmoid(v)).collect(),
            Activation::Softmax => softmax(z),
        }
    }

    /// Vector-Jacobian product: maps dL/d(output) to dL/d(pre-activation).
    ///
    /// `z` is the pre-activation and `a` the activation output for the same
    /// forward call.
    pub fn vjp(self, z: &[f64], a: &[f64], upstream: &[f64]) -> Vec<f64> {
        match self {
            Activation::Relu => z
                .iter()
                .zip(upstream)
                .map(|(&z, &g)| if z > 0.0 { g } else { 0.0 })
                .collect(),
            Activation::Exu => z
                .iter()
                .zip(upstream)
                .map(|(&z, &g)| if z > 0.0 && z < 1.0 { g } else { 0.0 })
                .collect(),
            Activation::Identity => upstream.to_vec(),
            Activation::Sigmoid => a.iter().zip(upstream).map(|(&s, &g)| g * s * (1.0 - s)).collect(),
            Activation::Softmax => {
                let dot: f64 = a.iter().zip(upstream).map(|(s, g)| s * g).sum();
                a.iter().zip(upstream).map(|(&s, &g)| s * (g - dot)).collect()
            }
        }
    }
}
