use rand::distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use super::Activation;
use crate::seed;
use crate::{Error, Result};

/// Weights and biases of one dense layer.
///
/// Weights are row-major with shape `(out_dim, in_dim)`. Dimensions are fixed
/// at construction; only the values are mutable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayer", into = "RawLayer")]
pub struct LayerParams {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl TryFrom<RawLayer> for LayerParams {
    type Error = Error;

    fn try_from(raw: RawLayer) -> Result<Self> {
        LayerParams::from_parts(raw.in_dim, raw.out_dim, raw.weights, raw.biases)
    }
}

impl From<LayerParams> for RawLayer {
    fn from(p: LayerParams) -> Self {
        RawLayer {
            in_dim: p.in_dim,
            out_dim: p.out_dim,
            weights: p.weights,
            biases: p.biases,
        }
    }
}

/// Xavier/Glorot uniform initialization: weights in `[-l, l]` with
/// `l = sqrt(6 / (in_dim + out_dim))`, biases zero.
pub fn xavier_init(in_dim: usize, out_dim: usize, rng_seed: u64) -> Result<LayerParams> {
    if in_dim == 0 || out_dim == 0 {
        return Err(Error::InvalidConfig(format!(
            "layer dimensions must be >= 1, got {in_dim}x{out_dim}"
        )));
    }
    let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
    let dist = Uniform::new_inclusive(-limit, limit).map_err(|e| Error::InvalidConfig(format!("xavier bound: {e}")))?;
    let mut rng = seed::rng(rng_seed);
    let weights = (0..in_dim * out_dim).map(|_| dist.sample(&mut rng)).collect();
    Ok(LayerParams {
        in_dim,
        out_dim,
        weights,
        biases: vec![0.0; out_dim],
    })
}

impl LayerParams {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Result<Self> {
        Self::from_parts(in_dim, out_dim, vec![0.0; in_dim * out_dim], vec![0.0; out_dim])
    }

    pub fn from_parts(in_dim: usize, out_dim: usize, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "layer dimensions must be >= 1, got {in_dim}x{out_dim}"
            )));
        }
        if weights.len() != in_dim * out_dim {
            return Err(Error::shape("layer weights", in_dim * out_dim, weights.len()));
        }
        if biases.len() != out_dim {
            return Err(Error::shape("layer biases", out_dim, biases.len()));
        }
        if !weights.iter().chain(&biases).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("layer parameters"));
        }
        Ok(Self {
            in_dim,
            out_dim,
            weights,
            biases,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.weights, &mut self.biases)
    }

    /// Pre-activation for this layer. ExU layers use exp-scaled weights and
    /// subtract the unit bias from the input before scaling.
    pub(crate) fn affine(&self, input: &[f64], activation: Activation) -> Vec<f64> {
        debug_assert_eq!(input.len(), self.in_dim);
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.biases)
            .map(|(row, &b)| match activation {
                Activation::Exu => row.iter().zip(input).map(|(&w, &x)| w.exp() * (x - b)).sum(),
                _ => row.iter().zip(input).fold(b, |acc, (&w, &x)| acc + w * x),
            })
            .collect()
    }

    /// Backward through the affine part given dL/dz. Returns
    /// `(dW, db, dx)`.
    pub(crate) fn affine_backward(
        &self,
        input: &[f64],
        dz: &[f64],
        activation: Activation,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut dw = vec![0.0; self.weights.len()];
        let mut db = vec![0.0; self.out_dim];
        let mut dx = vec![0.0; self.in_dim];
        for (j, ((row, dw_row), &g)) in self
            .weights
            .chunks_exact(self.in_dim)
            .zip(dw.chunks_exact_mut(self.in_dim))
            .zip(dz)
            .enumerate()
        {
            if g == 0.0 {
                continue;
            }
            match activation {
                Activation::Exu => {
                    let b = self.biases[j];
                    let mut scale_sum = 0.0;
                    for i in 0..self.in_dim {
                        let e = row[i].exp();
                        dw_row[i] = g * e * (input[i] - b);
                        dx[i] += g * e;
                        scale_sum += e;
                    }
                    db[j] = -g * scale_sum;
                }
                _ => {
                    for i in 0..self.in_dim {
                        dw_row[i] = g * input[i];
                        dx[i] += g * row[i];
                    }
                    db[j] = g;
                }
            }
        }
        (dw, db, dx)
    }
}
