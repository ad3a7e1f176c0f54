//! Neural additive model: one small network per feature, combined by a
//! linear head.
//!
//! For class `c` the logit is
//!
//! ```text
//! logit_c(x) = bias_c + sum_k output_weights[c, k] * f_k(x_k)
//! ```
//!
//! where each `f_k` is a [`FeatureNet`] that sees only its own coordinate.
//! The head has no activation, so every prediction decomposes exactly into
//! per-feature terms.

mod io;

use serde::{Deserialize, Serialize};

pub use io::MODEL_SCHEMA_VERSION;

use crate::nn::{probabilities, Activation, Gradients, LayerParams, Mlp, MlpGrads, Mode, Parameters, Trace};
use crate::seed;
use crate::task::Task;
use crate::{Error, Result};

/// Hidden unit used in the first layer of each feature net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HiddenUnit {
    #[default]
    Relu,
    /// ExU first layer followed by ReLU layers.
    Exu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NamConfig {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub unit: HiddenUnit,
    pub dropout: f64,
}

impl Default for NamConfig {
    fn default() -> Self {
        Self {
            hidden_layers: 3,
            hidden_units: 20,
            unit: HiddenUnit::Relu,
            dropout: 0.0,
        }
    }
}

impl NamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers == 0 || self.hidden_units == 0 {
            return Err(Error::InvalidConfig(
                "feature nets need at least one hidden layer with one unit".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout must be in [0, 1), got {}",
                self.dropout
            )));
        }
        Ok(())
    }

    fn dims(&self) -> Vec<usize> {
        std::iter::once(1)
            .chain(std::iter::repeat(self.hidden_units).take(self.hidden_layers))
            .chain(std::iter::once(1))
            .collect()
    }

    fn activations(&self) -> Vec<Activation> {
        (0..=self.hidden_layers)
            .map(|l| match (l, self.unit) {
                (l, _) if l == self.hidden_layers => Activation::Identity,
                (0, HiddenUnit::Exu) => Activation::Exu,
                _ => Activation::Relu,
            })
            .collect()
    }
}

/// Univariate shape network `f_k`: scalar in, scalar out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureNet {
    pub feature_index: usize,
    pub mlp: Mlp,
}

impl FeatureNet {
    pub fn new(feature_index: usize, mlp: Mlp) -> Result<Self> {
        if mlp.in_dim() != 1 || mlp.out_dim() != 1 {
            return Err(Error::InvalidConfig(format!(
                "feature net {feature_index} must map 1 -> 1, got {} -> {}",
                mlp.in_dim(),
                mlp.out_dim()
            )));
        }
        Ok(Self { feature_index, mlp })
    }

    /// `f_k(x)` in inference mode.
    pub fn eval(&self, x: f64) -> f64 {
        // Shape is guaranteed by construction.
        self.mlp.infer(&[x]).map(|v| v[0]).unwrap_or(f64::NAN)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NamModel {
    feature_names: Vec<String>,
    task: Task,
    nets: Vec<FeatureNet>,
    /// Row-major `(C_out, K)`.
    output_weights: Vec<f64>,
    output_bias: Vec<f64>,
}

/// Result of [`NamModel::forward`].
#[derive(Debug, Clone)]
pub struct NamForward {
    pub logits: Vec<f64>,
    /// Row-major `(C_out, K)`: `terms[c*K + k] = output_weights[c,k] * f_k(x_k)`.
    pub terms: Vec<f64>,
    /// `f_k(x_k)` for every feature.
    pub feature_outputs: Vec<f64>,
    traces: Vec<Trace>,
}

/// Gradients for all feature nets and the head, plus d(upstream)/dx.
#[derive(Debug, Clone)]
pub struct NamGrads {
    pub nets: Vec<MlpGrads>,
    pub output_weights: Vec<f64>,
    pub output_bias: Vec<f64>,
    pub input: Vec<f64>,
}

impl NamGrads {
    /// Flattens into [`Parameters`] order: nets, then head weights, then bias.
    pub fn into_gradients(self) -> Gradients {
        let mut tensors: Vec<Vec<f64>> = self.nets.into_iter().flat_map(|g| g.into_gradients().0).collect();
        tensors.push(self.output_weights);
        tensors.push(self.output_bias);
        Gradients(tensors)
    }
}

/// One feature's share of a prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTerm {
    pub feature_index: usize,
    pub name: String,
    /// One value per logit.
    pub values: Vec<f64>,
}

impl FeatureTerm {
    /// Mean absolute value over logits, used for ordering.
    pub fn magnitude(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub bias: Vec<f64>,
    pub terms: Vec<FeatureTerm>,
    pub logits: Vec<f64>,
}

impl Decomposition {
    /// Terms ordered by decreasing magnitude; ties keep feature order.
    pub fn ranked(&self) -> Vec<&FeatureTerm> {
        let mut out: Vec<&FeatureTerm> = self.terms.iter().collect();
        out.sort_by(|a, b| b.magnitude().total_cmp(&a.magnitude()));
        out
    }

    /// `bias + sum(terms)` per logit.
    pub fn reconstruct(&self) -> Vec<f64> {
        self.bias
            .iter()
            .enumerate()
            .map(|(c, &b)| b + self.terms.iter().map(|t| t.values[c]).sum::<f64>())
            .collect()
    }
}

impl NamModel {
    /// Xavier-initialized model. Feature net `k` is seeded from `(seed, k)`;
    /// the head from a separate stream.
    pub fn new(feature_names: Vec<String>, task: Task, config: &NamConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        if feature_names.is_empty() {
            return Err(Error::InvalidConfig("a model needs at least one feature".into()));
        }
        let k = feature_names.len();
        let nets = (0..k)
            .map(|i| {
                let s = seed::derive(seed, &[seed::tag::INIT, i as u64]);
                FeatureNet::new(i, Mlp::xavier(&config.dims(), config.activations(), config.dropout, s)?)
            })
            .collect::<Result<Vec<_>>>()?;
        let head = crate::nn::xavier_init(k, task.outputs(), seed::derive(seed, &[seed::tag::INIT, u64::MAX]))?;
        Ok(Self {
            feature_names,
            task,
            nets,
            output_weights: head.weights().to_vec(),
            output_bias: head.biases().to_vec(),
        })
    }

    pub fn from_parts(
        feature_names: Vec<String>,
        task: Task,
        nets: Vec<FeatureNet>,
        output_weights: Vec<f64>,
        output_bias: Vec<f64>,
    ) -> Result<Self> {
        let k = feature_names.len();
        if k == 0 {
            return Err(Error::InvalidConfig("a model needs at least one feature".into()));
        }
        if nets.len() != k {
            return Err(Error::shape("feature nets", k, nets.len()));
        }
        for (i, net) in nets.iter().enumerate() {
            if net.feature_index != i {
                return Err(Error::InvalidConfig(format!(
                    "feature net at position {i} claims feature {}",
                    net.feature_index
                )));
            }
        }
        if output_weights.len() != k * task.outputs() {
            return Err(Error::shape("output weights", k * task.outputs(), output_weights.len()));
        }
        if output_bias.len() != task.outputs() {
            return Err(Error::shape("output bias", task.outputs(), output_bias.len()));
        }
        if !output_weights.iter().chain(&output_bias).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("output head"));
        }
        Ok(Self {
            feature_names,
            task,
            nets,
            output_weights,
            output_bias,
        })
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn num_features(&self) -> usize {
        self.nets.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.task.outputs()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_nets(&self) -> &[FeatureNet] {
        &self.nets
    }

    pub fn feature_net_mut(&mut self, k: usize) -> &mut FeatureNet {
        &mut self.nets[k]
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.output_weights
    }

    pub fn output_weights_mut(&mut self) -> &mut [f64] {
        &mut self.output_weights
    }

    pub fn output_bias(&self) -> &[f64] {
        &self.output_bias
    }

    pub fn output_bias_mut(&mut self) -> &mut [f64] {
        &mut self.output_bias
    }

    pub fn output_weight(&self, class: usize, feature: usize) -> f64 {
        self.output_weights[class * self.nets.len() + feature]
    }

    /// Effective shape `g_{c,k}(x) = output_weights[c,k] * f_k(x)`.
    pub fn effective_shape(&self, class: usize, feature: usize, x: f64) -> f64 {
        self.output_weight(class, feature) * self.nets[feature].eval(x)
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.nets.len() {
            return Err(Error::shape("model input", self.nets.len(), x.len()));
        }
        Ok(())
    }

    /// Full forward pass. In train mode, feature net `k` draws its dropout
    /// mask from `(seed, k)`.
    pub fn forward(&self, x: &[f64], mode: Mode, seed: u64) -> Result<NamForward> {
        self.check_len(x)?;
        let k = self.nets.len();
        let mut feature_outputs = Vec::with_capacity(k);
        let mut traces = Vec::with_capacity(k);
        for (i, net) in self.nets.iter().enumerate() {
            let (out, trace) = net
                .mlp
                .forward(&[x[i]], mode, seed::derive(seed, &[seed::tag::DROPOUT, i as u64]))?;
            feature_outputs.push(out[0]);
            traces.push(trace);
        }
        Ok(self.head(feature_outputs, traces))
    }

    fn head(&self, feature_outputs: Vec<f64>, traces: Vec<Trace>) -> NamForward {
        let k = self.nets.len();
        let terms: Vec<f64> = self
            .output_weights
            .chunks_exact(k)
            .flat_map(|row| row.iter().zip(&feature_outputs).map(|(w, f)| w * f))
            .collect();
        let logits = self
            .output_bias
            .iter()
            .zip(terms.chunks_exact(k))
            .map(|(&b, row)| b + row.iter().sum::<f64>())
            .collect();
        NamForward {
            logits,
            terms,
            feature_outputs,
            traces,
        }
    }

    /// Inference-mode logits.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x)?;
        let outputs: Vec<f64> = self.nets.iter().zip(x).map(|(n, &v)| n.eval(v)).collect();
        Ok(self.head(outputs, Vec::new()).logits)
    }

    /// Backward pass from dL/d(logits).
    pub fn backward(&self, forward: &NamForward, dlogits: &[f64]) -> Result<NamGrads> {
        let k = self.nets.len();
        let c_out = self.task.outputs();
        if forward.traces.len() != k || forward.feature_outputs.len() != k {
            return Err(Error::StaleCache);
        }
        if dlogits.len() != c_out {
            return Err(Error::shape("logit gradient", c_out, dlogits.len()));
        }
        let output_weights: Vec<f64> = dlogits
            .iter()
            .flat_map(|&g| forward.feature_outputs.iter().map(move |&f| g * f))
            .collect();
        let output_bias = dlogits.to_vec();
        let mut nets = Vec::with_capacity(k);
        let mut input = Vec::with_capacity(k);
        for (i, (net, trace)) in self.nets.iter().zip(&forward.traces).enumerate() {
            let df: f64 = (0..c_out).map(|c| dlogits[c] * self.output_weights[c * k + i]).sum();
            let g = net.mlp.backward(trace, &[df])?;
            input.push(g.input[0]);
            nets.push(g);
        }
        Ok(NamGrads {
            nets,
            output_weights,
            output_bias,
            input,
        })
    }

    /// Class probabilities through the inverse link (sigmoid or softmax).
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(probabilities(&self.logits(x)?, self.task))
    }

    /// Splits a prediction into bias plus one term per feature.
    pub fn decompose(&self, x: &[f64]) -> Result<Decomposition> {
        let fwd = self.forward(x, Mode::Infer, 0)?;
        let k = self.nets.len();
        let terms = (0..k)
            .map(|i| FeatureTerm {
                feature_index: i,
                name: self.feature_names[i].clone(),
                values: (0..self.task.outputs()).map(|c| fwd.terms[c * k + i]).collect(),
            })
            .collect();
        Ok(Decomposition {
            bias: self.output_bias.clone(),
            terms,
            logits: fwd.logits,
        })
    }
}

impl Parameters for NamModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = self.nets.iter().flat_map(|n| n.mlp.tensors()).collect();
        t.push(&self.output_weights);
        t.push(&self.output_bias);
        t
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = self.nets.iter_mut().flat_map(|n| n.mlp.tensors_mut()).collect();
        t.push(&mut self.output_weights);
        t.push(&mut self.output_bias);
        t
    }
}

/// Builds a feature net computing `f(x) = slope * x` exactly (single
/// identity layer). Handy for hand-checkable models.
pub fn linear_feature_net(feature_index: usize, slope: f64) -> Result<FeatureNet> {
    let layer = LayerParams::from_parts(1, 1, vec![slope], vec![0.0])?;
    FeatureNet::new(feature_index, Mlp::new(vec![layer], vec![Activation::Identity], 0.0)?)
}
