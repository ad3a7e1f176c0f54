use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{xavier_init, Activation, Gradients, LayerParams, Parameters};
use crate::seed;
use crate::{Error, Result};

static NEXT_TOKEN: AtomicU64 = AtomicU64::new(1);

fn fresh_token() -> u64 {
    NEXT_TOKEN.fetch_add(1, Ordering::Relaxed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Dense feed-forward network. Dropout is applied after every hidden
/// activation in train mode, never after the output layer.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawMlp", into = "RawMlp")]
pub struct Mlp {
    layers: Vec<LayerParams>,
    activations: Vec<Activation>,
    dropout: f64,
    // Changes whenever parameters may have changed; traces record it.
    token: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMlp {
    layers: Vec<LayerParams>,
    activations: Vec<Activation>,
    dropout: f64,
}

impl TryFrom<RawMlp> for Mlp {
    type Error = Error;
    fn try_from(raw: RawMlp) -> Result<Self> {
        Mlp::new(raw.layers, raw.activations, raw.dropout)
    }
}

impl From<Mlp> for RawMlp {
    fn from(m: Mlp) -> Self {
        RawMlp {
            layers: m.layers,
            activations: m.activations,
            dropout: m.dropout,
        }
    }
}

impl PartialEq for Mlp {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers && self.activations == other.activations && self.dropout == other.dropout
    }
}

/// Everything backward needs from a forward call.
#[derive(Debug, Clone)]
pub struct Trace {
    token: u64,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
}

/// Per-layer parameter gradients plus the gradient with respect to the input.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl MlpGrads {
    /// Flattens into the [`Parameters`] tensor order of the network.
    pub fn into_gradients(self) -> Gradients {
        Gradients(
            self.weights
                .into_iter()
                .zip(self.biases)
                .flat_map(|(w, b)| [w, b])
                .collect(),
        )
    }
}

impl Mlp {
    pub fn new(layers: Vec<LayerParams>, activations: Vec<Activation>, dropout: f64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("an MLP needs at least one layer".into()));
        }
        if activations.len() != layers.len() {
            return Err(Error::shape("activations per layer", layers.len(), activations.len()));
        }
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::shape("layer chaining", pair[0].out_dim(), pair[1].in_dim()));
            }
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(Error::InvalidConfig(format!(
                "dropout must be in [0, 1), got {dropout}"
            )));
        }
        Ok(Self {
            layers,
            activations,
            dropout,
            token: fresh_token(),
        })
    }

    /// Builds a Xavier-initialized network with layer sizes `dims`
    /// (`dims[0]` is the input width). Layer `l` is seeded from `(seed, l)`.
    pub fn xavier(dims: &[usize], activations: Vec<Activation>, dropout: f64, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig("need an input and an output width".into()));
        }
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, d)| xavier_init(d[0], d[1], seed::derive(seed, &[seed::tag::INIT, l as u64])))
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers, activations, dropout)
    }

    pub fn layers(&self) -> &[LayerParams] {
        &self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Mutable access to one layer. Invalidates outstanding traces.
    pub fn layer_mut(&mut self, index: usize) -> &mut LayerParams {
        self.token = fresh_token();
        &mut self.layers[index]
    }

    /// Forward pass. Train mode draws inverted-dropout masks from a stream
    /// seeded by `rng_seed`; infer mode ignores the seed.
    pub fn forward(&self, input: &[f64], mode: Mode, rng_seed: u64) -> Result<(Vec<f64>, Trace)> {
        if mode == Mode::Train && self.dropout > 0.0 {
            let mut rng = seed::rng(rng_seed);
            self.forward_impl(input, Some(&mut rng))
        } else {
            self.forward_impl::<rand_chacha::ChaCha8Rng>(input, None)
        }
    }

    /// Dropout-free forward pass without keeping a trace.
    pub fn infer(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        for (layer, &act) in self.layers.iter().zip(&self.activations) {
            x = act.apply(&layer.affine(&x, act));
        }
        Ok(x)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.in_dim() {
            return Err(Error::shape("mlp input", self.in_dim(), input.len()));
        }
        Ok(())
    }

    fn forward_impl<R: Rng>(&self, input: &[f64], mut rng: Option<&mut R>) -> Result<(Vec<f64>, Trace)> {
        self.check_input(input)?;
        let n = self.layers.len();
        let mut trace = Trace {
            token: self.token,
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
        };
        let keep_scale = 1.0 / (1.0 - self.dropout);
        let mut x = input.to_vec();
        for (l, (layer, &act)) in self.layers.iter().zip(&self.activations).enumerate() {
            let z = layer.affine(&x, act);
            let a = act.apply(&z);
            let hidden = l + 1 < n;
            let mask = match rng.as_deref_mut() {
                Some(rng) if hidden => Some(
                    (0..a.len())
                        .map(|_| {
                            if rng.random::<f64>() < self.dropout {
                                0.0
                            } else {
                                keep_scale
                            }
                        })
                        .collect::<Vec<f64>>(),
                ),
                _ => None,
            };
            let next = match &mask {
                Some(m) => a.iter().zip(m).map(|(v, s)| v * s).collect(),
                None => a.clone(),
            };
            trace.inputs.push(std::mem::replace(&mut x, next));
            trace.pre.push(z);
            trace.post.push(a);
            trace.masks.push(mask);
        }
        Ok((x, trace))
    }

    /// Reverse-mode pass. `output_grad` is dL/d(output).
    pub fn backward(&self, trace: &Trace, output_grad: &[f64]) -> Result<MlpGrads> {
        if trace.token != self.token || trace.inputs.len() != self.layers.len() {
            return Err(Error::StaleCache);
        }
        if output_grad.len() != self.out_dim() {
            return Err(Error::shape("output gradient", self.out_dim(), output_grad.len()));
        }
        let n = self.layers.len();
        let mut weights = vec![Vec::new(); n];
        let mut biases = vec![Vec::new(); n];
        let mut upstream = output_grad.to_vec();
        for l in (0..n).rev() {
            let act = self.activations[l];
            if let Some(mask) = &trace.masks[l] {
                for (g, m) in upstream.iter_mut().zip(mask) {
                    *g *= m;
                }
            }
            let dz = act.vjp(&trace.pre[l], &trace.post[l], &upstream);
            let (dw, db, dx) = self.layers[l].affine_backward(&trace.inputs[l], &dz, act);
            weights[l] = dw;
            biases[l] = db;
            upstream = dx;
        }
        Ok(MlpGrads {
            weights,
            biases,
            input: upstream,
        })
    }
}

impl Parameters for Mlp {
    fn tensors(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weights(), l.biases()]).collect()
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        self.token = fresh_token();
        self.layers
            .iter_mut()
            .flat_map(|l| {
                let (w, b) = l.parts_mut();
                [w, b]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64, b: f64, act: Activation) -> Mlp {
        Mlp::new(
            vec![LayerParams::from_parts(1, 1, vec![w], vec![b]).unwrap()],
            vec![act],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_pass_bias_through() {
        let m = single(0.0, 0.5, Activation::Identity);
        let (out, _) = m.forward(&[7.0], Mode::Infer, 0).unwrap();
        assert_eq!(out, vec![0.5]);
    }

    #[test]
    fn relu_clamps_negative() {
        let m = single(2.0, 0.0, Activation::Relu);
        assert_eq!(m.forward(&[-3.0], Mode::Infer, 0).unwrap().0, vec![0.0]);
    }

    #[test]
    fn exu_identity_at_zero_params() {
        let m = single(0.0, 0.0, Activation::Exu);
        assert_eq!(m.forward(&[0.4], Mode::Infer, 0).unwrap().0, vec![0.4]);
    }

    #[test]
    fn product_rule_single_weight() {
        let m = single(3.0, 0.0, Activation::Identity);
        let (_, trace) = m.forward(&[2.0], Mode::Infer, 0).unwrap();
        let g = m.backward(&trace, &[1.0]).unwrap();
        assert_eq!(g.weights[0], vec![2.0]);
        assert_eq!(g.biases[0], vec![1.0]);
        assert_eq!(g.input, vec![3.0]);
    }

    #[test]
    fn zero_output_grad_gives_zero_gradients() {
        let m = Mlp::xavier(&[3, 5, 2], vec![Activation::Relu, Activation::Identity], 0.0, 9).unwrap();
        let (_, trace) = m.forward(&[0.3, -1.0, 2.0], Mode::Infer, 0).unwrap();
        let g = m.backward(&trace, &[0.0, 0.0]).unwrap().into_gradients();
        assert!(g.flatten().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn input_length_checked() {
        let m = single(1.0, 0.0, Activation::Identity);
        assert!(matches!(
            m.forward(&[1.0, 2.0], Mode::Infer, 0),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn stale_trace_rejected() {
        let mut m = single(1.0, 0.0, Activation::Identity);
        let (_, trace) = m.forward(&[1.0], Mode::Infer, 0).unwrap();
        m.tensors_mut()[0][0] = 2.0;
        assert!(matches!(m.backward(&trace, &[1.0]), Err(Error::StaleCache)));

        let other = single(1.0, 0.0, Activation::Identity);
        let (_, foreign) = other.forward(&[1.0], Mode::Infer, 0).unwrap();
        assert!(matches!(m.backward(&foreign, &[1.0]), Err(Error::StaleCache)));
    }

    #[test]
    fn layer_chaining_validated() {
        let a = LayerParams::zeros(2, 3).unwrap();
        let b = LayerParams::zeros(4, 1).unwrap();
        assert!(Mlp::new(vec![a, b], vec![Activation::Relu, Activation::Identity], 0.0).is_err());
    }

    #[test]
    fn dropout_rate_validated() {
        let a = LayerParams::zeros(1, 1).unwrap();
        assert!(Mlp::new(vec![a.clone()], vec![Activation::Identity], 1.0).is_err());
        assert!(Mlp::new(vec![a], vec![Activation::Identity], -0.1).is_err());
    }

    #[test]
    fn infer_mode_ignores_dropout_and_seed() {
        let m = Mlp::xavier(&[2, 8, 1], vec![Activation::Relu, Activation::Identity], 0.5, 1).unwrap();
        let a = m.forward(&[0.5, -0.2], Mode::Infer, 1).unwrap().0;
        let b = m.forward(&[0.5, -0.2], Mode::Infer, 999).unwrap().0;
        assert_eq!(a, b);
        assert_eq!(a, m.infer(&[0.5, -0.2]).unwrap());
    }
}
