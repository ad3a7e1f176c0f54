//! Dense-network substrate shared by the additive model and the plain DNN
//! baseline: layers, activations (including ExU), dropout, Xavier
//! initialization, backpropagation and optimizers. Double precision
//! throughout.

mod activation;
mod layer;
mod loss;
mod mlp;
mod optim;
mod params;

pub use activation::{sigmoid, softmax, Activation};
pub use layer::{xavier_init, LayerParams};
pub use loss::{loss_and_grad, probabilities};
pub use mlp::{Mlp, MlpGrads, Mode, Trace};
pub use optim::{Optimizer, OptimizerKind};
pub use params::{flatten_params, Gradients, Parameters};
