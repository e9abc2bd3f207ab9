//! Dense feed-forward substrate shared by the MLP, DBN and autoencoder code:
//! activations, layers with exact reverse-mode gradients, cross-entropy,
//! Xavier initialization, inverted dropout and the two optimizers.

mod activation;
mod dropout;
mod init;
mod layer;
mod loss;
mod optim;
mod train;

use ndarray::{Array1, Array2};
use thiserror::Error;

pub use activation::{sigmoid, Activation};
pub use dropout::{Dropout, DropoutSpec};
pub use init::{init_stack, xavier_init, xavier_init_rng};
pub use layer::{
    backward, backward_from_preactivation, forward, validate_stack, DenseLayer, ForwardCache, LayerGrad,
};
pub use loss::{cross_entropy, one_hot, softmax_cross_entropy_grad, CE_CLAMP};
pub use optim::{adadelta_step, sgd_momentum_step, Optimizer, OptimizerConfig, OptimizerKind};
pub use train::{argmax_rows, evaluate_classifier, train_classifier, EpochRecord, SupervisedParams};

/// Row-major 64-bit float matrix.
pub type Matrix = Array2<f64>;
pub type Vector = Array1<f64>;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;

pub(crate) fn shape_err(what: impl Into<String>) -> NnError {
    NnError::ShapeMismatch(what.into())
}
