//! Layers, losses, initialisation and optimisers.

mod layers;
mod loss;
mod model;
mod optim;

pub use layers::{glorot_uniform, sweep_len, Activation, Conv1dLayer, DenseLayer, MaxPool1dLayer};
pub use loss::{argmax, cross_entropy, softmax};
pub use model::{
    spectra_tensor, Discriminator, FeatureExtractor, Parameters, FEATURE_DIM, HIDDEN_UNITS,
    INPUT_LEN, NUM_CLASSES,
};
pub use optim::{Direction, Optimizer, OptimizerKind};
