//! Source pretraining, the WD-DTL adaptation loop and checkpoints.

mod checkpoint;
mod config;
mod network;
mod trainer;

pub use checkpoint::{ModelCheckpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{AdaptConfig, Precision, DEFAULT_LAMBDA, LOCATION_LAMBDA};
pub use network::{param_digest, Network};
pub use trainer::{
    adapt, adapt_supervised, pretrain, AdaptTrainer, Batch, ExtractorPass, StepLosses, TrainOutcome,
};
