//! Wasserstein-distance deep transfer learning for 1-D vibration spectra.

pub mod cli;
pub mod data;
pub mod dsp;
pub mod error;
pub mod eval;
mod fpenv;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod training;
pub mod wdgrl;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tensor::{Tape, Tensor, Var};
