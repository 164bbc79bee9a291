use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::nn::OptimizerKind;
use crate::wdgrl::DEFAULT_RHO;

/// Confusion weight for a speed-like shift.
pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Confusion weight suggested for a location-like shift.
pub const LOCATION_LAMBDA: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" | "32" => Ok(Precision::F32),
            "f64" | "64" => Ok(Precision::F64),
            other => Err(Error::Config(format!("precision must be f32 or f64, got `{other}`"))),
        }
    }
}

/// Hyperparameters of pretraining and of the adaptation loop.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptConfig {
    /// Minibatch size `n` (per domain).
    pub batch_size: usize,
    /// Critic steps `C` per iteration.
    pub critic_steps: usize,
    /// Critic learning rate α1.
    pub lr_critic: f64,
    /// Discriminator and extractor learning rate α2.
    pub lr_main: f64,
    /// Gradient penalty weight ρ.
    pub rho: f64,
    /// Domain confusion weight λ.
    pub lambda: f64,
    pub max_iterations: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub eval_every: usize,
    /// Start adaptation from a freshly initialised discriminator instead of
    /// the pretrained head.
    pub reinit_discriminator: bool,
}

impl Default for AdaptConfig {
    fn default() -> Self {
        AdaptConfig {
            batch_size: 32,
            critic_steps: 10,
            lr_critic: 1e-3,
            lr_main: 2e-4,
            rho: DEFAULT_RHO,
            lambda: DEFAULT_LAMBDA,
            max_iterations: 5000,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            eval_every: 100,
            reinit_discriminator: false,
        }
    }
}

impl AdaptConfig {
    /// `C = 0` is accepted only together with `λ = 0`, where it reduces the
    /// loop to continued source training.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.batch_size < 2 {
            return bad(format!("batch_size must be >= 2, got {}", self.batch_size));
        }
        for (name, v) in [("lr_critic", self.lr_critic), ("lr_main", self.lr_main)] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be > 0, got {v}"));
            }
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be >= 0, got {}", self.rho));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if self.critic_steps == 0 && self.lambda != 0.0 {
            return bad("critic_steps must be >= 1 unless lambda = 0".into());
        }
        if self.eval_every == 0 {
            return bad("eval_every must be >= 1".into());
        }
        Ok(())
    }

    /// `key=value` pairs stored in checkpoints and run reports.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        [
            ("batch_size", self.batch_size.to_string()),
            ("critic_steps", self.critic_steps.to_string()),
            ("lr_critic", self.lr_critic.to_string()),
            ("lr_main", self.lr_main.to_string()),
            ("rho", self.rho.to_string()),
            ("lambda", self.lambda.to_string()),
            ("max_iterations", self.max_iterations.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("seed", self.seed.to_string()),
            ("eval_every", self.eval_every.to_string()),
            ("reinit_discriminator", self.reinit_discriminator.to_string()),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
    }
}
