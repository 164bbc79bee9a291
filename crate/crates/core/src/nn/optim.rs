use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    /// `p <- p ∓ lr * g`
    Plain,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Plain => "plain",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "sgd" => Ok(OptimizerKind::Plain),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!(
                "optimizer must be `adam` or `plain`, got `{other}`"
            ))),
        }
    }
}

/// Critic steps ascend its objective; the classifier and extractor descend.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Descent,
    Ascent,
}

#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Self {
        Optimizer {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<T>],
        grads: &[Vec<T>],
        direction: Direction,
    ) -> Result<()> {
        if params.len() != grads.len() {
            return Err(Error::dim(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != g.len() {
                return Err(Error::dim(format!(
                    "parameter {i}: {} values but {} gradient entries",
                    p.len(),
                    g.len()
                )));
            }
        }
        if self.kind == OptimizerKind::Adam && self.m.is_empty() {
            self.m = params.iter().map(|p| vec![T::zero(); p.len()]).collect();
            self.v = self.m.clone();
        } else if self.kind == OptimizerKind::Adam && self.m.len() != params.len() {
            return Err(Error::dim("parameter list changed between optimizer steps"));
        }
        self.steps += 1;
        let sign = match direction {
            Direction::Descent => -1.0,
            Direction::Ascent => 1.0,
        };
        match self.kind {
            OptimizerKind::Plain => {
                let scale = T::from_f64(sign * self.learning_rate);
                for (p, g) in params.iter_mut().zip(grads) {
                    for (x, &d) in p.data_mut().iter_mut().zip(g) {
                        *x = *x + scale * d;
                    }
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps as i32;
                let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
                let c1 = T::one() - b1;
                let c2 = T::one() - b2;
                let bc1 = T::from_f64(1.0 - self.beta1.powi(t));
                let bc2 = T::from_f64(1.0 - self.beta2.powi(t));
                let eps = T::from_f64(self.epsilon);
                let lr = T::from_f64(sign * self.learning_rate);
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grads)
                    .zip(self.m.iter_mut())
                    .zip(self.v.iter_mut())
                {
                    for (((x, &d), mi), vi) in p
                        .data_mut()
                        .iter_mut()
                        .zip(g)
                        .zip(m.iter_mut())
                        .zip(v.iter_mut())
                    {
                        *mi = b1 * *mi + c1 * d;
                        *vi = b2 * *vi + c2 * d * d;
                        let mhat = *mi / bc1;
                        let vhat = *vi / bc2;
                        *x = *x + lr * mhat / (vhat.sqrt() + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
