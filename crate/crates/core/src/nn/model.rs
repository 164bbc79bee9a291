//! The convolutional feature extractor and the fully connected classifier
//! head ("discriminator").
//!
//! Shape chain on a 1000-bin spectrum:
//! `1x1000 -> conv1 8x491 -> pool 8x245 -> conv2 16x113 -> pool 16x56 -> 896`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Tape, Tensor, Var};

use super::layers::{Activation, Conv1dLayer, DenseLayer, MaxPool1dLayer};

pub const INPUT_LEN: usize = 1000;
pub const NUM_CLASSES: usize = 4;
pub const HIDDEN_UNITS: usize = 128;
pub const FEATURE_DIM: usize = 896;

/// Named access to a trainable parameter set, in a fixed order.
pub trait Parameters<T: Scalar> {
    fn named(&self) -> Vec<(&'static str, &Tensor<T>)>;

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>>;

    fn param_count(&self) -> usize {
        self.named().iter().map(|(_, t)| t.len()).sum()
    }

    /// Overwrites every tensor from `(name, tensor)` pairs; names and shapes
    /// must match exactly.
    fn assign(&mut self, values: &[(String, Tensor<T>)]) -> Result<()> {
        let expected: Vec<(String, Vec<usize>)> = self
            .named()
            .iter()
            .map(|(n, t)| (n.to_string(), t.shape().to_vec()))
            .collect();
        if expected.len() != values.len() {
            return Err(Error::dim(format!(
                "expected {} tensors, got {}",
                expected.len(),
                values.len()
            )));
        }
        for ((name, shape), (got_name, got)) in expected.iter().zip(values) {
            if name != got_name || shape.as_slice() != got.shape() {
                return Err(Error::dim(format!(
                    "parameter {name}{shape:?} does not match {got_name}{:?}",
                    got.shape()
                )));
            }
        }
        for (dst, (_, src)) in self.tensors_mut().into_iter().zip(values) {
            *dst = src.clone();
        }
        Ok(())
    }
}

/// Convolutional stack `r_f` with parameters θ_f.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor<T> {
    pub conv1: Conv1dLayer<T>,
    pub pool1: MaxPool1dLayer,
    pub conv2: Conv1dLayer<T>,
    pub pool2: MaxPool1dLayer,
}

impl<T: Scalar> FeatureExtractor<T> {
    /// Conv1 8@20/2, Pool 2/2, Conv2 16@20/2, Pool 2/2.
    pub fn standard() -> Self {
        FeatureExtractor {
            conv1: Conv1dLayer::zeros(8, 1, 20, 2).expect("valid sizes"),
            pool1: MaxPool1dLayer::new(2, 2).expect("valid sizes"),
            conv2: Conv1dLayer::zeros(16, 8, 20, 2).expect("valid sizes"),
            pool2: MaxPool1dLayer::new(2, 2).expect("valid sizes"),
        }
    }

    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        self.conv1.init(rng);
        self.conv2.init(rng);
    }

    /// Flattened output width for an input of `len` bins.
    pub fn output_dim(&self, len: usize) -> Result<usize> {
        let l = self.conv1.out_len(len)?;
        let l = self.pool1.out_len(l)?;
        let l = self.conv2.out_len(l)?;
        let l = self.pool2.out_len(l)?;
        Ok(self.conv2.filters() * l)
    }

    /// `x: [batch, 1, len]` -> `([batch, features], [conv1.w, conv1.b, conv2.w, conv2.b])`.
    pub fn forward(&self, tape: &mut Tape<T>, x: Var, trainable: bool) -> Result<(Var, Vec<Var>)> {
        let batch = tape.shape(x)[0];
        let (h, p1) = self.conv1.forward(tape, x, Activation::Relu, trainable)?;
        let h = self.pool1.forward(tape, h)?;
        let (h, p2) = self.conv2.forward(tape, h, Activation::Relu, trainable)?;
        let h = self.pool2.forward(tape, h)?;
        let width = tape.shape(h)[1] * tape.shape(h)[2];
        let h = tape.reshape(h, &[batch, width])?;
        Ok((h, p1.into_iter().chain(p2).collect()))
    }
}

impl<T: Scalar> Parameters<T> for FeatureExtractor<T> {
    fn named(&self) -> Vec<(&'static str, &Tensor<T>)> {
        vec![
            ("conv1.weight", &self.conv1.weight),
            ("conv1.bias", &self.conv1.bias),
            ("conv2.weight", &self.conv2.weight),
            ("conv2.bias", &self.conv2.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.conv1.weight,
            &mut self.conv1.bias,
            &mut self.conv2.weight,
            &mut self.conv2.bias,
        ]
    }
}

/// FC1 (ReLU) -> FC2 -> softmax, parameters θ_d.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator<T> {
    pub fc1: DenseLayer<T>,
    pub fc2: DenseLayer<T>,
}

impl<T: Scalar> Discriminator<T> {
    pub fn standard() -> Self {
        Discriminator {
            fc1: DenseLayer::zeros(FEATURE_DIM, HIDDEN_UNITS),
            fc2: DenseLayer::zeros(HIDDEN_UNITS, NUM_CLASSES),
        }
    }

    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        self.fc1.init(rng);
        self.fc2.init(rng);
    }

    /// `h: [batch, 896]` -> class probabilities `[batch, 4]`.
    pub fn forward(&self, tape: &mut Tape<T>, h: Var, trainable: bool) -> Result<(Var, Vec<Var>)> {
        let (z, p1) = self.fc1.forward(tape, h, Activation::Relu, trainable)?;
        let (z, p2) = self.fc2.forward(tape, z, Activation::None, trainable)?;
        let p = tape.softmax(z)?;
        Ok((p, p1.into_iter().chain(p2).collect()))
    }
}

impl<T: Scalar> Parameters<T> for Discriminator<T> {
    fn named(&self) -> Vec<(&'static str, &Tensor<T>)> {
        vec![
            ("fc1.weight", &self.fc1.weight),
            ("fc1.bias", &self.fc1.bias),
            ("fc2.weight", &self.fc2.weight),
            ("fc2.bias", &self.fc2.bias),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        vec![
            &mut self.fc1.weight,
            &mut self.fc1.bias,
            &mut self.fc2.weight,
            &mut self.fc2.bias,
        ]
    }
}

/// Packs `[batch][len]` spectra into a `[batch, 1, len]` tensor.
pub fn spectra_tensor<T: Scalar>(rows: &[&[f32]]) -> Result<Tensor<T>> {
    let len = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != len) {
        return Err(Error::dim("spectra in a batch must share one length"));
    }
    let data = rows
        .iter()
        .flat_map(|r| r.iter().map(|&v| T::from_f64(v as f64)))
        .collect();
    Tensor::new([rows.len(), 1, len], data)
}
