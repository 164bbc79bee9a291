use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Tape, Tensor, Var};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    None,
}

fn activate<T: Scalar>(tape: &mut Tape<T>, y: Var, act: Activation) -> Result<Var> {
    match act {
        Activation::Relu => tape.relu(y),
        Activation::None => Ok(y),
    }
}

fn bind<T: Scalar>(tape: &mut Tape<T>, t: &Tensor<T>, trainable: bool) -> Var {
    if trainable {
        tape.param(t.clone())
    } else {
        tape.constant(t.clone())
    }
}

/// Output length of a valid window sweep: `floor((len - k) / stride) + 1`.
pub fn sweep_len(len: usize, k: usize, stride: usize) -> Result<usize> {
    if k == 0 || stride == 0 {
        return Err(Error::dim("window and stride must be at least 1"));
    }
    if len < k {
        return Err(Error::dim(format!("input length {len} shorter than window {k}")));
    }
    Ok((len - k) / stride + 1)
}

/// Glorot/Xavier uniform: `U(-l, l)` with `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<T: Scalar, R: Rng>(
    rng: &mut R,
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let dist = Uniform::new(-limit, limit).expect("finite positive limit");
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::from_f64(dist.sample(rng))).collect();
    Tensor::new(shape.to_vec(), data).expect("shape and data agree")
}

/// Valid 1-D convolution with weights `[filters, in_channels, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub stride: usize,
}

impl<T: Scalar> Conv1dLayer<T> {
    pub fn zeros(filters: usize, in_channels: usize, kernel: usize, stride: usize) -> Result<Self> {
        if kernel == 0 || stride == 0 || filters == 0 || in_channels == 0 {
            return Err(Error::dim("conv1d sizes must be at least 1"));
        }
        Ok(Conv1dLayer {
            weight: Tensor::zeros([filters, in_channels, kernel]),
            bias: Tensor::zeros([filters]),
            stride,
        })
    }

    pub fn new(weight: Tensor<T>, bias: Tensor<T>, stride: usize) -> Result<Self> {
        let ws = weight.shape();
        if ws.len() != 3 || bias.shape() != [ws[0]] || stride == 0 {
            return Err(Error::dim(format!(
                "conv1d weights {ws:?} / bias {:?} / stride {stride}",
                bias.shape()
            )));
        }
        Ok(Conv1dLayer {
            weight,
            bias,
            stride,
        })
    }

    pub fn filters(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn kernel(&self) -> usize {
        self.weight.shape()[2]
    }

    pub fn out_len(&self, len: usize) -> Result<usize> {
        sweep_len(len, self.kernel(), self.stride)
    }

    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let (f, c, k) = (self.filters(), self.in_channels(), self.kernel());
        self.weight = glorot_uniform(rng, &[f, c, k], c * k, f * k);
        self.bias = Tensor::zeros([f]);
    }

    /// Records the layer on `tape`; returns the output and the `[weight, bias]` vars.
    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        x: Var,
        act: Activation,
        trainable: bool,
    ) -> Result<(Var, [Var; 2])> {
        let w = bind(tape, &self.weight, trainable);
        let b = bind(tape, &self.bias, trainable);
        let y = tape.conv1d(x, w, b, self.stride)?;
        Ok((activate(tape, y, act)?, [w, b]))
    }

    /// Single-sample convenience: `[channels, len] -> [filters, L]`.
    pub fn apply(&self, x: &Tensor<T>, act: Activation) -> Result<Tensor<T>> {
        if x.rank() != 2 {
            return Err(Error::dim(format!("expected [channels, len], got {:?}", x.shape())));
        }
        let mut tape = Tape::new();
        let shape = [1, x.shape()[0], x.shape()[1]];
        let xv = tape.constant(x.clone().reshape(shape)?);
        let (y, _) = self.forward(&mut tape, xv, act, false)?;
        let out = tape.value(y).clone();
        let s = out.shape().to_vec();
        out.reshape([s[1], s[2]])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaxPool1dLayer {
    pub window: usize,
    pub stride: usize,
}

impl MaxPool1dLayer {
    pub fn new(window: usize, stride: usize) -> Result<Self> {
        if window == 0 || stride == 0 {
            return Err(Error::dim("pool window and stride must be at least 1"));
        }
        Ok(MaxPool1dLayer { window, stride })
    }

    pub fn out_len(&self, len: usize) -> Result<usize> {
        sweep_len(len, self.window, self.stride)
    }

    pub fn forward<T: Scalar>(&self, tape: &mut Tape<T>, x: Var) -> Result<Var> {
        tape.maxpool1d(x, self.window, self.stride)
    }

    /// `[c, len] -> [c, floor((len - window) / stride) + 1]`.
    pub fn apply<T: Scalar>(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() != 2 {
            return Err(Error::dim(format!("expected [channels, len], got {:?}", x.shape())));
        }
        let mut tape = Tape::new();
        let xv = tape.constant(x.clone().reshape([1, x.shape()[0], x.shape()[1]])?);
        let y = self.forward(&mut tape, xv)?;
        let out = tape.value(y).clone();
        let s = out.shape().to_vec();
        out.reshape([s[1], s[2]])
    }
}

/// Fully connected layer `y = x Wᵀ + b`, weights `[out, in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> DenseLayer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseLayer {
            weight: Tensor::zeros([outputs, inputs]),
            bias: Tensor::zeros([outputs]),
        }
    }

    pub fn new(weight: Tensor<T>, bias: Tensor<T>) -> Result<Self> {
        let ws = weight.shape();
        if ws.len() != 2 || bias.shape() != [ws[0]] {
            return Err(Error::dim(format!(
                "dense weights {ws:?} with bias {:?}",
                bias.shape()
            )));
        }
        Ok(DenseLayer { weight, bias })
    }

    pub fn inputs(&self) -> usize {
        self.weight.shape()[1]
    }

    pub fn outputs(&self) -> usize {
        self.weight.shape()[0]
    }

    pub fn init<R: Rng>(&mut self, rng: &mut R) {
        let (o, i) = (self.outputs(), self.inputs());
        self.weight = glorot_uniform(rng, &[o, i], i, o);
        self.bias = Tensor::zeros([o]);
    }

    pub fn forward(
        &self,
        tape: &mut Tape<T>,
        x: Var,
        act: Activation,
        trainable: bool,
    ) -> Result<(Var, [Var; 2])> {
        let w = bind(tape, &self.weight, trainable);
        let b = bind(tape, &self.bias, trainable);
        let y = tape.dense(x, w, Some(b))?;
        Ok((activate(tape, y, act)?, [w, b]))
    }
}
