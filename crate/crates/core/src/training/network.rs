use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::nn::{argmax, spectra_tensor, Discriminator, FeatureExtractor, Parameters};
use crate::scalar::Scalar;
use crate::tensor::{Tape, Tensor};
use crate::wdgrl::Critic;

/// Rows per forward pass during inference.
const INFERENCE_CHUNK: usize = 128;

/// The three trainable parts: θ_f, θ_d and θ_c.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    pub extractor: FeatureExtractor<T>,
    pub discriminator: Discriminator<T>,
    pub critic: Critic<T>,
}

impl<T: Scalar> Network<T> {
    /// Standard architecture with Glorot-uniform weights drawn from `seed`.
    pub fn initialized(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut net = Network {
            extractor: FeatureExtractor::standard(),
            discriminator: Discriminator::standard(),
            critic: Critic::standard(),
        };
        net.extractor.init(&mut rng);
        net.discriminator.init(&mut rng);
        net.critic.init(&mut rng);
        net
    }

    /// Flattened extractor output `[rows, 896]`.
    pub fn features(&self, rows: &[&[f32]]) -> Result<Tensor<T>> {
        let mut data = Vec::new();
        let mut width = 0;
        for chunk in rows.chunks(INFERENCE_CHUNK) {
            let mut tape = Tape::new();
            let x = tape.constant(spectra_tensor(chunk)?);
            let (h, _) = self.extractor.forward(&mut tape, x, false)?;
            width = tape.shape(h)[1];
            data.extend_from_slice(tape.value(h).data());
        }
        Tensor::new([rows.len(), width], data)
    }

    /// Class probabilities `[rows, 4]`.
    pub fn probabilities(&self, rows: &[&[f32]]) -> Result<Tensor<T>> {
        let mut data = Vec::new();
        for chunk in rows.chunks(INFERENCE_CHUNK) {
            let mut tape = Tape::new();
            let x = tape.constant(spectra_tensor(chunk)?);
            let (h, _) = self.extractor.forward(&mut tape, x, false)?;
            let (p, _) = self.discriminator.forward(&mut tape, h, false)?;
            data.extend_from_slice(tape.value(p).data());
        }
        let classes = data.len() / rows.len().max(1);
        Tensor::new([rows.len(), classes], data)
    }

    /// Arg-max class per row.
    pub fn predict(&self, rows: &[&[f32]]) -> Result<Vec<usize>> {
        let p = self.probabilities(rows)?;
        let k = p.shape()[1];
        Ok(p.data().chunks_exact(k).map(argmax).collect())
    }

    pub fn cast<U: Scalar>(&self) -> Network<U> {
        let mut out = Network {
            extractor: FeatureExtractor::standard(),
            discriminator: Discriminator::standard(),
            critic: Critic::zeros(self.critic.input_dim(), self.critic.hidden_dim()),
        };
        cast_into(&self.extractor, &mut out.extractor);
        cast_into(&self.discriminator, &mut out.discriminator);
        cast_into(&self.critic, &mut out.critic);
        out
    }

    /// SHA-256 of θ_f, θ_d and θ_c (each over names, shapes and values).
    pub fn digests(&self) -> [String; 3] {
        [
            param_digest(&self.extractor),
            param_digest(&self.discriminator),
            param_digest(&self.critic),
        ]
    }
}

fn cast_into<T: Scalar, U: Scalar>(src: &impl Parameters<T>, dst: &mut impl Parameters<U>) {
    for ((_, s), d) in src.named().into_iter().zip(dst.tensors_mut()) {
        *d = s.cast();
    }
}

/// Hex SHA-256 over a parameter set; any bit change alters it.
pub fn param_digest<T: Scalar>(params: &impl Parameters<T>) -> String {
    let mut hasher = Sha256::new();
    for (name, t) in params.named() {
        hasher.update(name.as_bytes());
        for &d in t.shape() {
            hasher.update((d as u64).to_le_bytes());
        }
        for &v in t.data() {
            hasher.update(v.as_f64().to_bits().to_le_bytes());
        }
    }
    hex::encode(hasher.finalize())
}
