//! Checkpoint files.
//!
//! Layout (little-endian): `"WDCK"`, u32 version, u32 config length, UTF-8
//! `key=value` lines, u32 parameter count, then per parameter a u16 name
//! length, the UTF-8 name, u8 rank, u32 dims and f32 data. Parameter names
//! carry an `f.`, `d.` or `c.` prefix for θ_f, θ_d and θ_c.

use std::fs;
use std::path::Path;

use crate::data::ByteReader;
use crate::error::{Error, Result};
use crate::nn::{Discriminator, FeatureExtractor, Parameters};
use crate::tensor::Tensor;
use crate::wdgrl::Critic;

use super::network::Network;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WDCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Trained parameters plus the configuration and selection metadata that
/// produced them. Parameters are stored in `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub network: Network<f32>,
    /// Configuration snapshot, in insertion order.
    pub config: Vec<(String, String)>,
    /// Iteration at which the parameters were captured.
    pub iteration: usize,
    /// Accuracy used for selection, when labels were available.
    pub accuracy: Option<f64>,
}

impl ModelCheckpoint {
    pub fn new(network: Network<f32>) -> Self {
        ModelCheckpoint {
            network,
            config: Vec::new(),
            iteration: 0,
            accuracy: None,
        }
    }

    pub fn config_value(&self, key: &str) -> Option<&str> {
        self.config
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut block = String::new();
        for (k, v) in &self.config {
            if k.contains(['=', '\n']) || v.contains('\n') || k.starts_with("meta.") {
                return Err(Error::input(format!("config entry `{k}` cannot be stored")));
            }
            block.push_str(&format!("{k}={v}\n"));
        }
        block.push_str(&format!("meta.iteration={}\n", self.iteration));
        match self.accuracy {
            Some(a) => block.push_str(&format!("meta.accuracy={a}\n")),
            None => block.push_str("meta.accuracy=none\n"),
        }

        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(block.len() as u32).to_le_bytes());
        out.extend_from_slice(block.as_bytes());
        let params = named_params(&self.network);
        out.extend_from_slice(&(params.len() as u32).to_le_bytes());
        for (name, t) in params {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(t.rank() as u8);
            for &d in t.shape() {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = ByteReader::new(bytes, path);
        r.magic(CHECKPOINT_MAGIC)?;
        let at = r.position();
        let version = r.u32("version")?;
        if version != CHECKPOINT_VERSION {
            return Err(r.error_at(at, format!("unsupported checkpoint version {version}")));
        }
        let len = r.u32("config length")? as usize;
        let at = r.position();
        let block = r.utf8(len, "config block")?;
        let mut config = Vec::new();
        let mut iteration = None;
        let mut accuracy = None;
        for line in block.lines() {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| r.error_at(at, format!("config line `{line}` lacks `=`")))?;
            match k {
                "meta.iteration" => {
                    iteration = Some(v.parse().map_err(|_| r.error_at(at, "bad meta.iteration"))?)
                }
                "meta.accuracy" => {
                    accuracy = Some(match v {
                        "none" => None,
                        _ => Some(v.parse().map_err(|_| r.error_at(at, "bad meta.accuracy"))?),
                    })
                }
                _ => config.push((k.to_string(), v.to_string())),
            }
        }
        let (Some(iteration), Some(accuracy)) = (iteration, accuracy) else {
            return Err(r.error_at(at, "config block lacks meta.iteration/meta.accuracy"));
        };

        let count = r.u32("parameter count")? as usize;
        let mut groups: [Vec<(String, Tensor<f32>)>; 3] = Default::default();
        for _ in 0..count {
            let at = r.position();
            let name_len = r.u16("name length")? as usize;
            let name = r.utf8(name_len, "parameter name")?;
            let rank = r.u8("rank")? as usize;
            if rank == 0 || rank > 4 {
                return Err(r.error_at(at, format!("{name}: rank {rank} not supported")));
            }
            let shape = (0..rank)
                .map(|_| r.u32("dimension").map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d));
            let n = match n {
                Some(n) if n > 0 && n <= bytes.len() / 4 => n,
                _ => return Err(r.error_at(at, format!("{name}: invalid shape {shape:?}"))),
            };
            let data = r.f32s(n, "parameter data")?;
            let tensor = Tensor::new(shape, data).map_err(|e| r.error_at(at, e.to_string()))?;
            let (slot, short) = match name.split_once('.') {
                Some(("f", s)) => (0, s),
                Some(("d", s)) => (1, s),
                Some(("c", s)) => (2, s),
                _ => return Err(r.error_at(at, format!("parameter `{name}` has no f./d./c. prefix"))),
            };
            groups[slot].push((short.to_string(), tensor));
        }
        let end = r.position();
        r.finish()?;

        let critic_shape = groups[2]
            .iter()
            .find(|(n, _)| n == "w1")
            .map(|(_, t)| t.shape().to_vec())
            .filter(|s| s.len() == 2)
            .ok_or_else(|| r.error_at(end, "critic w1 missing"))?;
        let mut network = Network {
            extractor: FeatureExtractor::standard(),
            discriminator: Discriminator::standard(),
            critic: Critic::zeros(critic_shape[1], critic_shape[0]),
        };
        let mismatch = |e: Error| r.error_at(end, format!("parameters do not fit the architecture: {e}"));
        network.extractor.assign(&groups[0]).map_err(mismatch)?;
        network.discriminator.assign(&groups[1]).map_err(mismatch)?;
        network.critic.assign(&groups[2]).map_err(mismatch)?;
        Ok(ModelCheckpoint {
            network,
            config,
            iteration,
            accuracy,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

fn named_params(net: &Network<f32>) -> Vec<(String, &Tensor<f32>)> {
    let mut out = Vec::new();
    for (prefix, list) in [
        ("f", net.extractor.named()),
        ("d", net.discriminator.named()),
        ("c", net.critic.named()),
    ] {
        out.extend(list.into_iter().map(|(n, t)| (format!("{prefix}.{n}"), t)));
    }
    out
}
