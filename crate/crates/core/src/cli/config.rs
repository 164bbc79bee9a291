//! Flat `key = value` run configuration.
//!
//! Blank lines and text after `#` are ignored. Keys outside the schema are
//! rejected. Synthesis keys come as `synth.<field>` (both domains),
//! `source.<field>` or `target.<field>`; per-domain keys win.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::data::SynthConfig;
use crate::dsp::Normalization;
use crate::error::{Error, Result};
use crate::training::{AdaptConfig, Precision, DEFAULT_LAMBDA};

const TRAINING_KEYS: &[&str] = &[
    "batch_size",
    "critic_steps",
    "lr_critic",
    "lr_main",
    "rho",
    "lambda",
    "max_iterations",
    "optimizer",
    "seed",
    "normalize",
    "eval_every",
    "runs",
    "precision",
    "pretrain_iterations",
    "reinit_discriminator",
    "labeled_per_class",
];

const SYNTH_FIELDS: &[&str] = &[
    "n_per_class",
    "shaft_hz",
    "fault_multipliers",
    "noise_sigma",
    "harmonics",
    "sensor_attenuation",
    "fault_amplitude",
    "modulation_depth",
    "shaft_amplitude",
    "amplitude_jitter",
    "seed",
    "hop",
];

/// Everything a CLI invocation needs besides file paths.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub adapt: AdaptConfig,
    pub normalize: Normalization,
    /// Independent adaptation runs; run `r` uses seed `seed + r`.
    pub runs: usize,
    pub precision: Precision,
    /// Pretraining length; falls back to `max_iterations`.
    pub pretrain_iterations: Option<usize>,
    /// Draw this many labeled samples per class from `--labeled-target`
    /// instead of using every labeled sample in it.
    pub labeled_per_class: Option<usize>,
    pub source: SynthConfig,
    pub target: SynthConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        let adapt = AdaptConfig::default();
        let (source, target) = synth_defaults(adapt.seed);
        RunConfig {
            adapt,
            normalize: Normalization::Max,
            runs: 5,
            precision: Precision::F32,
            pretrain_iterations: None,
            labeled_per_class: None,
            source,
            target,
        }
    }
}

fn synth_defaults(seed: u64) -> (SynthConfig, SynthConfig) {
    let source = SynthConfig {
        domain: "source".into(),
        seed: seed.wrapping_mul(2).wrapping_add(1),
        ..SynthConfig::default()
    };
    let target = SynthConfig {
        domain: "target".into(),
        shaft_hz: 29.0,
        seed: seed.wrapping_mul(2).wrapping_add(2),
        ..SynthConfig::default()
    };
    (source, target)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let at = |line: usize, msg: String| Error::Config(format!("{}:{line}: {msg}", path.display()));
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| at(i + 1, format!("expected `key = value`, found `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !known_key(k) {
                return Err(at(i + 1, format!("unknown key `{k}`")));
            }
            if entries.iter().any(|(_, e, _)| e == k) {
                return Err(at(i + 1, format!("duplicate key `{k}`")));
            }
            entries.push((i + 1, k.to_string(), v.to_string()));
        }

        let mut cfg = RunConfig::default();
        let get = |key: &str| entries.iter().find(|(_, k, _)| k == key);
        let seed = match get("seed") {
            Some((line, _, v)) => parse_value::<u64>("seed", v).map_err(|e| at(*line, e))?,
            None => 0,
        };
        (cfg.source, cfg.target) = synth_defaults(seed);
        if get("lambda").is_none() {
            log::info!("{}: `lambda` not set, using default {DEFAULT_LAMBDA}", path.display());
        }

        let scopes = |k: &str| -> Option<(u8, String)> {
            for (tag, prefix) in [(0u8, "synth."), (1, "source."), (2, "target.")] {
                if let Some(field) = k.strip_prefix(prefix) {
                    return Some((tag, field.to_string()));
                }
            }
            None
        };
        // Shared synthesis keys first so per-domain keys override them.
        let mut ordered: Vec<&(usize, String, String)> = entries.iter().collect();
        ordered.sort_by_key(|(_, k, _)| scopes(k).map_or(0, |(tag, _)| tag.min(1)));
        for (line, key, value) in ordered {
            let res = match scopes(key) {
                Some((0, field)) => set_synth(&mut cfg.source, &field, value)
                    .and_then(|_| set_synth(&mut cfg.target, &field, value)),
                Some((1, field)) => set_synth(&mut cfg.source, &field, value),
                Some((_, field)) => set_synth(&mut cfg.target, &field, value),
                None => cfg.set(key, value),
            };
            res.map_err(|e| at(*line, e))?;
        }
        cfg.validate().map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let a = &mut self.adapt;
        match key {
            "batch_size" => a.batch_size = parse_value(key, v)?,
            "critic_steps" => a.critic_steps = parse_value(key, v)?,
            "lr_critic" => a.lr_critic = parse_value(key, v)?,
            "lr_main" => a.lr_main = parse_value(key, v)?,
            "rho" => a.rho = parse_value(key, v)?,
            "lambda" => a.lambda = parse_value(key, v)?,
            "max_iterations" => a.max_iterations = parse_value(key, v)?,
            "optimizer" => a.optimizer = parse_value(key, v)?,
            "seed" => a.seed = parse_value(key, v)?,
            "eval_every" => a.eval_every = parse_value(key, v)?,
            "reinit_discriminator" => a.reinit_discriminator = parse_value(key, v)?,
            "normalize" => {
                self.normalize = parse_value(key, v)?;
                self.source.pipeline.normalization = self.normalize;
                self.target.pipeline.normalization = self.normalize;
            }
            "runs" => self.runs = parse_value(key, v)?,
            "precision" => self.precision = parse_value(key, v)?,
            "pretrain_iterations" => self.pretrain_iterations = Some(parse_value(key, v)?),
            "labeled_per_class" => self.labeled_per_class = Some(parse_value(key, v)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.adapt.validate()?;
        if self.runs == 0 {
            return Err(Error::Config("runs must be >= 1".into()));
        }
        self.source.validate()?;
        self.target.validate()
    }

    /// Training settings for run `r`.
    pub fn run_config(&self, r: usize) -> AdaptConfig {
        AdaptConfig {
            seed: self.adapt.seed.wrapping_add(r as u64),
            ..self.adapt.clone()
        }
    }

    pub fn pretrain_config(&self) -> AdaptConfig {
        AdaptConfig {
            max_iterations: self.pretrain_iterations.unwrap_or(self.adapt.max_iterations),
            ..self.adapt.clone()
        }
    }

    /// Canonical text with every key spelled out; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.adapt.to_pairs() {
            let _ = writeln!(s, "{k} = {v}");
        }
        let _ = writeln!(s, "normalize = {}", self.normalize);
        let _ = writeln!(s, "runs = {}", self.runs);
        let _ = writeln!(s, "precision = {}", self.precision);
        if let Some(n) = self.pretrain_iterations {
            let _ = writeln!(s, "pretrain_iterations = {n}");
        }
        if let Some(n) = self.labeled_per_class {
            let _ = writeln!(s, "labeled_per_class = {n}");
        }
        for (prefix, c) in [("source", &self.source), ("target", &self.target)] {
            for (field, value) in synth_pairs(c) {
                let _ = writeln!(s, "{prefix}.{field} = {value}");
            }
        }
        s
    }
}

fn known_key(k: &str) -> bool {
    if TRAINING_KEYS.contains(&k) {
        return true;
    }
    ["synth.", "source.", "target."]
        .iter()
        .filter_map(|p| k.strip_prefix(p))
        .any(|f| SYNTH_FIELDS.contains(&f))
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("invalid value `{v}` for `{key}`"))
}

fn set_synth(c: &mut SynthConfig, field: &str, v: &str) -> std::result::Result<(), String> {
    match field {
        "n_per_class" => c.n_per_class = parse_value(field, v)?,
        "shaft_hz" => c.shaft_hz = parse_value(field, v)?,
        "fault_multipliers" => {
            let parts: Vec<f64> = v
                .split(',')
                .map(|p| parse_value(field, p.trim()))
                .collect::<std::result::Result<_, _>>()?;
            c.fault_multipliers = parts
                .try_into()
                .map_err(|_| format!("`{field}` needs three comma-separated values"))?;
        }
        "noise_sigma" => c.noise_sigma = parse_value(field, v)?,
        "harmonics" => c.harmonics = parse_value(field, v)?,
        "sensor_attenuation" => c.sensor_attenuation = parse_value(field, v)?,
        "fault_amplitude" => c.fault_amplitude = parse_value(field, v)?,
        "modulation_depth" => c.modulation_depth = parse_value(field, v)?,
        "shaft_amplitude" => c.shaft_amplitude = parse_value(field, v)?,
        "amplitude_jitter" => c.amplitude_jitter = parse_value(field, v)?,
        "seed" => c.seed = parse_value(field, v)?,
        "hop" => c.pipeline.hop = parse_value(field, v)?,
        _ => return Err(format!("unknown synthesis field `{field}`")),
    }
    Ok(())
}

fn synth_pairs(c: &SynthConfig) -> Vec<(&'static str, String)> {
    let m = c.fault_multipliers;
    vec![
        ("n_per_class", c.n_per_class.to_string()),
        ("shaft_hz", c.shaft_hz.to_string()),
        ("fault_multipliers", format!("{},{},{}", m[0], m[1], m[2])),
        ("noise_sigma", c.noise_sigma.to_string()),
        ("harmonics", c.harmonics.to_string()),
        ("sensor_attenuation", c.sensor_attenuation.to_string()),
        ("fault_amplitude", c.fault_amplitude.to_string()),
        ("modulation_depth", c.modulation_depth.to_string()),
        ("shaft_amplitude", c.shaft_amplitude.to_string()),
        ("amplitude_jitter", c.amplitude_jitter.to_string()),
        ("seed", c.seed.to_string()),
        ("hop", c.pipeline.hop.to_string()),
    ]
}
