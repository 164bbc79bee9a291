//! Raw vibration signal -> normalised 1000-bin magnitude spectrum.
//!
//! Pipeline: fixed-length segmentation, FFT magnitude, keep the left
//! (non-mirrored) half, divide by the largest bin.

mod fft;

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

pub use fft::FftPlan;

use crate::error::{Error, Result};

pub const SAMPLE_RATE_HZ: f64 = 12_000.0;
pub const SEGMENT_LEN: usize = 2000;
pub const SPECTRUM_LEN: usize = SEGMENT_LEN / 2;

#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl RawRecord {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz > 0.0) {
            return Err(Error::input(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        Ok(RawRecord {
            samples,
            sample_rate_hz,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    Max,
    None,
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Normalization::Max => "max",
            Normalization::None => "none",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Normalization::Max),
            "none" => Ok(Normalization::None),
            other => Err(Error::Config(format!(
                "normalize must be `max` or `none`, got `{other}`"
            ))),
        }
    }
}

/// Cuts `record` into windows of `segment_length` samples every `hop`
/// samples. A trailing partial window is dropped; a record shorter than one
/// window yields nothing (and a warning).
pub fn segment(record: &RawRecord, segment_length: usize, hop: usize) -> Result<Vec<Vec<f64>>> {
    if hop == 0 || segment_length == 0 {
        return Err(Error::input("segment length and hop must be at least 1"));
    }
    let len = record.samples.len();
    if len < segment_length {
        log::warn!("record of {len} samples is shorter than one {segment_length}-sample segment");
        return Ok(Vec::new());
    }
    let count = (len - segment_length) / hop + 1;
    Ok((0..count)
        .map(|i| record.samples[i * hop..i * hop + segment_length].to_vec())
        .collect())
}

fn plan_2000() -> &'static FftPlan {
    static PLAN: OnceLock<FftPlan> = OnceLock::new();
    PLAN.get_or_init(|| FftPlan::new(SEGMENT_LEN))
}

/// `|X_k|` for `k = 0..2000` of one segment.
pub fn fft_magnitude(segment: &[f64]) -> Result<Vec<f64>> {
    if segment.len() != SEGMENT_LEN {
        return Err(Error::dim(format!(
            "FFT expects {SEGMENT_LEN} samples, got {}",
            segment.len()
        )));
    }
    Ok(plan_2000()
        .forward_real(segment)
        .iter()
        .map(|c| c.norm())
        .collect())
}

/// Keeps bins `0..n/2` of an even-length magnitude spectrum.
pub fn clip_left_half(mags: &[f64]) -> Result<Vec<f64>> {
    if mags.len() % 2 != 0 {
        return Err(Error::dim(format!(
            "cannot halve a spectrum of odd length {}",
            mags.len()
        )));
    }
    Ok(mags[..mags.len() / 2].to_vec())
}

/// Divides by the largest magnitude so the peak bin is exactly 1.
pub fn normalize(spectrum: &[f64], mode: Normalization) -> Result<Vec<f64>> {
    match mode {
        Normalization::None => Ok(spectrum.to_vec()),
        Normalization::Max => {
            let peak = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(peak > 0.0) || !peak.is_finite() {
                return Err(Error::input("cannot normalise an all-zero or non-finite spectrum"));
            }
            Ok(spectrum.iter().map(|v| v / peak).collect())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub hop: usize,
    pub normalization: Normalization,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            hop: SEGMENT_LEN,
            normalization: Normalization::Max,
        }
    }
}

/// Full pipeline for one record; rejected (all-zero) segments are skipped.
pub fn preprocess(record: &RawRecord, cfg: &PipelineConfig) -> Result<Vec<Vec<f32>>> {
    let mut out = Vec::new();
    for (i, seg) in segment(record, SEGMENT_LEN, cfg.hop)?.iter().enumerate() {
        let half = clip_left_half(&fft_magnitude(seg)?)?;
        match normalize(&half, cfg.normalization) {
            Ok(spec) => out.push(spec.iter().map(|&v| v as f32).collect()),
            Err(e) => log::warn!("segment {i} rejected: {e}"),
        }
    }
    Ok(out)
}
