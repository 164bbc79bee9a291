//! Deterministic synthetic bearing vibration data.
//!
//! Every class shares Gaussian sensor noise (plus an optional shaft line).
//! A fault adds a harmonic series at its characteristic frequency
//! `multiplier * shaft_hz`, amplitude-modulated at the shaft rate and scaled by
//! the sensor attenuation. Changing `shaft_hz` moves every fault line (a
//! speed-like domain shift); lowering `sensor_attenuation` and raising the
//! noise buries them (a location-like shift).

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::dsp::{preprocess, PipelineConfig, RawRecord, SAMPLE_RATE_HZ, SEGMENT_LEN};
use crate::error::{Error, Result};

use super::dataset::{Class, Dataset, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub domain: String,
    pub n_per_class: usize,
    pub shaft_hz: f64,
    /// Characteristic frequency ratios for inner race, outer race, roller.
    pub fault_multipliers: [f64; 3],
    pub noise_sigma: f64,
    pub harmonics: usize,
    /// In `(0, 1]`; scales the fault signature reaching the sensor.
    pub sensor_attenuation: f64,
    pub fault_amplitude: f64,
    /// Depth of the shaft-rate amplitude modulation, in `[0, 1]`.
    pub modulation_depth: f64,
    pub shaft_amplitude: f64,
    /// Per-segment relative amplitude jitter, in `[0, 1)`.
    pub amplitude_jitter: f64,
    pub seed: u64,
    pub pipeline: PipelineConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            domain: "synthetic".into(),
            n_per_class: 256,
            shaft_hz: 30.0,
            fault_multipliers: [5.4, 3.6, 4.7],
            noise_sigma: 1.0,
            harmonics: 8,
            sensor_attenuation: 1.0,
            fault_amplitude: 1.0,
            modulation_depth: 0.5,
            shaft_amplitude: 0.0,
            amplitude_jitter: 0.2,
            seed: 0,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.shaft_hz > 0.0) {
            return bad(format!("shaft_hz must be > 0, got {}", self.shaft_hz));
        }
        if self.n_per_class == 0 {
            return bad("n_per_class must be >= 1".into());
        }
        if !(self.noise_sigma >= 0.0) {
            return bad(format!("noise_sigma must be >= 0, got {}", self.noise_sigma));
        }
        if !(self.sensor_attenuation > 0.0 && self.sensor_attenuation <= 1.0) {
            return bad(format!(
                "sensor_attenuation must be in (0, 1], got {}",
                self.sensor_attenuation
            ));
        }
        if !(0.0..=1.0).contains(&self.modulation_depth) {
            return bad(format!("modulation_depth must be in [0, 1], got {}", self.modulation_depth));
        }
        if !(0.0..1.0).contains(&self.amplitude_jitter) {
            return bad(format!("amplitude_jitter must be in [0, 1), got {}", self.amplitude_jitter));
        }
        if self.fault_multipliers.iter().any(|m| !(*m > 0.0)) {
            return bad("fault multipliers must be positive".into());
        }
        Ok(())
    }

    /// Characteristic fault frequency in Hz; `None` for the normal class.
    pub fn fault_hz(&self, class: Class) -> Option<f64> {
        match class {
            Class::Normal => None,
            Class::InnerRace => Some(self.fault_multipliers[0] * self.shaft_hz),
            Class::OuterRace => Some(self.fault_multipliers[1] * self.shaft_hz),
            Class::Roller => Some(self.fault_multipliers[2] * self.shaft_hz),
        }
    }
}

/// Raw record of `n_per_class` back-to-back segments for one class.
pub fn synth_record(cfg: &SynthConfig, class: Class) -> Result<RawRecord> {
    cfg.validate()?;
    // one stream per class so classes are independent of generation order
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(class.index() as u64 + 1);
    let noise = Normal::new(0.0, cfg.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
    let phase = Uniform::new(0.0, TAU).expect("valid range");
    let jitter = Uniform::new_inclusive(1.0 - cfg.amplitude_jitter, 1.0 + cfg.amplitude_jitter)
        .expect("valid range");
    let fs = SAMPLE_RATE_HZ;
    let nyquist = fs / 2.0;

    let mut samples = Vec::with_capacity(cfg.n_per_class * SEGMENT_LEN);
    for _ in 0..cfg.n_per_class {
        let shaft_phase = phase.sample(&mut rng);
        let mod_phase = phase.sample(&mut rng);
        let gain = jitter.sample(&mut rng);
        let series: Vec<(f64, f64, f64)> = match cfg.fault_hz(class) {
            None => Vec::new(),
            Some(f_c) => (1..=cfg.harmonics)
                .map(|m| (m as f64 * f_c, cfg.fault_amplitude / m as f64, phase.sample(&mut rng)))
                .filter(|&(f, _, _)| f < nyquist)
                .collect(),
        };
        for i in 0..SEGMENT_LEN {
            let t = i as f64 / fs;
            let mut x = cfg.shaft_amplitude * (TAU * cfg.shaft_hz * t + shaft_phase).sin();
            if !series.is_empty() {
                let envelope = 1.0 + cfg.modulation_depth * (TAU * cfg.shaft_hz * t + mod_phase).sin();
                let fault: f64 = series
                    .iter()
                    .map(|&(f, a, p)| a * (TAU * f * t + p).sin())
                    .sum();
                x += cfg.sensor_attenuation * gain * envelope * fault;
            }
            x += noise.sample(&mut rng);
            samples.push(x);
        }
    }
    RawRecord::new(samples, fs)
}

/// Generates `4 * n_per_class` labeled spectra (class-major order).
pub fn synth_generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(4 * cfg.n_per_class);
    for class in Class::ALL {
        let record = synth_record(cfg, class)?;
        for bins in preprocess(&record, &cfg.pipeline)? {
            out.push(Spectrum {
                bins,
                label: Some(class),
            });
        }
    }
    Dataset::new(cfg.domain.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::{clip_left_half, fft_magnitude, SPECTRUM_LEN};

    fn small(shaft_hz: f64) -> SynthConfig {
        SynthConfig {
            n_per_class: 3,
            shaft_hz,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = synth_generate(&small(30.0)).unwrap();
        let b = synth_generate(&small(30.0)).unwrap();
        assert_eq!(a, b);
        let c = synth_generate(&SynthConfig {
            seed: 1,
            ..small(30.0)
        })
        .unwrap();
        assert_ne!(a, c);
        assert_eq!(a.len(), 12);
        assert_eq!(a.class_counts(), [3; 4]);
        assert!(a.samples().iter().all(|s| s.bins.len() == SPECTRUM_LEN));
    }

    fn peak_bin(cfg: &SynthConfig, class: Class) -> usize {
        let rec = synth_record(cfg, class).unwrap();
        let half = clip_left_half(&fft_magnitude(&rec.samples[..SEGMENT_LEN]).unwrap()).unwrap();
        // skip DC and the shaft line region
        (10..half.len())
            .max_by(|&a, &b| half[a].total_cmp(&half[b]))
            .unwrap()
    }

    #[test]
    fn inner_race_peak_location() {
        // 5.4 * 30 Hz / (12000 / 2000) Hz per bin
        assert_eq!(peak_bin(&small(30.0), Class::InnerRace), 27);
    }

    #[test]
    fn speed_change_moves_fault_lines() {
        let a = peak_bin(&small(30.0), Class::OuterRace);
        let b = peak_bin(&small(25.0), Class::OuterRace);
        assert_eq!(a, 18);
        assert_eq!(b, 15);
    }

    #[test]
    fn invalid_config_rejected() {
        for cfg in [
            SynthConfig { shaft_hz: 0.0, ..small(30.0) },
            SynthConfig { n_per_class: 0, ..small(30.0) },
            SynthConfig { noise_sigma: -1.0, ..small(30.0) },
            SynthConfig { sensor_attenuation: 1.5, ..small(30.0) },
        ] {
            assert!(matches!(synth_generate(&cfg), Err(Error::Config(_))));
        }
    }
}
