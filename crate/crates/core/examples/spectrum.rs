//! Synthesizes one record per condition, runs the preprocessing pipeline and
//! prints where each spectrum peaks.
//!
//! `cargo run --release --example spectrum -- [shaft_hz]`

use wdtl::data::{synth_record, Class, SynthConfig};
use wdtl::dsp::{preprocess, PipelineConfig, SAMPLE_RATE_HZ, SEGMENT_LEN};

fn main() -> wdtl::Result<()> {
    let shaft_hz: f64 = std::env::args().nth(1).map_or(30.0, |s| s.parse().expect("shaft_hz"));
    let cfg = SynthConfig {
        shaft_hz,
        n_per_class: 4,
        ..SynthConfig::default()
    };
    let bin_hz = SAMPLE_RATE_HZ / SEGMENT_LEN as f64;
    println!("shaft {shaft_hz} Hz, {bin_hz} Hz per bin");
    for class in Class::ALL {
        let record = synth_record(&cfg, class)?;
        let spectra = preprocess(&record, &PipelineConfig::default())?;
        // average the segments so the noise floor flattens out
        let mut mean = vec![0.0f64; spectra[0].len()];
        for s in &spectra {
            for (m, &v) in mean.iter_mut().zip(s) {
                *m += f64::from(v) / spectra.len() as f64;
            }
        }
        let mut order: Vec<usize> = (1..mean.len()).collect();
        order.sort_by(|&a, &b| mean[b].total_cmp(&mean[a]));
        let top: Vec<String> = order[..3]
            .iter()
            .map(|&k| format!("bin {k} ({:.0} Hz) {:.2}", k as f64 * bin_hz, mean[k]))
            .collect();
        let expected = cfg.fault_hz(class).map_or("none".into(), |f| format!("{f:.1} Hz"));
        println!("{class:<12} fault line {expected:<9} strongest: {}", top.join(", "));
    }
    Ok(())
}
