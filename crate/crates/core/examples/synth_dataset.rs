//! Writes a speed-shift pair of synthetic datasets in both file formats and
//! reads them back.
//!
//! `cargo run --release --example synth_dataset -- [out_dir]`

use std::path::PathBuf;

use wdtl::data::{load_dataset, save_dataset, synth_generate, DataFormat, SynthConfig};

fn main() -> wdtl::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "synthetic-data".into()));
    std::fs::create_dir_all(&dir).map_err(|e| wdtl::Error::Io { path: dir.clone(), source: e })?;
    for (name, shaft_hz, seed) in [("source", 30.0, 1), ("target", 29.0, 2)] {
        let ds = synth_generate(&SynthConfig {
            domain: name.into(),
            shaft_hz,
            seed,
            ..SynthConfig::default()
        })?;
        for (ext, fmt) in [("wdtl", DataFormat::Binary), ("csv", DataFormat::Csv)] {
            let path = dir.join(format!("{name}.{ext}"));
            save_dataset(&ds, &path, fmt)?;
            let back = load_dataset(&path)?;
            assert_eq!(back, ds);
            let size = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
            println!("{}: {} spectra, class counts {:?}, {size} bytes", path.display(), back.len(), back.class_counts());
        }
    }
    Ok(())
}
