//! Exports extractor features of both domains before and after adaptation,
//! ready for an external embedding tool such as t-SNE.
//!
//! `cargo run --release --example export_features -- [out_dir] [iterations]`

use std::path::PathBuf;

use wdtl::data::{synth_generate, SynthConfig};
use wdtl::eval::export_features;
use wdtl::training::{adapt, pretrain, AdaptConfig};

fn main() -> wdtl::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "features".into()));
    let iterations: usize = args.next().map_or(500, |s| s.parse().expect("iterations"));
    std::fs::create_dir_all(&dir).map_err(|e| wdtl::Error::Io { path: dir.clone(), source: e })?;

    let small = |domain: &str, shaft_hz: f64, seed: u64| {
        synth_generate(&SynthConfig {
            domain: domain.into(),
            shaft_hz,
            n_per_class: 64,
            seed,
            ..SynthConfig::default()
        })
    };
    let source = small("source", 30.0, 1)?;
    let target = small("target", 29.0, 2)?;
    let pre = pretrain::<f32>(&source, &AdaptConfig { max_iterations: 300, ..AdaptConfig::default() })?;
    let adapted = adapt::<f32>(
        &source,
        &target,
        &AdaptConfig { max_iterations: iterations, ..AdaptConfig::default() },
        &pre.best,
    )?;
    for (stage, ckpt) in [("pretrained", &pre.best), ("adapted", &adapted.best)] {
        for ds in [&source, &target] {
            let path = dir.join(format!("{stage}-{}.csv", ds.domain));
            export_features(ckpt, ds, &path)?;
            println!("{}: {} rows x 896 features", path.display(), ds.len());
        }
    }
    Ok(())
}
