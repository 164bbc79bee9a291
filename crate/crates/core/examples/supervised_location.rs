//! Location-like shift (weaker, noisier fault signature at the target
//! sensor): unsupervised adaptation against the variant that also sees 25
//! labeled target spectra per class.
//!
//! `cargo run --release --example supervised_location -- [iterations] [seed]`

use wdtl::data::{label_subset, synth_generate, SynthConfig};
use wdtl::eval::evaluate;
use wdtl::training::{adapt, adapt_supervised, pretrain, AdaptConfig, LOCATION_LAMBDA};

fn main() -> wdtl::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(1500, |s| s.parse().expect("iterations"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let source = synth_generate(&SynthConfig {
        domain: "drive-end".into(),
        seed: 100 + seed,
        ..SynthConfig::default()
    })?;
    let target = synth_generate(&SynthConfig {
        domain: "fan-end".into(),
        sensor_attenuation: 0.3,
        noise_sigma: 1.5,
        seed: 200 + seed,
        ..SynthConfig::default()
    })?;
    let labeled = label_subset(&target, 25, seed)?;
    let rest: Vec<usize> = (0..target.len())
        .filter(|&i| !labeled.samples().contains(&target.samples()[i]))
        .collect();
    let held_out = target.subset(&rest);

    let pre_cfg = AdaptConfig {
        max_iterations: 500,
        seed,
        ..AdaptConfig::default()
    };
    let init = pretrain::<f32>(&source, &pre_cfg)?.best;
    println!("source-only network on held-out target: {:.4}", evaluate(&init, &held_out)?.accuracy);

    let cfg = AdaptConfig {
        max_iterations: iterations,
        lambda: LOCATION_LAMBDA,
        seed,
        ..AdaptConfig::default()
    };
    let unsup = adapt::<f32>(&source, &held_out, &cfg, &init)?;
    println!("unsupervised WD-DTL: {:.4}", unsup.report.best_accuracy.unwrap_or(0.0));
    let sup = adapt_supervised::<f32>(&source, &labeled, &held_out, &cfg, &init)?;
    println!(
        "with {} labeled target spectra: {:.4}",
        labeled.len(),
        sup.report.best_accuracy.unwrap_or(0.0)
    );
    if let Some(c) = sup.report.confusion {
        println!("confusion (rows true, columns predicted):");
        for row in c {
            println!("  {row:?}");
        }
    }
    Ok(())
}
