//! Speed-shift transfer: pretrain on a 30 Hz source, measure the source-only
//! network on a 29 Hz target, then adapt with the Wasserstein critic.
//!
//! `cargo run --release --example transfer_speed -- [iterations] [seed]`

use std::time::Instant;

use wdtl::data::{synth_generate, SynthConfig};
use wdtl::eval::evaluate;
use wdtl::training::{adapt, pretrain, AdaptConfig};

fn main() -> wdtl::Result<()> {
    let mut args = std::env::args().skip(1);
    let iterations: usize = args.next().map_or(1500, |s| s.parse().expect("iterations"));
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let source = synth_generate(&SynthConfig {
        domain: "30hz".into(),
        seed: 100 + seed,
        ..SynthConfig::default()
    })?;
    let target = synth_generate(&SynthConfig {
        domain: "29hz".into(),
        shaft_hz: 29.0,
        seed: 200 + seed,
        ..SynthConfig::default()
    })?;

    let t = Instant::now();
    let pre_cfg = AdaptConfig {
        max_iterations: 500,
        seed,
        ..AdaptConfig::default()
    };
    let pre = pretrain::<f32>(&source, &pre_cfg)?;
    let baseline = evaluate(&pre.best, &target)?;
    println!(
        "pretrained in {:.1}s: source validation {:.4}, target {:.4}",
        t.elapsed().as_secs_f64(),
        pre.report.best_accuracy.unwrap_or(0.0),
        baseline.accuracy
    );

    let t = Instant::now();
    let cfg = AdaptConfig {
        max_iterations: iterations,
        seed,
        ..AdaptConfig::default()
    };
    let out = adapt::<f32>(&source, &target, &cfg, &pre.best)?;
    println!("{:>9} {:>8} {:>8} {:>8} {:>8}", "iteration", "l_c", "l_wd", "l_grad", "target");
    for e in &out.report.entries {
        println!(
            "{:>9} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
            e.iteration,
            e.l_c,
            e.l_wd,
            e.l_grad,
            e.accuracy.unwrap_or(f64::NAN)
        );
    }
    println!(
        "adapted in {:.1}s: best target accuracy {:.4} at iteration {} (baseline {:.4})",
        t.elapsed().as_secs_f64(),
        out.report.best_accuracy.unwrap_or(0.0),
        out.report.best_iteration,
        baseline.accuracy
    );
    Ok(())
}
