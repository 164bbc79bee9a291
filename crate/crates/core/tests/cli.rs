use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};
use wdtl::cli::{run_with_output, EXIT_DATA, EXIT_OK, EXIT_USAGE, MANIFEST};

const CONFIG: &str = "\
# tiny end-to-end run
batch_size = 8
critic_steps = 2
lambda = 0.5
max_iterations = 4
pretrain_iterations = 6
eval_every = 2
runs = 2
seed = 3
synth.n_per_class = 8
target.shaft_hz = 29
";

fn wdtl(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let code = run_with_output(std::iter::once("wdtl").chain(args.iter().copied()), &mut out);
    (code, String::from_utf8(out).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn check_manifest(dir: &Path) {
    let text = fs::read_to_string(dir.join(MANIFEST)).unwrap();
    assert!(!text.is_empty());
    for line in text.lines() {
        let (hash, rel) = line.split_once("  ").unwrap();
        let bytes = fs::read(dir.join(rel)).unwrap();
        assert_eq!(hash, hex::encode(Sha256::digest(&bytes)), "{rel}");
    }
}

#[test]
fn full_pipeline_through_the_command_line() {
    let root = tempfile::tempdir().unwrap();
    let root = root.path();
    let cfg = root.join("run.cfg");
    fs::write(&cfg, CONFIG).unwrap();

    let data = root.join("data");
    let (code, _) = wdtl(&["synth", "--config", p(&cfg), "--out", p(&data)]);
    assert_eq!(code, EXIT_OK);
    check_manifest(&data);
    let (source, target) = (data.join("source.wdtl"), data.join("target.wdtl"));

    let pre = root.join("pre");
    let (code, msg) = wdtl(&["pretrain", "--config", p(&cfg), "--source", p(&source), "--out", p(&pre)]);
    assert_eq!(code, EXIT_OK, "{msg}");
    check_manifest(&pre);
    let init = pre.join("best.ckpt");

    let exp = root.join("exp");
    let run_adapt = |out: &Path, labeled: Option<&Path>| {
        let mut args = vec![
            "adapt", "--config", p(&cfg), "--source", p(&source), "--target", p(&target), "--init", p(&init),
            "--out", p(out),
        ];
        if let Some(l) = labeled {
            args.extend(["--labeled-target", p(l)]);
        }
        wdtl(&args)
    };
    let (code, msg) = run_adapt(&exp.join("wd-dtl"), None);
    assert_eq!(code, EXIT_OK, "{msg}");
    assert!(msg.contains("mean ± 95% CI"), "{msg}");
    check_manifest(&exp.join("wd-dtl"));
    let (code, _) = run_adapt(&root.join("again"), None);
    assert_eq!(code, EXIT_OK);
    for r in 0..2 {
        let a = fs::read(exp.join(format!("wd-dtl/run-{r}/report.txt"))).unwrap();
        let b = fs::read(root.join(format!("again/run-{r}/report.txt"))).unwrap();
        assert_eq!(a, b, "run {r} not reproducible");
    }
    let (code, msg) = run_adapt(&exp.join("supervised"), Some(&target));
    assert_eq!(code, EXIT_OK, "{msg}");

    let (code, msg) = wdtl(&["report", "--dir", p(&exp)]);
    assert_eq!(code, EXIT_OK);
    assert!(msg.contains("wd-dtl") && msg.contains("adapt-supervised"), "{msg}");
    assert!(msg.contains('±'), "{msg}");

    let best = exp.join("wd-dtl/run-0/best.ckpt");
    let (code, msg) = wdtl(&["eval", "--ckpt", p(&best), "--data", p(&target)]);
    assert_eq!(code, EXIT_OK);
    assert!(msg.starts_with("accuracy "), "{msg}");

    let csv = root.join("features.csv");
    let (code, _) = wdtl(&["export-features", "--ckpt", p(&best), "--data", p(&target), "--out", p(&csv)]);
    assert_eq!(code, EXIT_OK);
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("domain,label,h0,h1,") && header.ends_with(",h895"));
    assert_eq!(lines.count(), 32);

    fs::write(&source, b"WDTX garbage").unwrap();
    let (code, _) = wdtl(&["pretrain", "--config", p(&cfg), "--source", p(&source), "--out", p(&pre)]);
    assert_eq!(code, EXIT_DATA);
    fs::write(&cfg, "lambda = 0.1\nwarp_factor = 9\n").unwrap();
    let (code, _) = wdtl(&["synth", "--config", p(&cfg), "--out", p(&data)]);
    assert_eq!(code, EXIT_USAGE);
}
