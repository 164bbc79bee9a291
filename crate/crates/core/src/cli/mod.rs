//! The `wdtl` command line.

mod config;

pub use config::RunConfig;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::data::{label_subset, load_dataset, save_dataset, synth_generate, DataFormat, Dataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, export_features, AggregateReport, RunReport};
use crate::scalar::Scalar;
use crate::training::{adapt, adapt_supervised, pretrain, AdaptConfig, ModelCheckpoint, Precision, TrainOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

pub const MANIFEST: &str = "manifest.txt";
pub const REPORT: &str = "report.txt";

#[derive(Debug, Parser)]
#[command(name = "wdtl", version, about = "Wasserstein-distance transfer learning for vibration spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate synthetic source and target datasets.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the CNN on the labeled source domain.
    Pretrain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Adapt a pretrained network to the target domain.
    Adapt {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Labeled target samples for the supervised variant.
        #[arg(long)]
        labeled_target: Option<PathBuf>,
    },
    /// Accuracy and confusion matrix of a checkpoint on a labeled dataset.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Write extractor features as CSV.
    ExportFeatures {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mean ± 95% CI of the best accuracies of completed runs.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => EXIT_USAGE,
        Error::Divergence { .. } => EXIT_DIVERGENCE,
        Error::Dimension(_) | Error::Input(_) | Error::Format { .. } | Error::Io { .. } => EXIT_DATA,
    }
}

/// Runs the CLI with `argv` (including the program name), printing results
/// to stdout and errors to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    run_with_output(argv, &mut std::io::stdout().lock())
}

pub fn run_with_output<I, S>(argv: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Synth { config, out: dir } => {
            let cfg = RunConfig::load(&config)?;
            create_dir(&dir)?;
            for (name, spec) in [("source.wdtl", &cfg.source), ("target.wdtl", &cfg.target)] {
                let ds = synth_generate(spec)?;
                save_dataset(&ds, &dir.join(name), DataFormat::Binary)?;
                say(out, format!("{name}: {} spectra ({} Hz shaft)", ds.len(), spec.shaft_hz))?;
            }
            write_config(&dir, &cfg)?;
            write_manifest(&dir)
        }
        Command::Pretrain { config, source, out: dir } => {
            let cfg = RunConfig::load(&config)?;
            let source = load_dataset(&source)?;
            let pcfg = cfg.pretrain_config();
            let outcome = match cfg.precision {
                Precision::F32 => pretrain::<f32>(&source, &pcfg)?,
                Precision::F64 => pretrain::<f64>(&source, &pcfg)?,
            };
            create_dir(&dir)?;
            write_run(&dir, &outcome)?;
            write_config(&dir, &cfg)?;
            write_manifest(&dir)?;
            say(
                out,
                format!(
                    "pretrained: validation accuracy {} at iteration {}",
                    fmt_acc(outcome.report.best_accuracy),
                    outcome.report.best_iteration
                ),
            )
        }
        Command::Adapt {
            config,
            source,
            target,
            init,
            out: dir,
            labeled_target,
        } => {
            let cfg = RunConfig::load(&config)?;
            let source = load_dataset(&source)?;
            let target = load_dataset(&target)?;
            let init = ModelCheckpoint::load(&init)?;
            let labeled = labeled_target.as_deref().map(load_dataset).transpose()?;
            create_dir(&dir)?;
            let mut best = Vec::new();
            for r in 0..cfg.runs {
                let rcfg = cfg.run_config(r);
                let lab = match (&labeled, cfg.labeled_per_class) {
                    (Some(ds), Some(k)) => Some(label_subset(ds, k, rcfg.seed)?),
                    (Some(ds), None) => Some(labeled_only(ds)),
                    (None, _) => None,
                };
                let outcome = match cfg.precision {
                    Precision::F32 => adapt_run::<f32>(&source, &target, lab.as_ref(), &rcfg, &init)?,
                    Precision::F64 => adapt_run::<f64>(&source, &target, lab.as_ref(), &rcfg, &init)?,
                };
                let run_dir = dir.join(format!("run-{r}"));
                create_dir(&run_dir)?;
                write_run(&run_dir, &outcome)?;
                say(
                    out,
                    format!(
                        "run {r} (seed {}): best target accuracy {} at iteration {}",
                        rcfg.seed,
                        fmt_acc(outcome.report.best_accuracy),
                        outcome.report.best_iteration
                    ),
                )?;
                best.extend(outcome.report.best_accuracy);
            }
            write_config(&dir, &cfg)?;
            write_manifest(&dir)?;
            if best.len() == cfg.runs {
                say(out, format!("mean ± 95% CI: {}", AggregateReport::from_accuracies(&best)?.summary()))?;
            }
            Ok(())
        }
        Command::Eval { ckpt, data } => {
            let ckpt = ModelCheckpoint::load(&ckpt)?;
            let ds = load_dataset(&data)?;
            let e = evaluate(&ckpt, &ds)?;
            say(out, format!("accuracy {:.4} ({} samples)", e.accuracy, ds.len()))?;
            for (i, row) in e.confusion.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|c| format!("{c:5}")).collect();
                say(out, format!("  true {i}: {}", cells.join(" ")))?;
            }
            Ok(())
        }
        Command::ExportFeatures { ckpt, data, out: path } => {
            let ckpt = ModelCheckpoint::load(&ckpt)?;
            let ds = load_dataset(&data)?;
            export_features(&ckpt, &ds, &path)?;
            say(out, format!("wrote {} feature rows to {}", ds.len(), path.display()))
        }
        Command::Report { dir } => {
            let rows = collect_rows(&dir)?;
            if rows.is_empty() {
                return Err(Error::input(format!("{}: no completed runs found", dir.display())));
            }
            say(out, format!("{:<24} {:<18} {:>4}  {}", "experiment", "mode", "runs", "accuracy % (mean ± 95% CI)"))?;
            for row in rows {
                say(
                    out,
                    format!("{:<24} {:<18} {:>4}  {}", row.name, row.mode, row.accuracies.len(), row.aggregate.summary()),
                )?;
            }
            Ok(())
        }
    }
}

fn adapt_run<T: Scalar>(
    source: &Dataset,
    target: &Dataset,
    labeled: Option<&Dataset>,
    cfg: &AdaptConfig,
    init: &ModelCheckpoint,
) -> Result<TrainOutcome> {
    match labeled {
        Some(lab) => adapt_supervised::<T>(source, lab, target, cfg, init),
        None => adapt::<T>(source, target, cfg, init),
    }
}

fn labeled_only(ds: &Dataset) -> Dataset {
    let idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.samples()[i].label.is_some()).collect();
    ds.subset(&idx)
}

fn say(out: &mut dyn Write, line: String) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn fmt_acc(a: Option<f64>) -> String {
    a.map_or_else(|| "n/a".into(), |a| format!("{a:.4}"))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_config(dir: &Path, cfg: &RunConfig) -> Result<()> {
    write_file(&dir.join("config.txt"), cfg.to_text().as_bytes())
}

/// Checkpoints first and the report last, so a run directory with a report
/// is complete.
fn write_run(dir: &Path, outcome: &TrainOutcome) -> Result<()> {
    outcome.best.save(&dir.join("best.ckpt"))?;
    outcome.last.save(&dir.join("last.ckpt"))?;
    write_file(&dir.join(REPORT), outcome.report.to_text().as_bytes())
}

fn files_under(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            files_under(&path, base, out)?;
        } else if let Ok(rel) = path.strip_prefix(base) {
            if rel != Path::new(MANIFEST) {
                out.push(rel.to_path_buf());
            }
        }
    }
    Ok(())
}

/// `sha256  relative/path` for every file under `dir`, sorted by path.
pub fn manifest_text(dir: &Path) -> Result<String> {
    let mut files = Vec::new();
    files_under(dir, dir, &mut files)?;
    files.sort();
    let mut s = String::new();
    for rel in files {
        let path = dir.join(&rel);
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let name = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        s.push_str(&format!("{}  {name}\n", hex::encode(Sha256::digest(&bytes))));
    }
    Ok(s)
}

fn write_manifest(dir: &Path) -> Result<()> {
    write_file(&dir.join(MANIFEST), manifest_text(dir)?.as_bytes())
}

struct ReportRow {
    name: String,
    mode: String,
    accuracies: Vec<f64>,
    aggregate: AggregateReport,
}

/// One row per directory holding `report.txt` itself or in `run-*/`
/// subdirectories; `dir` and its immediate subdirectories are searched.
fn collect_rows(dir: &Path) -> Result<Vec<ReportRow>> {
    let mut candidates = vec![dir.to_path_buf()];
    let mut subdirs = list_dirs(dir)?;
    subdirs.retain(|p| !is_run_dir(p));
    candidates.extend(subdirs);
    let mut rows = Vec::new();
    for cand in candidates {
        let mut run_dirs: Vec<PathBuf> = list_dirs(&cand)?.into_iter().filter(|p| is_run_dir(p)).collect();
        run_dirs.push(cand.clone());
        let mut accuracies = Vec::new();
        let mut mode = None;
        for rd in run_dirs {
            let report_path = rd.join(REPORT);
            if !report_path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&report_path).map_err(|e| Error::io(&report_path, e))?;
            let report = RunReport::from_text(&text, &report_path)?;
            let Some(acc) = report.best_accuracy else { continue };
            accuracies.push(acc);
            if mode.is_none() {
                let ckpt_path = rd.join("best.ckpt");
                if ckpt_path.is_file() {
                    mode = ModelCheckpoint::load(&ckpt_path)?.config_value("mode").map(str::to_string);
                }
            }
        }
        if accuracies.is_empty() {
            continue;
        }
        let name = cand
            .file_name()
            .map_or_else(|| cand.display().to_string(), |n| n.to_string_lossy().into_owned());
        rows.push(ReportRow {
            name,
            mode: mode.unwrap_or_else(|| "unknown".into()),
            aggregate: AggregateReport::from_accuracies(&accuracies)?,
            accuracies,
        });
    }
    Ok(rows)
}

fn is_run_dir(p: &Path) -> bool {
    p.file_name()
        .and_then(|n| n.to_str())
        .and_then(|n| n.strip_prefix("run-"))
        .is_some_and(|i| i.parse::<usize>().is_ok())
}

fn list_dirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
