//! Target accuracy, confusion matrices, repeated-run statistics and feature
//! export.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::nn::NUM_CLASSES;
use crate::scalar::Scalar;
use crate::training::{ModelCheckpoint, Network};

pub type Confusion = [[usize; NUM_CLASSES]; NUM_CLASSES];

/// Accuracy and confusion matrix (`confusion[true][predicted]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Confusion,
}

impl Evaluation {
    pub fn from_predictions(labels: &[usize], predictions: &[usize]) -> Result<Self> {
        if labels.len() != predictions.len() || labels.is_empty() {
            return Err(Error::input(format!(
                "{} labels vs {} predictions",
                labels.len(),
                predictions.len()
            )));
        }
        let mut confusion = [[0; NUM_CLASSES]; NUM_CLASSES];
        for (&y, &p) in labels.iter().zip(predictions) {
            if y >= NUM_CLASSES || p >= NUM_CLASSES {
                return Err(Error::input(format!("class index {} out of range", y.max(p))));
            }
            confusion[y][p] += 1;
        }
        let trace: usize = (0..NUM_CLASSES).map(|i| confusion[i][i]).sum();
        Ok(Evaluation {
            accuracy: trace as f64 / labels.len() as f64,
            confusion,
        })
    }
}

/// Classifies every sample of a fully labeled set.
pub fn evaluate_network<T: Scalar>(net: &Network<T>, ds: &Dataset) -> Result<Evaluation> {
    if ds.is_empty() {
        return Err(Error::input(format!("{}: nothing to evaluate", ds.domain)));
    }
    let labels = ds.labels()?;
    let predictions = net.predict(&ds.features())?;
    Evaluation::from_predictions(&labels, &predictions)
}

pub fn evaluate(checkpoint: &ModelCheckpoint, ds: &Dataset) -> Result<Evaluation> {
    evaluate_network(&checkpoint.network, ds)
}

/// One logged point of a run; losses are means over the preceding window.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub l_c: f64,
    pub l_wd: f64,
    pub l_grad: f64,
    pub accuracy: Option<f64>,
}

/// Loss timelines and accuracies of one training run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub entries: Vec<LogEntry>,
    /// Accuracy of the starting parameters.
    pub initial_accuracy: Option<f64>,
    pub best_accuracy: Option<f64>,
    pub best_iteration: usize,
    pub final_accuracy: Option<f64>,
    /// Confusion matrix of the selected (best) parameters.
    pub confusion: Option<Confusion>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |a| a.to_string())
}

fn parse_opt(v: &str) -> std::result::Result<Option<f64>, String> {
    match v {
        "none" => Ok(None),
        _ => v.parse().map(Some).map_err(|_| format!("bad number `{v}`")),
    }
}

impl RunReport {
    /// Plain-text form; floats are written in shortest round-trip notation
    /// so equal reports give equal files.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "initial_accuracy {}", opt(self.initial_accuracy));
        let _ = writeln!(s, "best_accuracy {}", opt(self.best_accuracy));
        let _ = writeln!(s, "best_iteration {}", self.best_iteration);
        let _ = writeln!(s, "final_accuracy {}", opt(self.final_accuracy));
        if let Some(c) = &self.confusion {
            for (i, row) in c.iter().enumerate() {
                let cells: Vec<String> = row.iter().map(usize::to_string).collect();
                let _ = writeln!(s, "confusion{i} {}", cells.join(" "));
            }
        }
        let _ = writeln!(s, "iteration l_c l_wd l_grad accuracy");
        for e in &self.entries {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                e.iteration,
                e.l_c,
                e.l_wd,
                e.l_grad,
                opt(e.accuracy)
            );
        }
        s
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut report = RunReport::default();
        let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
        let mut have_confusion = false;
        let mut in_table = false;
        for (i, line) in text.lines().enumerate() {
            let fail = |m: String| Error::Format {
                path: path.to_path_buf(),
                location: format!("line {}", i + 1),
                message: m,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() {
                continue;
            }
            if in_table {
                if fields.len() != 5 {
                    return Err(fail(format!("expected 5 columns, found {}", fields.len())));
                }
                let num = |v: &str| v.parse::<f64>().map_err(|_| fail(format!("bad number `{v}`")));
                report.entries.push(LogEntry {
                    iteration: fields[0].parse().map_err(|_| fail("bad iteration".into()))?,
                    l_c: num(fields[1])?,
                    l_wd: num(fields[2])?,
                    l_grad: num(fields[3])?,
                    accuracy: parse_opt(fields[4]).map_err(fail)?,
                });
                continue;
            }
            match fields[0] {
                "initial_accuracy" | "best_accuracy" | "final_accuracy" if fields.len() == 2 => {
                    let v = parse_opt(fields[1]).map_err(fail)?;
                    match fields[0] {
                        "initial_accuracy" => report.initial_accuracy = v,
                        "best_accuracy" => report.best_accuracy = v,
                        _ => report.final_accuracy = v,
                    }
                }
                "best_iteration" if fields.len() == 2 => {
                    report.best_iteration =
                        fields[1].parse().map_err(|_| fail("bad best_iteration".into()))?
                }
                "iteration" => in_table = true,
                k if k.starts_with("confusion") && fields.len() == NUM_CLASSES + 1 => {
                    let row: usize = k["confusion".len()..]
                        .parse()
                        .ok()
                        .filter(|&r| r < NUM_CLASSES)
                        .ok_or_else(|| fail(format!("bad confusion row `{k}`")))?;
                    for (j, v) in fields[1..].iter().enumerate() {
                        confusion[row][j] = v.parse().map_err(|_| fail(format!("bad count `{v}`")))?;
                    }
                    have_confusion = true;
                }
                other => return Err(fail(format!("unexpected entry `{other}`"))),
            }
        }
        if have_confusion {
            report.confusion = Some(confusion);
        }
        Ok(report)
    }
}

/// Best accuracies of repeated runs with their mean and 95% Student-t
/// interval half-width (`None` when fewer than two runs).
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub accuracies: Vec<f64>,
    pub mean: f64,
    pub half_width: Option<f64>,
}

impl AggregateReport {
    pub fn from_accuracies(accuracies: &[f64]) -> Result<Self> {
        let r = accuracies.len();
        if r == 0 {
            return Err(Error::input("no runs to aggregate"));
        }
        let mean = accuracies.iter().sum::<f64>() / r as f64;
        let half_width = if r >= 2 {
            let var = accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
            let t = StudentsT::new(0.0, 1.0, (r - 1) as f64)
                .map_err(|e| Error::input(e.to_string()))?
                .inverse_cdf(0.975);
            Some(t * var.sqrt() / (r as f64).sqrt())
        } else {
            None
        };
        Ok(AggregateReport {
            accuracies: accuracies.to_vec(),
            mean,
            half_width,
        })
    }

    /// `mean ± half-width` in percent, e.g. `96.00 ± 6.80`.
    pub fn summary(&self) -> String {
        match self.half_width {
            Some(h) => format!("{:.2} ± {:.2}", 100.0 * self.mean, 100.0 * h),
            None => format!("{:.2} (CI n/a)", 100.0 * self.mean),
        }
    }
}

/// Runs `run(index)` for `index in 0..runs` and aggregates the returned
/// best accuracies.
pub fn repeated_runs<F>(runs: usize, mut run: F) -> Result<AggregateReport>
where
    F: FnMut(usize) -> Result<f64>,
{
    if runs == 0 {
        return Err(Error::input("repeated_runs needs at least one run"));
    }
    let accuracies = (0..runs).map(&mut run).collect::<Result<Vec<f64>>>()?;
    AggregateReport::from_accuracies(&accuracies)
}

/// `domain,label,h0,...,h895` rows of extractor features.
pub fn features_csv<T: Scalar>(net: &Network<T>, ds: &Dataset) -> Result<String> {
    let width = net.extractor.output_dim(crate::nn::INPUT_LEN)?;
    let mut out = String::from("domain,label");
    for j in 0..width {
        let _ = write!(out, ",h{j}");
    }
    out.push('\n');
    if ds.is_empty() {
        return Ok(out);
    }
    let h = net.features(&ds.features())?;
    for (s, row) in ds.samples().iter().zip(h.data().chunks_exact(width)) {
        out.push_str(&ds.domain);
        out.push(',');
        if let Some(c) = s.label {
            let _ = write!(out, "{}", c.index());
        }
        for v in row {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn export_features(checkpoint: &ModelCheckpoint, ds: &Dataset, path: &Path) -> Result<()> {
    let text = features_csv(&checkpoint.network, ds)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
