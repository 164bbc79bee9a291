/// Magnitudes below this are compared absolutely rather than relatively.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradEntry {
    pub analytic: f64,
    pub numeric: f64,
    /// `f` was non-finite at one of the perturbed points.
    pub non_finite: bool,
}

impl GradEntry {
    pub fn abs_error(&self) -> f64 {
        (self.analytic - self.numeric).abs()
    }

    pub fn rel_error(&self) -> f64 {
        self.abs_error() / self.analytic.abs().max(self.numeric.abs()).max(REL_FLOOR)
    }
}

/// Outcome of a central-difference gradient comparison.
#[derive(Debug, Clone, Default)]
pub struct GradReport {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub entries: Vec<GradEntry>,
}

impl GradReport {
    pub fn flagged(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.non_finite)
            .map(|(i, _)| i)
    }

    pub fn is_clean(&self) -> bool {
        self.flagged().next().is_none()
    }

    pub fn merge(mut self, other: GradReport) -> GradReport {
        self.max_abs_error = self.max_abs_error.max(other.max_abs_error);
        self.max_rel_error = self.max_rel_error.max(other.max_rel_error);
        self.entries.extend(other.entries);
        self
    }
}

/// Compares `analytic` against `(f(x + h e_i) - f(x - h e_i)) / 2h` for every
/// coordinate of `point`. Flagged (non-finite) coordinates are excluded from
/// the error maxima.
pub fn finite_diff_check(
    point: &[f64],
    analytic: &[f64],
    step: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> GradReport {
    assert!(step > 0.0, "finite difference step must be positive");
    assert_eq!(point.len(), analytic.len(), "one analytic entry per coordinate");
    let mut x = point.to_vec();
    let mut report = GradReport::default();
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + step;
        let fp = f(&x);
        x[i] = orig - step;
        let fm = f(&x);
        x[i] = orig;
        let numeric = (fp - fm) / (2.0 * step);
        let entry = GradEntry {
            analytic: analytic[i],
            numeric,
            non_finite: !numeric.is_finite(),
        };
        if !entry.non_finite {
            report.max_abs_error = report.max_abs_error.max(entry.abs_error());
            report.max_rel_error = report.max_rel_error.max(entry.rel_error());
        }
        report.entries.push(entry);
    }
    report
}
