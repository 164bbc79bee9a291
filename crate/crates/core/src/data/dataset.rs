use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dsp::SPECTRUM_LEN;
use crate::error::{Error, Result};

/// Bearing condition. Fault severity is deliberately not modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Class {
    Normal = 0,
    InnerRace = 1,
    OuterRace = 2,
    Roller = 3,
}

impl Class {
    pub const ALL: [Class; 4] = [Class::Normal, Class::InnerRace, Class::OuterRace, Class::Roller];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Result<Class> {
        Class::ALL
            .get(i)
            .copied()
            .ok_or_else(|| Error::input(format!("class label {i} outside 0..=3")))
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class::Normal => "normal",
            Class::InnerRace => "inner-race",
            Class::OuterRace => "outer-race",
            Class::Roller => "roller",
        })
    }
}

/// One preprocessed sample: 1000 non-negative spectral bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub bins: Vec<f32>,
    pub label: Option<Class>,
}

/// Samples from a single domain.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub domain: String,
    samples: Vec<Spectrum>,
}

impl Dataset {
    pub fn new(domain: impl Into<String>, samples: Vec<Spectrum>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.bins.len() != SPECTRUM_LEN {
                return Err(Error::dim(format!(
                    "sample {i} has {} bins, expected {SPECTRUM_LEN}",
                    s.bins.len()
                )));
            }
        }
        Ok(Dataset {
            domain: domain.into(),
            samples,
        })
    }

    pub fn samples(&self) -> &[Spectrum] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn labeled_fraction(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().filter(|s| s.label.is_some()).count() as f64 / self.len() as f64
    }

    pub fn is_fully_labeled(&self) -> bool {
        !self.samples.is_empty() && self.samples.iter().all(|s| s.label.is_some())
    }

    /// Labels as indices; errors if any sample is unlabeled.
    pub fn labels(&self) -> Result<Vec<usize>> {
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                s.label
                    .map(Class::index)
                    .ok_or_else(|| Error::input(format!("{}: sample {i} is unlabeled", self.domain)))
            })
            .collect()
    }

    pub fn features(&self) -> Vec<&[f32]> {
        self.samples.iter().map(|s| s.bins.as_slice()).collect()
    }

    /// Same features with all labels removed.
    pub fn without_labels(&self) -> Dataset {
        Dataset {
            domain: self.domain.clone(),
            samples: self
                .samples
                .iter()
                .map(|s| Spectrum {
                    bins: s.bins.clone(),
                    label: None,
                })
                .collect(),
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            domain: self.domain.clone(),
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// Indices grouped by label (`None` holds unlabeled samples).
    pub fn class_groups(&self) -> BTreeMap<Option<Class>, Vec<usize>> {
        let mut groups: BTreeMap<Option<Class>, Vec<usize>> = BTreeMap::new();
        for (i, s) in self.samples.iter().enumerate() {
            groups.entry(s.label).or_default().push(i);
        }
        groups
    }

    pub fn class_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for s in &self.samples {
            if let Some(c) = s.label {
                counts[c.index()] += 1;
            }
        }
        counts
    }
}

/// Stratified random split; `part_a` receives `round(fraction * n_c)` of
/// every class (or of the whole set when unlabeled). Original order is kept
/// inside each part.
pub fn split(ds: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::input(format!("split fraction must be in (0, 1), got {fraction}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (label, mut idx) in ds.class_groups() {
        if label.is_some() && idx.len() < 2 {
            return Err(Error::input(format!(
                "class {} has {} sample(s); stratified split needs at least 2",
                label.map_or("unlabeled".to_string(), |c| c.to_string()),
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let take = (fraction * idx.len() as f64).round() as usize;
        a.extend_from_slice(&idx[..take]);
        b.extend_from_slice(&idx[take..]);
    }
    a.sort_unstable();
    b.sort_unstable();
    Ok((ds.subset(&a), ds.subset(&b)))
}

/// A deterministic labeled sample of `count_per_class` from every class.
pub fn label_subset(ds: &Dataset, count_per_class: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = ds.class_groups();
    let mut picked = Vec::new();
    if count_per_class == 0 {
        return Ok(ds.subset(&[]));
    }
    for class in Class::ALL {
        let mut idx = groups.get(&Some(class)).cloned().unwrap_or_default();
        if idx.len() < count_per_class {
            return Err(Error::input(format!(
                "class {class} has {} labeled samples, {count_per_class} requested",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        picked.extend_from_slice(&idx[..count_per_class]);
    }
    picked.sort_unstable();
    Ok(ds.subset(&picked))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn balanced(per_class: usize) -> Dataset {
        let samples = (0..4 * per_class)
            .map(|i| Spectrum {
                bins: vec![i as f32; SPECTRUM_LEN],
                label: Some(Class::ALL[i % 4]),
            })
            .collect();
        Dataset::new("toy", samples).unwrap()
    }

    #[test]
    fn wrong_width_rejected() {
        let s = Spectrum {
            bins: vec![0.0; 999],
            label: None,
        };
        assert!(matches!(Dataset::new("x", vec![s]), Err(Error::Dimension(_))));
    }

    #[test]
    fn stratified_eighty_twenty() {
        let ds = balanced(25);
        let (a, b) = split(&ds, 0.8, 3).unwrap();
        assert_eq!((a.len(), b.len()), (80, 20));
        assert_eq!(a.class_counts(), [20; 4]);
        assert_eq!(b.class_counts(), [5; 4]);

        let mut all: Vec<f32> = a.samples().iter().chain(b.samples()).map(|s| s.bins[0]).collect();
        all.sort_by(f32::total_cmp);
        let orig: Vec<f32> = ds.samples().iter().map(|s| s.bins[0]).collect();
        assert_eq!(all, orig);

        assert_eq!(split(&ds, 0.8, 3).unwrap(), (a, b));
        assert_ne!(split(&ds, 0.8, 4).unwrap().0, split(&ds, 0.8, 3).unwrap().0);
    }

    #[test]
    fn split_errors() {
        assert!(split(&balanced(1), 0.5, 0).is_err());
        assert!(split(&balanced(5), 1.0, 0).is_err());
        assert!(split(&balanced(5), 0.0, 0).is_err());
    }

    #[test]
    fn label_subset_counts() {
        let ds = balanced(40);
        let s = label_subset(&ds, 25, 9).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(s.class_counts(), [25; 4]);
        assert_eq!(label_subset(&ds, 25, 9).unwrap(), s);
        assert!(label_subset(&ds, 0, 9).unwrap().is_empty());
        assert!(label_subset(&ds, 41, 9).is_err());
    }

    #[test]
    fn labeled_fraction_and_stripping() {
        let ds = balanced(2);
        assert_eq!(ds.labeled_fraction(), 1.0);
        let bare = ds.without_labels();
        assert_eq!(bare.labeled_fraction(), 0.0);
        assert!(bare.labels().is_err());
    }
}
