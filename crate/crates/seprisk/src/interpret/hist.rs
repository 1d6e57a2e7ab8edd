use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cli::fsutil::write_atomic_string;
use crate::error::{Error, Result};
use crate::tabular::cohort::Cohort;

/// Per-class value distributions of one feature over shared bin edges.
///
/// Each class is normalized by its own count, so the two densities are
/// directly comparable even when the classes are heavily imbalanced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassHistograms {
    pub feature: String,
    /// `bins + 1` ascending edges shared by both classes.
    pub edges: Vec<f64>,
    /// Densities for label 0; sums to 1.
    pub survivor: Vec<f64>,
    /// Densities for label 1; sums to 1.
    pub non_survivor: Vec<f64>,
}

impl ClassHistograms {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }
}

/// Histograms of a feature's observed values, split by outcome label.
///
/// Bins are equal-width over the pooled observed range. The last bin is
/// closed so the maximum lands inside it; missing cells are excluded. A
/// constant feature widens to a unit-wide window around the single value.
pub fn class_histograms(cohort: &Cohort, feature: &str, bins: usize) -> Result<ClassHistograms> {
    if bins == 0 {
        return Err(Error::InvalidArgument("histogram needs at least 1 bin".into()));
    }
    let idx = cohort.feature_index(feature)?;
    let mut observed: Vec<(f64, u8)> = Vec::new();
    for row in 0..cohort.n_rows() {
        if let Some(v) = cohort.value(row, idx) {
            observed.push((v, cohort.labels[row]));
        }
    }
    for class in [0u8, 1] {
        if !observed.iter().any(|&(_, y)| y == class) {
            return Err(Error::SingleClass(format!(
                "no observed values of '{feature}' for label {class}"
            )));
        }
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(v, _) in &observed {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = [vec![0usize; bins], vec![0usize; bins]];
    let mut totals = [0usize; 2];
    for &(v, y) in &observed {
        let bin = (((v - lo) / width) as usize).min(bins - 1);
        counts[y as usize][bin] += 1;
        totals[y as usize] += 1;
    }
    let density = |class: usize| -> Vec<f64> {
        counts[class].iter().map(|&c| c as f64 / totals[class] as f64).collect()
    };
    Ok(ClassHistograms {
        feature: feature.to_string(),
        edges,
        survivor: density(0),
        non_survivor: density(1),
    })
}

/// CSV rendering: one row per bin, columns
/// `bin_lo,bin_hi,density_survivor,density_nonsurvivor`.
pub fn histogram_csv(h: &ClassHistograms) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bin_lo", "bin_hi", "density_survivor", "density_nonsurvivor"])
        .map_err(csv_err)?;
    for b in 0..h.bins() {
        w.write_record([
            h.edges[b].to_string(),
            h.edges[b + 1].to_string(),
            h.survivor[b].to_string(),
            h.non_survivor[b].to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv { line: 0, message: e.to_string() })?;
    String::from_utf8(bytes).map_err(|e| Error::Csv { line: 0, message: e.to_string() })
}

pub fn write_histogram_csv(h: &ClassHistograms, path: &Path) -> Result<()> {
    write_atomic_string(path, &histogram_csv(h)?)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Csv { line: 0, message: e.to_string() }
}
