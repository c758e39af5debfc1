//! Nearest-neighbor distance-ratio memorization detection.
//!
//! A generated row `x` has ratio `r(x) = d(x, NN₁) / d(x, NN₂)` against
//! the training table and counts as memorized at threshold `τ` when
//! `r(x) < τ`. Mem-AUC integrates the memorized fraction over `τ ∈ [0, 1]`.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::distance::{fit_normalizer, two_nearest, NeighborResult};
use crate::error::{Error, Result};
use crate::table::Table;

pub const DEFAULT_THRESHOLD: f64 = 1.0 / 3.0;
pub const DEFAULT_BINS: usize = 50;

/// Fixed-width bins over `[0, 1]`; every bin is left-closed and the last
/// one is also right-closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
        }
        let mut counts = vec![0u64; bins];
        for &v in values {
            check_ratio(v)?;
            let b = ((v * bins as f64).floor() as usize).min(bins - 1);
            counts[b] += 1;
        }
        Ok(Histogram { counts })
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn bin_left(&self, b: usize) -> f64 {
        b as f64 / self.bins() as f64
    }

    /// Two-column `bin_left,count` CSV.
    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["bin_left", "count"])?;
        for (b, count) in self.counts.iter().enumerate() {
            wtr.write_record([self.bin_left(b).to_string(), count.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemorizationReport {
    pub threshold: f64,
    pub mem_ratio: f64,
    pub mem_auc: f64,
    pub histogram: Histogram,
    pub ratios: Vec<f64>,
}

fn check_ratio(r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::RatioOutOfRange(r))
    }
}

fn ratio_of(n: &NeighborResult) -> f64 {
    if n.nn2_distance == 0.0 {
        // nn1 <= nn2 = 0: the row coincides with duplicated training rows
        0.0
    } else {
        n.nn1_distance / n.nn2_distance
    }
}

/// `r(x)` for every generated row, with the normalizer fitted on
/// generated × train.
pub fn distance_ratios(generated: &Table, train: &Table) -> Result<Vec<f64>> {
    generated.ensure_same_schema(train)?;
    if train.len() < 2 {
        return Err(Error::TrainTooSmall(train.len()));
    }
    let norm = fit_normalizer(generated, train)?;
    Ok(two_nearest(generated, train, &norm)?.iter().map(ratio_of).collect())
}

/// Fraction of ratios strictly below `threshold`.
pub fn memorization_ratio(ratios: &[f64], threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    if ratios.is_empty() {
        return Err(Error::EmptyRatios);
    }
    let below = ratios.iter().filter(|&&r| r < threshold).count();
    Ok(below as f64 / ratios.len() as f64)
}

/// Exact area under `τ ↦ memorization_ratio(ratios, τ)` on `[0, 1]`, which
/// for a step function reduces to the mean of `1 − r`.
pub fn mem_auc(ratios: &[f64]) -> Result<f64> {
    if ratios.is_empty() {
        return Err(Error::EmptyRatios);
    }
    let mut total = 0.0;
    for &r in ratios {
        check_ratio(r)?;
        total += 1.0 - r;
    }
    Ok(total / ratios.len() as f64)
}

pub fn audit(generated: &Table, train: &Table, threshold: f64, bins: usize) -> Result<MemorizationReport> {
    generated.ensure_non_empty()?;
    if bins == 0 {
        return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let ratios = distance_ratios(generated, train)?;
    Ok(MemorizationReport {
        threshold,
        mem_ratio: memorization_ratio(&ratios, threshold)?,
        mem_auc: mem_auc(&ratios)?,
        histogram: Histogram::new(&ratios, bins)?,
        ratios,
    })
}
