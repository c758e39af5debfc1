//! Mixed numerical/categorical distance and exact nearest-neighbor search.
//!
//! For rows `a`, `b` with `M` features,
//!
//! ```text
//! d(a, b) = ( norm(‖a_num − b_num‖₂) + #{ j ∈ cat : a_j ≠ b_j } ) / M
//! ```
//!
//! where `norm` is a min-max map fitted over the raw numerical distances of
//! a declared pair population (see [`DistanceNormalizer`]). The label column
//! never enters the distance.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{check_row, Cell, Schema, Table};

/// Min-max rescaling of raw numerical distances into `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceNormalizer {
    pub d_min: f64,
    pub d_max: f64,
}

impl DistanceNormalizer {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self> {
        if !(d_min.is_finite() && d_max.is_finite() && 0.0 <= d_min && d_min <= d_max) {
            return Err(Error::InvalidConfig(format!(
                "normalizer bounds must satisfy 0 <= d_min <= d_max, got ({d_min}, {d_max})"
            )));
        }
        Ok(DistanceNormalizer { d_min, d_max })
    }

    /// Fits to the smallest and largest of a population of raw distances.
    pub fn from_distances(distances: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = distances
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| {
                (lo.min(d), hi.max(d))
            });
        if lo > hi {
            return Err(Error::EmptyTable);
        }
        Self::new(lo, hi)
    }

    pub fn is_degenerate(&self) -> bool {
        self.d_max == self.d_min
    }

    /// Degenerate populations map everything to 0; values outside the
    /// fitted range are clamped.
    pub fn normalize(&self, d: f64) -> f64 {
        if self.is_degenerate() {
            return 0.0;
        }
        ((d - self.d_min) / (self.d_max - self.d_min)).clamp(0.0, 1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeighborResult {
    pub nn1_index: usize,
    pub nn1_distance: f64,
    pub nn2_index: usize,
    pub nn2_distance: f64,
}

/// Dense per-table copy of the distance features: numericals as `f64`,
/// categoricals as symbol ids, both row-major.
pub(crate) struct Encoded {
    rows: usize,
    p: usize,
    q: usize,
    num: Vec<f64>,
    cat: Vec<u32>,
    m: f64,
}

impl Encoded {
    pub(crate) fn new(table: &Table) -> Self {
        let schema = table.schema();
        let (numeric, categorical) = (schema.numeric_features(), schema.categorical_features());
        let mut num = Vec::with_capacity(table.len() * numeric.len());
        let mut cat = Vec::with_capacity(table.len() * categorical.len());
        for row in table.rows() {
            num.extend(numeric.iter().map(|&c| row[c].as_f64().unwrap()));
            cat.extend(categorical.iter().map(|&c| row[c].as_symbol().unwrap().id()));
        }
        Encoded {
            rows: table.len(),
            p: numeric.len(),
            q: categorical.len(),
            num,
            cat,
            m: schema.feature_count() as f64,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.rows
    }

    #[inline]
    fn num_row(&self, i: usize) -> &[f64] {
        &self.num[i * self.p..(i + 1) * self.p]
    }

    #[inline]
    fn cat_row(&self, i: usize) -> &[u32] {
        &self.cat[i * self.q..(i + 1) * self.q]
    }

    #[inline]
    pub(crate) fn raw(&self, i: usize, other: &Encoded, j: usize) -> f64 {
        euclidean(self.num_row(i), other.num_row(j))
    }

    #[inline]
    pub(crate) fn mixed(&self, i: usize, other: &Encoded, j: usize, norm: &DistanceNormalizer) -> f64 {
        let mismatches = self
            .cat_row(i)
            .iter()
            .zip(other.cat_row(j))
            .filter(|(a, b)| a != b)
            .count();
        (norm.normalize(self.raw(i, other, j)) + mismatches as f64) / self.m
    }
}

#[inline]
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_conforms(row: &[Cell], schema: &Schema) -> Result<()> {
    check_row(schema, row).map_err(|(col, reason)| Error::SchemaMismatch(format!("column {col}: {reason}")))
}

/// Euclidean distance over the numerical features, in original units.
pub fn raw_numeric_distance(a: &[Cell], b: &[Cell], schema: &Schema) -> Result<f64> {
    check_conforms(a, schema)?;
    check_conforms(b, schema)?;
    let pick = |row: &[Cell]| -> Vec<f64> {
        schema
            .numeric_features()
            .iter()
            .map(|&c| row[c].as_f64().unwrap())
            .collect()
    };
    Ok(euclidean(&pick(a), &pick(b)))
}

/// Mixed distance between two rows under a fitted normalizer.
pub fn mixed_distance(a: &[Cell], b: &[Cell], schema: &Schema, norm: &DistanceNormalizer) -> Result<f64> {
    let raw = raw_numeric_distance(a, b, schema)?;
    let mismatches = schema
        .categorical_features()
        .iter()
        .filter(|&&c| a[c] != b[c])
        .count();
    Ok((norm.normalize(raw) + mismatches as f64) / schema.feature_count() as f64)
}

/// Fits the normalizer over every (generated, train) pair.
pub fn fit_normalizer(generated: &Table, train: &Table) -> Result<DistanceNormalizer> {
    fit_normalizer_over(&[generated], &[train])
}

/// Fits the normalizer over the Cartesian product of the union of `left`
/// with the union of `right`.
pub fn fit_normalizer_over(left: &[&Table], right: &[&Table]) -> Result<DistanceNormalizer> {
    let first = left.first().or(right.first()).ok_or(Error::EmptyTable)?;
    for t in left.iter().chain(right) {
        first.ensure_same_schema(t)?;
        t.ensure_non_empty()?;
    }
    let left: Vec<Encoded> = left.iter().map(|t| Encoded::new(t)).collect();
    let right: Vec<Encoded> = right.iter().map(|t| Encoded::new(t)).collect();
    let (lo, hi) = left
        .iter()
        .flat_map(|l| (0..l.len()).map(move |i| (l, i)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(l, i)| {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in &right {
                for j in 0..r.len() {
                    let d = l.raw(i, r, j);
                    lo = lo.min(d);
                    hi = hi.max(d);
                }
            }
            (lo, hi)
        })
        .reduce(
            || (f64::INFINITY, f64::NEG_INFINITY),
            |a, b| (a.0.min(b.0), a.1.max(b.1)),
        );
    DistanceNormalizer::new(lo, hi)
}

fn two_nearest_encoded(query: &Encoded, i: usize, train: &Encoded, norm: &DistanceNormalizer) -> NeighborResult {
    let (mut i1, mut d1) = (usize::MAX, f64::INFINITY);
    let (mut i2, mut d2) = (usize::MAX, f64::INFINITY);
    for j in 0..train.len() {
        let d = query.mixed(i, train, j, norm);
        // strict comparisons keep the lower index on ties
        if d < d1 {
            (i2, d2) = (i1, d1);
            (i1, d1) = (j, d);
        } else if d < d2 {
            (i2, d2) = (j, d);
        }
    }
    NeighborResult {
        nn1_index: i1,
        nn1_distance: d1,
        nn2_index: i2,
        nn2_distance: d2,
    }
}

/// The two nearest training rows of every generated row.
pub fn two_nearest(generated: &Table, train: &Table, norm: &DistanceNormalizer) -> Result<Vec<NeighborResult>> {
    generated.ensure_same_schema(train)?;
    if train.len() < 2 {
        return Err(Error::TrainTooSmall(train.len()));
    }
    let (q, t) = (Encoded::new(generated), Encoded::new(train));
    Ok((0..q.len())
        .into_par_iter()
        .with_min_len(16)
        .map(|i| two_nearest_encoded(&q, i, &t, norm))
        .collect())
}

/// Distance from each query row to its closest reference row.
pub(crate) fn closest_distances(query: &Encoded, reference: &Encoded, norm: &DistanceNormalizer) -> Vec<f64> {
    (0..query.len())
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            (0..reference.len())
                .map(|j| query.mixed(i, reference, j, norm))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::Feature;

    fn schema() -> Schema {
        Schema::new(
            vec![
                Feature::numerical("x"),
                Feature::numerical("y"),
                Feature::categorical("a"),
                Feature::categorical("b"),
            ],
            None,
        )
        .unwrap()
    }

    fn row(x: f64, y: f64, a: &str, b: &str) -> Vec<Cell> {
        vec![x.into(), y.into(), a.into(), b.into()]
    }

    #[test]
    fn raw_distance() {
        let s = schema();
        let a = row(0.0, 0.0, "A", "B");
        assert_eq!(raw_numeric_distance(&a, &a, &s).unwrap(), 0.0);
        assert_eq!(raw_numeric_distance(&a, &row(3.0, 4.0, "A", "C"), &s).unwrap(), 5.0);

        let cat_only = Schema::new(vec![Feature::categorical("a")], None).unwrap();
        let r: Vec<Cell> = vec!["u".into()];
        assert_eq!(raw_numeric_distance(&r, &["v".into()], &cat_only).unwrap(), 0.0);
    }

    #[test]
    fn schema_mismatch() {
        let s = schema();
        let bad: Vec<Cell> = vec![0.0.into(), "A".into(), "A".into(), "B".into()];
        assert!(matches!(
            raw_numeric_distance(&bad, &row(0.0, 0.0, "A", "B"), &s),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn hand_evaluated_mixed_distance() {
        let s = schema();
        let norm = DistanceNormalizer::new(0.0, 10.0).unwrap();
        let a = row(0.0, 0.0, "A", "B");
        let b = row(3.0, 4.0, "A", "C");
        // (5/10 + 1) / 4
        assert_eq!(mixed_distance(&a, &b, &s, &norm).unwrap(), 0.375);
        assert_eq!(mixed_distance(&a, &a, &s, &norm).unwrap(), 0.0);
    }

    #[test]
    fn saturated_hamming() {
        let s = Schema::new(vec![Feature::categorical("a"), Feature::categorical("b")], None).unwrap();
        let norm = DistanceNormalizer::new(0.0, 0.0).unwrap();
        let a: Vec<Cell> = vec!["p".into(), "q".into()];
        let b: Vec<Cell> = vec!["r".into(), "s".into()];
        assert_eq!(mixed_distance(&a, &b, &s, &norm).unwrap(), 1.0);
    }

    #[test]
    fn normalizer_fitting() {
        let s = Schema::new(vec![Feature::numerical("x")], None).unwrap();
        let t = |xs: &[f64]| Table::new(s.clone(), xs.iter().map(|&x| vec![Cell::from(x)]).collect()).unwrap();
        // raw distances {0, 5, 10}
        let n = fit_normalizer(&t(&[0.0]), &t(&[0.0, 5.0, 10.0])).unwrap();
        assert_eq!((n.d_min, n.d_max), (0.0, 10.0));

        let single = fit_normalizer(&t(&[0.0]), &t(&[7.0])).unwrap();
        assert!(single.is_degenerate());
        assert_eq!(single.normalize(7.0), 0.0);

        let same = fit_normalizer(&t(&[2.0, 2.0]), &t(&[2.0, 2.0, 2.0])).unwrap();
        assert!(same.is_degenerate());
        assert_eq!(same.normalize(123.0), 0.0);

        assert!(matches!(fit_normalizer(&t(&[]), &t(&[1.0])), Err(Error::EmptyTable)));
    }

    #[test]
    fn normalizer_clamps() {
        let n = DistanceNormalizer::new(2.0, 4.0).unwrap();
        assert_eq!(n.normalize(3.0), 0.5);
        assert_eq!(n.normalize(1.0), 0.0);
        assert_eq!(n.normalize(9.0), 1.0);
        assert!(DistanceNormalizer::new(3.0, 1.0).is_err());
        assert!(DistanceNormalizer::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn exact_copy_and_ties() {
        let s = schema();
        let train = Table::new(
            s.clone(),
            vec![
                row(10.0, 10.0, "A", "B"),
                row(0.0, 0.0, "A", "B"),
                row(-10.0, -10.0, "C", "D"),
            ],
        )
        .unwrap();
        let gen = Table::new(s.clone(), vec![row(0.0, 0.0, "A", "B")]).unwrap();
        let norm = fit_normalizer(&gen, &train).unwrap();
        let r = two_nearest(&gen, &train, &norm).unwrap()[0];
        assert_eq!((r.nn1_index, r.nn1_distance), (1, 0.0));
        assert_eq!(r.nn2_index, 0);

        // query equidistant from train rows 0 and 1
        let train = Table::new(s.clone(), vec![row(1.0, 0.0, "A", "B"), row(-1.0, 0.0, "A", "B")]).unwrap();
        let gen = Table::new(s, vec![row(0.0, 0.0, "A", "B")]).unwrap();
        let norm = DistanceNormalizer::new(0.0, 2.0).unwrap();
        let r = two_nearest(&gen, &train, &norm).unwrap()[0];
        assert_eq!((r.nn1_index, r.nn2_index), (0, 1));
        assert_eq!(r.nn1_distance, r.nn2_distance);
    }

    #[test]
    fn train_too_small() {
        let s = schema();
        let one = Table::new(s.clone(), vec![row(0.0, 0.0, "A", "B")]).unwrap();
        let norm = DistanceNormalizer::new(0.0, 1.0).unwrap();
        assert!(matches!(two_nearest(&one, &one, &norm), Err(Error::TrainTooSmall(1))));
    }
}
