//! Pairwise feature association for mixed-type tables and average-linkage
//! clustering of features into swap groups.
//!
//! Association strength is `|ρ|` (Pearson) for numerical pairs, Cramér's V
//! for categorical pairs and η (or η²) for numerical–categorical pairs.
//! Clustering runs on the dissimilarity `1 − strength`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbol::Symbol;
use crate::table::{Column, Schema, Table};

pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 0.7;

fn check_pair(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(a, b));
    }
    if a < 2 {
        return Err(Error::TooShort { needed: 2, got: a });
    }
    Ok(())
}

fn is_constant(x: &[f64]) -> bool {
    x.iter().all(|&v| v == x[0])
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Dense codes in first-appearance order, plus the number of levels.
pub(crate) fn encode(col: &[Symbol]) -> (Vec<usize>, usize) {
    let mut ids: HashMap<Symbol, usize> = HashMap::new();
    let codes = col
        .iter()
        .map(|s| {
            let next = ids.len();
            *ids.entry(*s).or_insert(next)
        })
        .collect();
    (codes, ids.len())
}

/// Sample Pearson correlation; 0 when either column is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a.len(), b.len())?;
    if is_constant(a) || is_constant(b) {
        return Ok(0.0);
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    Ok((cov / (va * vb).sqrt()).clamp(-1.0, 1.0))
}

/// Cramér's V of an `r × c` contingency table of counts, without bias
/// correction. Zero when either margin has a single non-empty level.
pub fn cramers_v_from_counts(counts: &[Vec<u64>]) -> f64 {
    let cols = counts.first().map_or(0, Vec::len);
    let row_sums: Vec<f64> = counts.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols)
        .map(|j| counts.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let n: f64 = row_sums.iter().sum();
    let r = row_sums.iter().filter(|&&s| s > 0.0).count();
    let c = col_sums.iter().filter(|&&s| s > 0.0).count();
    let k = r.min(c).saturating_sub(1);
    if k == 0 || n == 0.0 {
        return 0.0;
    }
    let mut chi2 = 0.0;
    for (i, row) in counts.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            let e = row_sums[i] * col_sums[j] / n;
            if e > 0.0 {
                chi2 += (o as f64 - e).powi(2) / e;
            }
        }
    }
    (chi2 / (n * k as f64)).sqrt().clamp(0.0, 1.0)
}

pub(crate) fn contingency(a: &[Symbol], b: &[Symbol]) -> Vec<Vec<u64>> {
    let (ca, ra) = encode(a);
    let (cb, rb) = encode(b);
    let mut counts = vec![vec![0u64; rb]; ra];
    for (&i, &j) in ca.iter().zip(&cb) {
        counts[i][j] += 1;
    }
    counts
}

pub fn cramers_v(a: &[Symbol], b: &[Symbol]) -> Result<f64> {
    check_pair(a.len(), b.len())?;
    Ok(cramers_v_from_counts(&contingency(a, b)))
}

/// Correlation ratio η² = SS_between / SS_total of `num` grouped by `cat`;
/// 0 when `num` is constant.
pub fn eta_squared(num: &[f64], cat: &[Symbol]) -> Result<f64> {
    check_pair(num.len(), cat.len())?;
    if is_constant(num) {
        return Ok(0.0);
    }
    let (codes, levels) = encode(cat);
    let grand = mean(num);
    let mut sums = vec![0.0; levels];
    let mut sizes = vec![0usize; levels];
    for (&v, &g) in num.iter().zip(&codes) {
        sums[g] += v;
        sizes[g] += 1;
    }
    let ss_between: f64 = sums
        .iter()
        .zip(&sizes)
        .map(|(&s, &n)| {
            let m = s / n as f64;
            n as f64 * (m - grand).powi(2)
        })
        .sum();
    let ss_total: f64 = num.iter().map(|v| (v - grand).powi(2)).sum();
    if ss_total == 0.0 {
        return Ok(0.0);
    }
    Ok((ss_between / ss_total).clamp(0.0, 1.0))
}

/// How numerical–categorical pairs enter the association matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NumCatMeasure {
    /// √η², on the same scale as |ρ| and V.
    #[default]
    Eta,
    EtaSquared,
}

/// Symmetric feature-by-feature association strengths in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssociationMatrix {
    names: Vec<String>,
    values: Vec<f64>,
}

impl AssociationMatrix {
    /// Builds from a full row-major square matrix, checking symmetry, range
    /// and the unit diagonal.
    pub fn from_values(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let m = names.len();
        if values.len() != m * m {
            return Err(Error::LengthMismatch(values.len(), m * m));
        }
        for i in 0..m {
            if values[i * m + i] != 1.0 {
                return Err(Error::InvalidConfig("association diagonal must be 1".into()));
            }
            for j in 0..m {
                let v = values[i * m + j];
                if !(0.0..=1.0).contains(&v) || v != values[j * m + i] {
                    return Err(Error::InvalidConfig(format!(
                        "association ({i}, {j}) must be symmetric and in [0, 1]"
                    )));
                }
            }
        }
        Ok(AssociationMatrix { names, values })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.len().max(1))
    }
}

pub fn association_matrix(table: &Table) -> Result<AssociationMatrix> {
    association_matrix_with(table, NumCatMeasure::default())
}

pub fn association_matrix_with(table: &Table, measure: NumCatMeasure) -> Result<AssociationMatrix> {
    if table.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: table.len(),
        });
    }
    let schema = table.schema();
    let m = schema.feature_count();
    let columns: Vec<_> = (0..m).map(|c| table.column(c)).collect();
    let pairs: Vec<(usize, usize)> = (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let strengths = pairs
        .par_iter()
        .map(|&(i, j)| pair_strength(&columns, i, j, measure))
        .collect::<Result<Vec<f64>>>()?;

    let mut values = vec![0.0; m * m];
    for i in 0..m {
        values[i * m + i] = 1.0;
    }
    for (&(i, j), &s) in pairs.iter().zip(&strengths) {
        values[i * m + j] = s;
        values[j * m + i] = s;
    }
    let names = schema.features().iter().map(|f| f.name.clone()).collect();
    Ok(AssociationMatrix { names, values })
}

fn pair_strength(columns: &[Column], i: usize, j: usize, measure: NumCatMeasure) -> Result<f64> {
    use Column::*;
    let s = match (&columns[i], &columns[j]) {
        (Numerical(a), Numerical(b)) => pearson(a, b)?.abs(),
        (Categorical(a), Categorical(b)) => cramers_v(a, b)?,
        (Numerical(x), Categorical(g)) | (Categorical(g), Numerical(x)) => {
            let e2 = eta_squared(x, g)?;
            match measure {
                NumCatMeasure::Eta => e2.sqrt(),
                NumCatMeasure::EtaSquared => e2,
            }
        }
    };
    Ok(s.clamp(0.0, 1.0))
}

/// One agglomeration step: clusters identified by their smallest feature
/// index merge at `height` (average dissimilarity).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

/// Full average-linkage merge sequence on `1 − assoc`.
///
/// Among equal heights the pair with the lexicographically smallest
/// (lowest-index) representatives merges first.
pub fn average_linkage(assoc: &AssociationMatrix) -> Vec<Merge> {
    let m = assoc.len();
    let mut dist: Vec<f64> = (0..m * m)
        .map(|k| (1.0 - assoc.values[k]).clamp(0.0, 1.0))
        .collect();
    let mut size = vec![1usize; m];
    let mut active = vec![true; m];
    let mut merges = Vec::with_capacity(m.saturating_sub(1));

    for _ in 1..m {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in (0..m).filter(|&i| active[i]) {
            for j in (i + 1..m).filter(|&j| active[j]) {
                let d = dist[i * m + j];
                if best.map_or(true, |(_, _, bd)| d < bd) {
                    best = Some((i, j, d));
                }
            }
        }
        let (a, b, h) = best.expect("at least two active clusters");
        // slot `a` keeps the merged cluster; its smallest member is still `a`
        let (na, nb) = (size[a] as f64, size[b] as f64);
        for k in (0..m).filter(|&k| active[k] && k != a && k != b) {
            let d = (na * dist[a * m + k] + nb * dist[b * m + k]) / (na + nb);
            dist[a * m + k] = d;
            dist[k * m + a] = d;
        }
        size[a] += size[b];
        active[b] = false;
        merges.push(Merge {
            left: a,
            right: b,
            height: h,
        });
    }
    merges
}

/// A partition of feature indices into swap groups.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureClusters {
    pub clusters: Vec<Vec<usize>>,
    pub threshold: f64,
}

impl FeatureClusters {
    /// Validates that `clusters` partitions `0..features`; groups are
    /// normalized to ascending order.
    pub fn new(mut clusters: Vec<Vec<usize>>, features: usize, threshold: f64) -> Result<Self> {
        let mut seen = vec![false; features];
        for c in &mut clusters {
            if c.is_empty() {
                return Err(Error::InvalidConfig("empty feature cluster".into()));
            }
            c.sort_unstable();
            for &f in c.iter() {
                if f >= features || std::mem::replace(&mut seen[f], true) {
                    return Err(Error::InvalidConfig(format!(
                        "feature {f} is out of range or in more than one cluster"
                    )));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("clusters do not cover every feature".into()));
        }
        clusters.sort_by_key(|c| c[0]);
        Ok(FeatureClusters { clusters, threshold })
    }

    pub fn singletons(features: usize) -> Self {
        FeatureClusters {
            clusters: (0..features).map(|f| vec![f]).collect(),
            threshold: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn named(&self, schema: &Schema) -> Vec<Vec<String>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&f| schema.column_name(f).to_owned()).collect())
            .collect()
    }
}

/// Cuts the average-linkage tree: merges are applied in order while their
/// height is at most `threshold`. A threshold of 0 performs no merges and
/// a threshold of 1 merges everything.
pub fn cluster_features(assoc: &AssociationMatrix, threshold: f64) -> Result<FeatureClusters> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidThreshold(threshold));
    }
    let m = assoc.len();
    let mut members: Vec<Vec<usize>> = (0..m).map(|f| vec![f]).collect();
    if threshold > 0.0 {
        for merge in average_linkage(assoc) {
            if merge.height > threshold {
                break;
            }
            let moved = std::mem::take(&mut members[merge.right]);
            members[merge.left].extend(moved);
        }
    }
    let clusters = members.into_iter().filter(|c| !c.is_empty()).collect();
    FeatureClusters::new(clusters, m, threshold)
}

/// Kind-aware convenience: the association matrix of `table` clustered at
/// `threshold`.
pub fn cluster_table(table: &Table, threshold: f64, measure: NumCatMeasure) -> Result<FeatureClusters> {
    cluster_features(&association_matrix_with(table, measure)?, threshold)
}
