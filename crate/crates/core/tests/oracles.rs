//! Library results checked against straightforward reimplementations.

mod common;

use common::{mixed_schema, random_real_table, random_table};
use tabmem_core::distance::{fit_normalizer, two_nearest};
use tabmem_core::fidelity::{dcr_probability, ks_complement};
use tabmem_core::memorization::{mem_auc, memorization_ratio};
use tabmem_core::{Cell, FeatureKind, Schema, Table};

struct Brute {
    numeric: Vec<usize>,
    categorical: Vec<usize>,
    m: f64,
}

impl Brute {
    fn new(schema: &Schema) -> Self {
        let m = schema.feature_count();
        Brute {
            numeric: (0..m).filter(|&c| schema.column_kind(c) == FeatureKind::Numerical).collect(),
            categorical: (0..m).filter(|&c| schema.column_kind(c) == FeatureKind::Categorical).collect(),
            m: m as f64,
        }
    }

    fn raw(&self, a: &[Cell], b: &[Cell]) -> f64 {
        let mut s = 0.0;
        for &c in &self.numeric {
            let d = a[c].as_f64().unwrap() - b[c].as_f64().unwrap();
            s += d * d;
        }
        s.sqrt()
    }

    fn distance(&self, a: &[Cell], b: &[Cell], lo: f64, hi: f64) -> f64 {
        let raw = self.raw(a, b);
        let norm = if hi > lo { ((raw - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
        let mismatches = self.categorical.iter().filter(|&&c| a[c] != b[c]).count() as f64;
        (norm + mismatches) / self.m
    }
}

/// Double loop: nearest first, then the nearest among the rest; lower
/// index wins ties.
fn brute_two_nearest(gen: &Table, train: &Table) -> Vec<(usize, f64, usize, f64)> {
    let b = Brute::new(gen.schema());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for g in gen.rows() {
        for t in train.rows() {
            let d = b.raw(g, t);
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    gen.rows()
        .iter()
        .map(|g| {
            let d: Vec<f64> = train.rows().iter().map(|t| b.distance(g, t, lo, hi)).collect();
            let mut first = 0;
            for j in 1..d.len() {
                if d[j] < d[first] {
                    first = j;
                }
            }
            let mut second = usize::MAX;
            for j in 0..d.len() {
                if j != first && (second == usize::MAX || d[j] < d[second]) {
                    second = j;
                }
            }
            (first, d[first], second, d[second])
        })
        .collect()
}

#[test]
fn nearest_neighbors_match_brute_force() {
    for seed in 0..8u64 {
        let schema = mixed_schema(1 + (seed % 3) as usize, (seed % 4) as usize, seed % 2 == 0);
        let gen = random_table(&schema, 30 + seed as usize * 7, seed);
        let train = random_table(&schema, 40 + seed as usize * 5, 100 + seed);
        let norm = fit_normalizer(&gen, &train).unwrap();
        let got = two_nearest(&gen, &train, &norm).unwrap();
        for (g, (i1, d1, i2, d2)) in got.iter().zip(brute_two_nearest(&gen, &train)) {
            assert_eq!((g.nn1_index, g.nn2_index), (i1, i2), "seed {seed}");
            assert!((g.nn1_distance - d1).abs() <= 1e-12);
            assert!((g.nn2_distance - d2).abs() <= 1e-12);
        }
    }
}

#[test]
fn continuous_tables_match_brute_force() {
    let schema = mixed_schema(3, 2, true);
    let gen = random_real_table(&schema, 60, 1);
    let train = random_real_table(&schema, 80, 2);
    let norm = fit_normalizer(&gen, &train).unwrap();
    let got = two_nearest(&gen, &train, &norm).unwrap();
    for (g, (i1, d1, i2, d2)) in got.iter().zip(brute_two_nearest(&gen, &train)) {
        assert_eq!((g.nn1_index, g.nn2_index), (i1, i2));
        assert!((g.nn1_distance - d1).abs() <= 1e-12 && (g.nn2_distance - d2).abs() <= 1e-12);
    }
}

/// Left Riemann sum of the memorized fraction on a fine τ grid.
fn grid_auc(ratios: &[f64], steps: usize) -> f64 {
    let mut total = 0.0;
    for k in 0..steps {
        let tau = (k as f64 + 0.5) / steps as f64;
        total += memorization_ratio(ratios, tau).unwrap();
    }
    total / steps as f64
}

#[test]
fn mem_auc_matches_grid_integration() {
    let ratios: Vec<f64> = (0..997).map(|i| ((i * 7919) % 997) as f64 / 996.0).collect();
    let closed = mem_auc(&ratios).unwrap();
    assert!((closed - grid_auc(&ratios, 100_000)).abs() < 1e-4);
    let skewed: Vec<f64> = ratios.iter().map(|r| r * r).collect();
    assert!((mem_auc(&skewed).unwrap() - grid_auc(&skewed, 100_000)).abs() < 1e-4);
}

/// Sup of |F_a − F_b| evaluated at every sample point.
fn ks_oracle(a: &[f64], b: &[f64]) -> f64 {
    let cdf = |s: &[f64], x: f64| s.iter().filter(|&&v| v <= x).count() as f64 / s.len() as f64;
    a.iter()
        .chain(b)
        .map(|&x| (cdf(a, x) - cdf(b, x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn ks_matches_step_cdf_oracle() {
    let schema = mixed_schema(2, 0, false);
    for seed in 0..10 {
        let a = random_table(&schema, 25, seed).numeric_column(0);
        let b = random_table(&schema, 33, seed + 50).numeric_column(1);
        assert!((ks_complement(&a, &b).unwrap() - (1.0 - ks_oracle(&a, &b))).abs() < 1e-15);
    }
}

#[test]
fn dcr_matches_brute_force_and_is_complementary() {
    let schema = mixed_schema(2, 2, false);
    for seed in 0..6 {
        let syn = random_table(&schema, 40, seed);
        let a = random_table(&schema, 30, seed + 10);
        let b = random_table(&schema, 35, seed + 20);
        let forward = dcr_probability(&syn, &a, &b).unwrap();
        let backward = dcr_probability(&syn, &b, &a).unwrap();
        assert_eq!(forward + backward, 1.0);

        let brute = Brute::new(&schema);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for s in syn.rows() {
            for r in a.rows().iter().chain(b.rows()) {
                let d = brute.raw(s, r);
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        let mut wins = 0.0;
        for s in syn.rows() {
            let da = a.rows().iter().map(|r| brute.distance(s, r, lo, hi)).fold(f64::INFINITY, f64::min);
            let db = b.rows().iter().map(|r| brute.distance(s, r, lo, hi)).fold(f64::INFINITY, f64::min);
            wins += if da < db { 1.0 } else if da == db { 0.5 } else { 0.0 };
        }
        assert_eq!(forward, wins / syn.len() as f64);
    }
}
