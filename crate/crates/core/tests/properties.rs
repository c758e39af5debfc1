mod common;

use common::{mixed_schema, random_table};
use proptest::prelude::*;
use tabmem_core::association::{cluster_table, FeatureClusters, NumCatMeasure};
use tabmem_core::augment::{class_prior, cutmixplus_once};
use tabmem_core::distance::{fit_normalizer, mixed_distance, two_nearest};
use tabmem_core::fidelity::{dcr_probability, fidelity_report, ks_complement, shape_score, trend_score};
use tabmem_core::memorization::{distance_ratios, mem_auc, memorization_ratio};
use tabmem_core::rng;
use tabmem_core::scorelab::{optimal_score_sigma, LatentSet};
use tabmem_core::{Cell, Table};

fn shape() -> impl Strategy<Value = (usize, usize, bool)> {
    (0usize..3, 0usize..3, any::<bool>()).prop_filter("at least one feature", |(p, q, _)| p + q > 0)
}

fn permuted(t: &Table, seed: u64) -> Table {
    use rand::seq::SliceRandom;
    let mut idx: Vec<usize> = (0..t.len()).collect();
    idx.shuffle(&mut rng::seeded(seed));
    t.select(&idx)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_is_symmetric_and_bounded((p, q, y) in shape(), seed in any::<u64>()) {
        let schema = mixed_schema(p, q, y);
        let a = random_table(&schema, 6, seed);
        let b = random_table(&schema, 7, seed ^ 1);
        let norm = fit_normalizer(&a, &b).unwrap();
        for r in a.rows() {
            for s in b.rows() {
                let d = mixed_distance(r, s, &schema, &norm).unwrap();
                prop_assert_eq!(d, mixed_distance(s, r, &schema, &norm).unwrap());
                prop_assert!((0.0..=1.0).contains(&d));
            }
        }
    }

    #[test]
    fn neighbors_ignore_numeric_scale(q in 0usize..3, seed in any::<u64>(), pow in -4i32..6) {
        let schema = mixed_schema(2, q, false);
        let gen = random_table(&schema, 12, seed);
        let train = random_table(&schema, 15, seed ^ 7);
        let factor = 2f64.powi(pow);
        let scale = |t: &Table| t.with_rows(t.rows().iter().map(|r| r.iter().map(|c| match c {
            Cell::Float(v) => Cell::Float(v * factor),
            other => *other,
        }).collect()).collect()).unwrap();
        let (gs, ts) = (scale(&gen), scale(&train));
        let a = two_nearest(&gen, &train, &fit_normalizer(&gen, &train).unwrap()).unwrap();
        let b = two_nearest(&gs, &ts, &fit_normalizer(&gs, &ts).unwrap()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!((x.nn1_index, x.nn2_index), (y.nn1_index, y.nn2_index));
        }
    }

    #[test]
    fn memorized_fraction_grows_with_threshold(ratios in prop::collection::vec(0.0f64..=1.0, 1..60), a in 0.01f64..1.0, b in 0.01f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(memorization_ratio(&ratios, lo).unwrap() <= memorization_ratio(&ratios, hi).unwrap());
        let auc = mem_auc(&ratios).unwrap();
        prop_assert!((0.0..=1.0).contains(&auc));
    }

    #[test]
    fn ratios_ignore_generated_row_order((p, q, y) in shape(), seed in any::<u64>()) {
        let schema = mixed_schema(p, q, y);
        let gen = random_table(&schema, 20, seed);
        let train = random_table(&schema, 20, seed ^ 3);
        let mut a = distance_ratios(&gen, &train).unwrap();
        let mut b = distance_ratios(&permuted(&gen, seed), &train).unwrap();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn clusters_partition_and_coarsen(seed in any::<u64>(), t1 in 0.0f64..=1.0, t2 in 0.0f64..=1.0) {
        let schema = mixed_schema(3, 3, false);
        let table = random_table(&schema, 40, seed);
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let fine = cluster_table(&table, lo, NumCatMeasure::Eta).unwrap();
        let coarse = cluster_table(&table, hi, NumCatMeasure::Eta).unwrap();
        let mut all: Vec<usize> = fine.clusters.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..6).collect::<Vec<_>>());
        for c in &fine.clusters {
            prop_assert!(coarse.clusters.iter().any(|d| c.iter().all(|f| d.contains(f))));
        }
    }

    #[test]
    fn cutmixplus_moves_clusters_whole(seed in any::<u64>(), split in 1usize..4) {
        let schema = mixed_schema(2, 2, true);
        let table = random_table(&schema, 30, seed);
        let prior = class_prior(&table).unwrap();
        prop_assume!(prior.require_pairs().is_ok());
        let clusters = FeatureClusters::new(vec![(0..split).collect(), (split..4).collect()], 4, 0.5).unwrap();
        let mut rng = rng::seeded(seed);
        for _ in 0..20 {
            let row = cutmixplus_once(&table, &prior, &clusters, &mut rng).unwrap();
            for c in &clusters.clusters {
                prop_assert!(table.rows().iter().any(|r| r[4] == row[4] && c.iter().all(|&f| r[f] == row[f])));
            }
        }
    }

    #[test]
    fn ks_ignores_monotone_transforms(a in prop::collection::vec(-50i32..50, 1..40), b in prop::collection::vec(-50i32..50, 1..40)) {
        let x: Vec<f64> = a.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = b.iter().map(|&v| v as f64).collect();
        let f = |v: &f64| v * v * v + 3.0 * v - 7.0;
        let fx: Vec<f64> = x.iter().map(f).collect();
        let fy: Vec<f64> = y.iter().map(f).collect();
        prop_assert_eq!(ks_complement(&x, &y).unwrap(), ks_complement(&fx, &fy).unwrap());
    }

    #[test]
    fn dcr_is_exactly_complementary((p, q, y) in shape(), seed in any::<u64>(), n in 1usize..40) {
        let schema = mixed_schema(p, q, y);
        let syn = random_table(&schema, n, seed);
        let a = random_table(&schema, 9, seed ^ 5);
        let b = random_table(&schema, 11, seed ^ 9);
        prop_assert_eq!(dcr_probability(&syn, &a, &b).unwrap() + dcr_probability(&syn, &b, &a).unwrap(), 1.0);
    }

    #[test]
    fn self_fidelity_is_perfect(p in 1usize..3, q in 0usize..3, y in any::<bool>(), seed in any::<u64>()) {
        let schema = mixed_schema(p, q, y);
        prop_assume!(schema.width() >= 2);
        let t = random_table(&schema, 25, seed);
        prop_assert_eq!(shape_score(&t, &t).unwrap(), 1.0);
        prop_assert_eq!(trend_score(&t, &t, 10).unwrap(), 1.0);
        prop_assert_eq!(shape_score(&t, &permuted(&t, seed)).unwrap(), 1.0);
    }

    #[test]
    fn report_fields_stay_in_unit_interval(seed in any::<u64>()) {
        let schema = mixed_schema(2, 1, true);
        let real = random_table(&schema, 30, seed);
        let syn = random_table(&schema, 25, seed ^ 11);
        let r = fidelity_report(&real, &syn, Some(&syn), seed).unwrap();
        for v in [r.shape_score, r.trend_score, r.c2st_score, r.alpha_precision, r.beta_recall, r.dcr_probability.unwrap()] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn score_is_translation_equivariant(seed in any::<u64>(), vx in -5.0f64..5.0, vy in -5.0f64..5.0, sigma in 0.01f64..2.0) {
        let latents = LatentSet::random(6, 2, &mut rng::seeded(seed)).unwrap();
        let shifted = LatentSet::new(latents.iter().map(|p| vec![p[0] + vx, p[1] + vy]).collect()).unwrap();
        let z = [0.2, -0.1];
        let a = optimal_score_sigma(&z, sigma, &latents).unwrap();
        let b = optimal_score_sigma(&[z[0] + vx, z[1] + vy], sigma, &shifted).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-6 * (1.0 + x.abs()) / (sigma * sigma));
        }
    }
}
