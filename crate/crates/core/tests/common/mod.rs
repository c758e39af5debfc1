#![allow(dead_code)]

use rand::Rng;
use tabmem_core::rng;
use tabmem_core::{Cell, Feature, Row, Schema, Table};

pub fn mixed_schema(p: usize, q: usize, target: bool) -> Schema {
    let mut features: Vec<Feature> = (0..p).map(|i| Feature::numerical(format!("n{i}"))).collect();
    features.extend((0..q).map(|i| Feature::categorical(format!("c{i}"))));
    if target {
        features.push(Feature::categorical("label"));
    }
    Schema::new(features, target.then(|| "label".to_string())).unwrap()
}

/// Integer-valued numericals and a small category alphabet, so ties and
/// scaling stay exact.
pub fn random_table(schema: &Schema, n: usize, seed: u64) -> Table {
    let mut rng = rng::seeded(seed);
    let levels = ["a", "b", "c", "d"];
    let rows: Vec<Row> = (0..n)
        .map(|_| {
            (0..schema.width())
                .map(|c| match schema.column_kind(c) {
                    tabmem_core::FeatureKind::Numerical => Cell::Float(rng.random_range(-20..=20) as f64),
                    tabmem_core::FeatureKind::Categorical => Cell::from(levels[rng.random_range(0..levels.len())]),
                })
                .collect()
        })
        .collect();
    Table::new(schema.clone(), rows).unwrap()
}

/// Continuous numericals.
pub fn random_real_table(schema: &Schema, n: usize, seed: u64) -> Table {
    let mut rng = rng::seeded(seed);
    let levels = ["a", "b", "c"];
    let rows: Vec<Row> = (0..n)
        .map(|_| {
            (0..schema.width())
                .map(|c| match schema.column_kind(c) {
                    tabmem_core::FeatureKind::Numerical => Cell::Float(rng.random_range(-5.0..5.0)),
                    tabmem_core::FeatureKind::Categorical => Cell::from(levels[rng.random_range(0..levels.len())]),
                })
                .collect()
        })
        .collect();
    Table::new(schema.clone(), rows).unwrap()
}
