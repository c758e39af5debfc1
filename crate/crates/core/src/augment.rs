//! Training-set augmentation: TabCutMix, TabCutMixPlus and an
//! independent-feature (IJF) baseline.
//!
//! TabCutMix builds a row from two distinct donors of the same class: a
//! mixing proportion `λ ~ U(0, 1)` is drawn, then every feature is taken
//! from donor A with probability `λ` and from donor B otherwise.
//! TabCutMixPlus does the same per feature cluster, with its own `λ` for
//! every cluster, so correlated features always travel together.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{cluster_table, FeatureClusters, NumCatMeasure, DEFAULT_CLUSTER_THRESHOLD};
use crate::error::{Error, Result};
use crate::rng;
use crate::symbol::Symbol;
use crate::table::{Cell, FeatureKind, Row, Table};

pub const DEFAULT_RATIO: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AugmentMode {
    CutMix,
    CutMixPlus,
    Ijf,
}

impl std::str::FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cutmix" => Ok(AugmentMode::CutMix),
            "cutmixplus" => Ok(AugmentMode::CutMixPlus),
            "ijf" => Ok(AugmentMode::Ijf),
            other => Err(Error::InvalidConfig(format!("unknown augmentation mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub mode: AugmentMode,
    /// Augmented rows per original row.
    pub ratio: f64,
    pub seed: u64,
    /// Dissimilarity cut for TabCutMixPlus feature clusters.
    pub cluster_threshold: f64,
    pub num_cat: NumCatMeasure,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            mode: AugmentMode::CutMix,
            ratio: DEFAULT_RATIO,
            seed: 0,
            cluster_threshold: DEFAULT_CLUSTER_THRESHOLD,
            num_cat: NumCatMeasure::default(),
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio.is_finite() && self.ratio >= 0.0) {
            return Err(Error::InvalidConfig(format!("ratio must be >= 0, got {}", self.ratio)));
        }
        if !(0.0..=1.0).contains(&self.cluster_threshold) {
            return Err(Error::InvalidThreshold(self.cluster_threshold));
        }
        Ok(())
    }
}

/// Number of rows `augment` appends to a table of `rows` rows.
pub fn augmented_count(rows: usize, ratio: f64) -> usize {
    (ratio * rows as f64).round() as usize
}

/// Which donor each swap unit comes from (`true` = donor A), with the
/// Bernoulli parameter(s) that produced the bits.
#[derive(Clone, Debug, PartialEq)]
pub struct MixMask {
    pub bits: Vec<bool>,
    /// One entry for a shared `λ`, or one per unit.
    pub lambdas: Vec<f64>,
}

impl MixMask {
    /// One `λ` shared by all units.
    pub fn draw_shared<R: Rng + ?Sized>(units: usize, rng: &mut R) -> Self {
        let lambda: f64 = rng.random();
        let bits = (0..units).map(|_| rng.random_bool(lambda)).collect();
        MixMask {
            bits,
            lambdas: vec![lambda],
        }
    }

    /// A fresh `λ` for every unit.
    pub fn draw_per_unit<R: Rng + ?Sized>(units: usize, rng: &mut R) -> Self {
        let mut bits = Vec::with_capacity(units);
        let mut lambdas = Vec::with_capacity(units);
        for _ in 0..units {
            let lambda: f64 = rng.random();
            bits.push(rng.random_bool(lambda));
            lambdas.push(lambda);
        }
        MixMask { bits, lambdas }
    }

    pub fn constant(units: usize, bit: bool) -> Self {
        MixMask {
            bits: vec![bit; units],
            lambdas: vec![if bit { 1.0 } else { 0.0 }],
        }
    }
}

/// Empirical class distribution of a labelled table, classes in
/// first-appearance order.
#[derive(Clone, Debug)]
pub struct ClassPrior {
    classes: Vec<Symbol>,
    members: Vec<Vec<usize>>,
    sampler: WeightedIndex<usize>,
}

pub fn class_prior(train: &Table) -> Result<ClassPrior> {
    let labels = train.labels().ok_or(Error::NoTarget)?;
    train.ensure_non_empty()?;
    let mut classes: Vec<Symbol> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        match classes.iter().position(|c| c == label) {
            Some(k) => members[k].push(i),
            None => {
                classes.push(*label);
                members.push(vec![i]);
            }
        }
    }
    let sampler = WeightedIndex::new(members.iter().map(Vec::len)).expect("non-empty classes");
    Ok(ClassPrior {
        classes,
        members,
        sampler,
    })
}

impl ClassPrior {
    pub fn classes(&self) -> &[Symbol] {
        &self.classes
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n: usize = self.members.iter().map(Vec::len).sum();
        self.members.iter().map(|m| m.len() as f64 / n as f64).collect()
    }

    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    pub fn sample_class<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.sampler.sample(rng)
    }

    /// Every class must be able to supply two distinct donors.
    pub fn require_pairs(&self) -> Result<()> {
        match self.members.iter().position(|m| m.len() < 2) {
            Some(k) => Err(Error::ClassTooSmall(self.classes[k].to_string())),
            None => Ok(()),
        }
    }

    fn draw_donors<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(usize, usize, usize)> {
        let class = self.sample_class(rng);
        let members = &self.members[class];
        if members.len() < 2 {
            return Err(Error::ClassTooSmall(self.classes[class].to_string()));
        }
        let a = rng.random_range(0..members.len());
        let mut b = rng.random_range(0..members.len() - 1);
        if b >= a {
            b += 1;
        }
        Ok((class, members[a], members[b]))
    }
}

/// Takes unit `k` of the output from `a` when `mask.bits[k]` is set and
/// from `b` otherwise; the label becomes `label`.
pub fn mix_rows(a: &[Cell], b: &[Cell], units: &[Vec<usize>], mask: &MixMask, label: Option<Symbol>) -> Row {
    debug_assert_eq!(units.len(), mask.bits.len());
    let mut out = b.to_vec();
    for (unit, &from_a) in units.iter().zip(&mask.bits) {
        if from_a {
            for &f in unit {
                out[f] = a[f];
            }
        }
    }
    if let Some(label) = label {
        *out.last_mut().expect("labelled row") = Cell::Category(label);
    }
    out
}

fn single_units(features: usize) -> Vec<Vec<usize>> {
    (0..features).map(|f| vec![f]).collect()
}

/// One TabCutMix row.
pub fn cutmix_once<R: Rng + ?Sized>(train: &Table, prior: &ClassPrior, rng: &mut R) -> Result<Row> {
    let (class, a, b) = prior.draw_donors(rng)?;
    let m = train.schema().feature_count();
    let mask = MixMask::draw_shared(m, rng);
    Ok(mix_rows(
        train.row(a),
        train.row(b),
        &single_units(m),
        &mask,
        Some(prior.classes[class]),
    ))
}

/// One TabCutMixPlus row: clusters are swapped whole.
pub fn cutmixplus_once<R: Rng + ?Sized>(
    train: &Table,
    prior: &ClassPrior,
    clusters: &FeatureClusters,
    rng: &mut R,
) -> Result<Row> {
    let (class, a, b) = prior.draw_donors(rng)?;
    let mask = MixMask::draw_per_unit(clusters.len(), rng);
    Ok(mix_rows(
        train.row(a),
        train.row(b),
        &clusters.clusters,
        &mask,
        Some(prior.classes[class]),
    ))
}

enum Marginal {
    Gaussian { mean: f64, std: f64 },
    Categorical { levels: Vec<Symbol>, sampler: WeightedIndex<usize> },
}

/// Independent per-column marginals: Gaussian (MLE) for numerical columns,
/// empirical frequencies for categorical columns and the label.
pub struct IjfModel {
    marginals: Vec<Marginal>,
}

impl IjfModel {
    pub fn fit(train: &Table) -> Result<Self> {
        if train.len() < 2 {
            return Err(Error::TooFewRows {
                needed: 2,
                got: train.len(),
            });
        }
        let schema = train.schema();
        let marginals = (0..schema.width())
            .map(|c| match schema.column_kind(c) {
                FeatureKind::Numerical => {
                    let x = train.numeric_column(c);
                    let n = x.len() as f64;
                    let mean = x.iter().sum::<f64>() / n;
                    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                    Marginal::Gaussian { mean, std: var.sqrt() }
                }
                FeatureKind::Categorical => {
                    let mut levels: Vec<Symbol> = Vec::new();
                    let mut counts: Vec<usize> = Vec::new();
                    for s in train.category_column(c) {
                        match levels.iter().position(|l| *l == s) {
                            Some(k) => counts[k] += 1,
                            None => {
                                levels.push(s);
                                counts.push(1);
                            }
                        }
                    }
                    let sampler = WeightedIndex::new(&counts).expect("non-empty column");
                    Marginal::Categorical { levels, sampler }
                }
            })
            .collect();
        Ok(IjfModel { marginals })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Row {
        self.marginals
            .iter()
            .map(|m| match m {
                Marginal::Gaussian { mean, std } => {
                    if *std == 0.0 {
                        Cell::Float(*mean)
                    } else {
                        let z: f64 = rng.sample(StandardNormal);
                        Cell::Float(mean + std * z)
                    }
                }
                Marginal::Categorical { levels, sampler } => Cell::Category(levels[sampler.sample(rng)]),
            })
            .collect()
    }
}

pub fn ijf_sample<R: Rng + ?Sized>(train: &Table, rng: &mut R) -> Result<Row> {
    Ok(IjfModel::fit(train)?.sample(rng))
}

/// Original rows followed by `round(ratio × n)` augmented rows. Row `i` of
/// the augmented block draws from its own stream of `config.seed`.
pub fn augment(train: &Table, config: &AugmentConfig) -> Result<Table> {
    config.validate()?;
    train.ensure_non_empty()?;
    let count = augmented_count(train.len(), config.ratio);

    let generate: Box<dyn Fn(&mut rng::Rng) -> Result<Row> + Sync> = match config.mode {
        AugmentMode::CutMix => {
            let prior = class_prior(train)?;
            prior.require_pairs()?;
            Box::new(move |rng| cutmix_once(train, &prior, rng))
        }
        AugmentMode::CutMixPlus => {
            let prior = class_prior(train)?;
            prior.require_pairs()?;
            let clusters = cluster_table(train, config.cluster_threshold, config.num_cat)?;
            Box::new(move |rng| cutmixplus_once(train, &prior, &clusters, rng))
        }
        AugmentMode::Ijf => {
            let model = IjfModel::fit(train)?;
            Box::new(move |rng| Ok(model.sample(rng)))
        }
    };
    if count == 0 {
        return Ok(train.clone());
    }

    let extra = (0..count)
        .into_par_iter()
        .map(|i| generate(&mut rng::stream(config.seed, i as u64)))
        .collect::<Result<Vec<Row>>>()?;
    let mut rows = train.rows().to_vec();
    rows.extend(extra);
    train.with_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Feature, Schema};

    fn schema() -> Schema {
        Schema::new(
            vec![
                Feature::numerical("x"),
                Feature::categorical("c"),
                Feature::numerical("z"),
                Feature::categorical("y"),
            ],
            Some("y".into()),
        )
        .unwrap()
    }

    fn table(labels: &[&str]) -> Table {
        let rows = labels
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                vec![
                    Cell::from(i as f64),
                    Cell::from(["u", "v", "w"][i % 3]),
                    Cell::from(100.0 + i as f64),
                    Cell::from(y),
                ]
            })
            .collect();
        Table::new(schema(), rows).unwrap()
    }

    #[test]
    fn priors() {
        let p = class_prior(&table(&["A", "A", "B", "B"])).unwrap();
        assert_eq!(p.probabilities(), vec![0.5, 0.5]);
        let p = class_prior(&table(&["A", "A", "A", "B"])).unwrap();
        assert_eq!(p.probabilities(), vec![0.75, 0.25]);
        assert!(matches!(p.require_pairs(), Err(Error::ClassTooSmall(c)) if c == "B"));
        let p = class_prior(&table(&["A", "A"])).unwrap();
        assert_eq!(p.probabilities(), vec![1.0]);
        assert_eq!(p.classes(), &[Symbol::new("A")]);

        let unlabeled = Schema::new(vec![Feature::numerical("x")], None).unwrap();
        let t = Table::new(unlabeled, vec![vec![1.0.into()]]).unwrap();
        assert!(matches!(class_prior(&t), Err(Error::NoTarget)));
    }

    #[test]
    fn forced_masks() {
        let t = table(&["A", "A"]);
        let units = single_units(3);
        let all_a = mix_rows(t.row(0), t.row(1), &units, &MixMask::constant(3, true), Some(Symbol::new("A")));
        assert_eq!(&all_a[..3], &t.row(0)[..3]);
        let all_b = mix_rows(t.row(0), t.row(1), &units, &MixMask::constant(3, false), Some(Symbol::new("A")));
        assert_eq!(&all_b[..3], &t.row(1)[..3]);
        assert_eq!(all_b[3], Cell::from("A"));
    }

    #[test]
    fn cutmix_values_come_from_same_class_donors() {
        let t = table(&["A", "B", "A", "B", "A", "B", "A"]);
        let prior = class_prior(&t).unwrap();
        let mut rng = rng::seeded(1);
        for _ in 0..500 {
            let row = cutmix_once(&t, &prior, &mut rng).unwrap();
            let label = row[3];
            for f in 0..3 {
                assert!(t.rows().iter().any(|r| r[3] == label && r[f] == row[f]));
            }
        }
    }

    #[test]
    fn single_cluster_copies_a_donor() {
        let t = table(&["A", "A", "A", "A", "A"]);
        let prior = class_prior(&t).unwrap();
        let clusters = FeatureClusters::new(vec![vec![0, 1, 2]], 3, 1.0).unwrap();
        let mut rng = rng::seeded(5);
        for _ in 0..200 {
            let row = cutmixplus_once(&t, &prior, &clusters, &mut rng).unwrap();
            assert!(t.rows().iter().any(|r| r[..] == row[..]));
        }
    }

    #[test]
    fn ijf_degenerate_columns() {
        let s = Schema::new(vec![Feature::numerical("k"), Feature::categorical("c")], None).unwrap();
        let t = Table::new(s, vec![vec![4.5.into(), "only".into()]; 3]).unwrap();
        let mut rng = rng::seeded(2);
        for _ in 0..20 {
            assert_eq!(ijf_sample(&t, &mut rng).unwrap(), vec![Cell::Float(4.5), Cell::from("only")]);
        }
    }

    #[test]
    fn augment_sizes_and_determinism() {
        let t = table(&["A", "B", "A", "B", "A", "B", "A", "B", "A", "B"]);
        for mode in [AugmentMode::CutMix, AugmentMode::CutMixPlus, AugmentMode::Ijf] {
            let cfg = AugmentConfig {
                mode,
                ratio: 0.3,
                seed: 11,
                ..Default::default()
            };
            let out = augment(&t, &cfg).unwrap();
            assert_eq!(out.len(), 13);
            assert_eq!(&out.rows()[..10], t.rows());
            assert_eq!(out, augment(&t, &cfg).unwrap());
            let zero = AugmentConfig { ratio: 0.0, ..cfg };
            assert_eq!(augment(&t, &zero).unwrap(), t);
        }
        assert_eq!(augmented_count(24_000, 0.3), 7_200);
    }

    #[test]
    fn augment_rejects_bad_configs() {
        let t = table(&["A", "A", "B"]);
        let cfg = AugmentConfig::default();
        assert!(matches!(augment(&t, &cfg), Err(Error::ClassTooSmall(_))));
        let neg = AugmentConfig { ratio: -1.0, ..cfg };
        assert!(augment(&t, &neg).is_err());
        assert_eq!("CutMixPlus".parse::<AugmentMode>().unwrap(), AugmentMode::CutMixPlus);
        assert!("smote".parse::<AugmentMode>().is_err());
    }
}
