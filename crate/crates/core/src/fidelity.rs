//! Fidelity and privacy metrics for synthetic tables.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::association::{encode, pearson};
use crate::distance::{closest_distances, fit_normalizer_over, DistanceNormalizer, Encoded};
use crate::error::{Error, Result};
use crate::rng;
use crate::symbol::Symbol;
use crate::table::{Cell, Column, FeatureKind, Table};

pub const DEFAULT_TREND_BINS: usize = 10;
pub const OOD_SCALE: f64 = 100.0;
pub const ALPHA_LEVELS: usize = 20;
pub const C2ST_MIN_ROWS: usize = 20;
pub const SUPPORT_MIN_ROWS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub shape_score: f64,
    pub trend_score: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dcr_probability: Option<f64>,
    pub c2st_score: f64,
    pub alpha_precision: f64,
    pub beta_recall: f64,
}

/// `1 − KS` for two numerical samples.
pub fn ks_complement(real: &[f64], syn: &[f64]) -> Result<f64> {
    if real.is_empty() || syn.is_empty() {
        return Err(Error::EmptyColumn);
    }
    let mut a = real.to_vec();
    let mut b = syn.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut ks) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        ks = ks.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(1.0 - ks)
}

/// `1 − TVD` over the union of observed categories.
pub fn tv_complement(real: &[Symbol], syn: &[Symbol]) -> Result<f64> {
    if real.is_empty() || syn.is_empty() {
        return Err(Error::EmptyColumn);
    }
    let joint: Vec<Symbol> = real.iter().chain(syn).copied().collect();
    let (codes, levels) = encode(&joint);
    let mut counts = vec![(0u64, 0u64); levels];
    for (k, &c) in codes.iter().enumerate() {
        if k < real.len() {
            counts[c].0 += 1;
        } else {
            counts[c].1 += 1;
        }
    }
    Ok(1.0 - tvd(counts.into_iter(), real.len(), syn.len()))
}

fn tvd(counts: impl Iterator<Item = (u64, u64)>, nr: usize, ns: usize) -> f64 {
    let (nr, ns) = (nr as f64, ns as f64);
    let total: f64 = counts.map(|(r, s)| (r as f64 / nr - s as f64 / ns).abs()).sum();
    (0.5 * total).clamp(0.0, 1.0)
}

fn check_pair(real: &Table, syn: &Table) -> Result<()> {
    real.ensure_same_schema(syn)?;
    real.ensure_non_empty()?;
    syn.ensure_non_empty()
}

/// Mean per-column shape similarity over every column, target included.
pub fn shape_score(real: &Table, syn: &Table) -> Result<f64> {
    check_pair(real, syn)?;
    let width = real.schema().width();
    let scores = (0..width)
        .into_par_iter()
        .map(|c| match (real.column(c), syn.column(c)) {
            (Column::Numerical(r), Column::Numerical(s)) => ks_complement(&r, &s),
            (Column::Categorical(r), Column::Categorical(s)) => tv_complement(&r, &s),
            _ => unreachable!("schemas already matched"),
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / width as f64)
}

/// Equal-width bins fitted on the real column; values outside the range
/// land in the edge bins.
fn bin_codes(real: &[f64], syn: &[f64], bins: usize) -> (Vec<u64>, Vec<u64>) {
    let lo = real.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = real.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let code = |v: f64| -> u64 {
        if width <= 0.0 {
            return 0;
        }
        let b = ((v - lo) / width).floor();
        b.clamp(0.0, (bins - 1) as f64) as u64
    };
    (real.iter().map(|&v| code(v)).collect(), syn.iter().map(|&v| code(v)).collect())
}

fn discrete_codes(real: &Column, syn: &Column, bins: usize) -> (Vec<u64>, Vec<u64>) {
    match (real, syn) {
        (Column::Numerical(r), Column::Numerical(s)) => bin_codes(r, s, bins),
        (Column::Categorical(r), Column::Categorical(s)) => {
            let joint: Vec<Symbol> = r.iter().chain(s).copied().collect();
            let (codes, _) = encode(&joint);
            let codes: Vec<u64> = codes.into_iter().map(|c| c as u64).collect();
            (codes[..r.len()].to_vec(), codes[r.len()..].to_vec())
        }
        _ => unreachable!("schemas already matched"),
    }
}

/// `1 − TVD` between the joint frequency tables of two discretized pairs.
fn contingency_similarity(ra: &[u64], rb: &[u64], sa: &[u64], sb: &[u64]) -> f64 {
    let mut joint: BTreeMap<(u64, u64), (u64, u64)> = BTreeMap::new();
    for (&a, &b) in ra.iter().zip(rb) {
        joint.entry((a, b)).or_default().0 += 1;
    }
    for (&a, &b) in sa.iter().zip(sb) {
        joint.entry((a, b)).or_default().1 += 1;
    }
    1.0 - tvd(joint.into_values(), ra.len(), sa.len())
}

/// Similarity of one column pair.
pub fn pair_trend(real: &Table, syn: &Table, i: usize, j: usize, bins: usize) -> Result<f64> {
    let (ri, rj, si, sj) = (real.column(i), real.column(j), syn.column(i), syn.column(j));
    match (&ri, &rj, &si, &sj) {
        (Column::Numerical(a), Column::Numerical(b), Column::Numerical(c), Column::Numerical(d)) => {
            Ok(1.0 - (pearson(a, b)? - pearson(c, d)?).abs() / 2.0)
        }
        _ => {
            let (ra, sa) = discrete_codes(&ri, &si, bins);
            let (rb, sb) = discrete_codes(&rj, &sj, bins);
            Ok(contingency_similarity(&ra, &rb, &sa, &sb))
        }
    }
}

/// Mean pairwise relational similarity over every unordered column pair,
/// target included.
pub fn trend_score(real: &Table, syn: &Table, bins: usize) -> Result<f64> {
    check_pair(real, syn)?;
    if bins == 0 {
        return Err(Error::InvalidConfig("trend score needs at least one bin".into()));
    }
    let width = real.schema().width();
    if width < 2 {
        return Err(Error::InvalidConfig("trend score needs at least two columns".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..width).flat_map(|i| (i + 1..width).map(move |j| (i, j))).collect();
    let scores = pairs
        .par_iter()
        .map(|&(i, j)| pair_trend(real, syn, i, j, bins))
        .collect::<Result<Vec<f64>>>()?;
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Share of synthetic rows whose closest record is in `train` rather than
/// `holdout`; ties count half.
pub fn dcr_probability(syn: &Table, train: &Table, holdout: &Table) -> Result<f64> {
    syn.ensure_non_empty()?;
    let norm = fit_normalizer_over(&[syn], &[train, holdout])?;
    let s = Encoded::new(syn);
    let to_train = closest_distances(&s, &Encoded::new(train), &norm);
    let to_holdout = closest_distances(&s, &Encoded::new(holdout), &norm);
    // half-units keep the complementary call's result an exact complement
    let halves: u64 = to_train
        .iter()
        .zip(&to_holdout)
        .map(|(t, h)| match t.partial_cmp(h) {
            Some(std::cmp::Ordering::Less) => 2,
            Some(std::cmp::Ordering::Equal) => 1,
            _ => 0,
        })
        .sum();
    Ok(halves as f64 / (2 * syn.len()) as f64)
}

/// One-hot categoricals plus standardized numericals, fitted on a
/// reference set of rows.
struct FeatureEncoder {
    numeric: Vec<(usize, f64, f64)>,
    categorical: Vec<(usize, Vec<Symbol>)>,
    dim: usize,
}

impl FeatureEncoder {
    fn fit(rows: &[&[Cell]], kinds: &[FeatureKind]) -> Self {
        let n = rows.len() as f64;
        let mut numeric = Vec::new();
        let mut categorical = Vec::new();
        for (c, kind) in kinds.iter().enumerate() {
            match kind {
                FeatureKind::Numerical => {
                    let x: Vec<f64> = rows.iter().map(|r| r[c].as_f64().unwrap()).collect();
                    let mean = x.iter().sum::<f64>() / n;
                    let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                    numeric.push((c, mean, if sd > 0.0 { sd } else { 1.0 }));
                }
                FeatureKind::Categorical => {
                    let mut levels: Vec<Symbol> = Vec::new();
                    for r in rows {
                        let s = r[c].as_symbol().unwrap();
                        if !levels.contains(&s) {
                            levels.push(s);
                        }
                    }
                    categorical.push((c, levels));
                }
            }
        }
        let dim = numeric.len() + categorical.iter().map(|(_, l)| l.len()).sum::<usize>();
        FeatureEncoder {
            numeric,
            categorical,
            dim,
        }
    }

    fn encode(&self, row: &[Cell]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim);
        for &(c, mean, sd) in &self.numeric {
            out.push((row[c].as_f64().unwrap() - mean) / sd);
        }
        for (c, levels) in &self.categorical {
            let s = row[*c].as_symbol().unwrap();
            out.extend(levels.iter().map(|l| if *l == s { 1.0 } else { 0.0 }));
        }
        out
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Mean log-loss without the penalty term, for a logit `u` and label `y`.
fn log_loss(u: f64, y: f64) -> f64 {
    // log(1 + e^u) − y·u, computed without overflow
    let softplus = if u > 0.0 { u + (-u).exp().ln_1p() } else { u.exp().ln_1p() };
    softplus - y * u
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-3,
        }
    }
}

/// L2-regularized logistic regression fitted by full-batch gradient
/// descent from zero weights. The step is capped by the inverse of a
/// curvature bound so the penalized loss never increases.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub step: f64,
    /// Penalized training loss before each epoch and after the last one.
    pub losses: Vec<f64>,
}

impl Discriminator {
    pub fn fit(x: &[Vec<f64>], y: &[f64], config: &DiscriminatorConfig) -> Self {
        let n = x.len() as f64;
        let d = x.first().map_or(0, Vec::len);
        let trace: f64 = x.iter().map(|r| 1.0 + r.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / n;
        let step = config.learning_rate.min(1.0 / (trace / 4.0 + config.l2));
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut losses = Vec::with_capacity(config.epochs + 1);
        for epoch in 0..=config.epochs {
            let mut grad = vec![0.0; d];
            let mut grad_b = 0.0;
            let mut loss = 0.0;
            for (row, &label) in x.iter().zip(y) {
                let u = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
                loss += log_loss(u, label);
                let r = sigmoid(u) - label;
                grad_b += r;
                for (g, v) in grad.iter_mut().zip(row) {
                    *g += r * v;
                }
            }
            let penalty = 0.5 * config.l2 * w.iter().map(|v| v * v).sum::<f64>();
            losses.push(loss / n + penalty);
            if epoch == config.epochs {
                break;
            }
            for (wk, g) in w.iter_mut().zip(&grad) {
                *wk -= step * (g / n + config.l2 * *wk);
            }
            b -= step * grad_b / n;
        }
        Discriminator {
            weights: w,
            bias: b,
            step,
            losses,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.bias + row.iter().zip(&self.weights).map(|(a, c)| a * c).sum::<f64>())
    }
}

/// ROC-AUC via the Mann–Whitney statistic, with average ranks for ties.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InvalidConfig("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg * order[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let (p, q) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Stratified split: the first `round(0.8 × n)` shuffled rows of each
/// group train, the rest test.
fn stratified(n: usize, rng: &mut rng::Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let cut = (0.8 * n as f64).round() as usize;
    (idx[..cut].to_vec(), idx[cut..].to_vec())
}

/// Classifier two-sample test mapped to `[0, 1]`, where 1 means the
/// discriminator cannot tell the tables apart.
pub fn c2st_score(real: &Table, syn: &Table, seed: u64) -> Result<f64> {
    c2st_score_with(real, syn, seed, &DiscriminatorConfig::default())
}

pub fn c2st_score_with(real: &Table, syn: &Table, seed: u64, config: &DiscriminatorConfig) -> Result<f64> {
    real.ensure_same_schema(syn)?;
    for t in [real, syn] {
        if t.len() < C2ST_MIN_ROWS {
            return Err(Error::TooFewRows {
                needed: C2ST_MIN_ROWS,
                got: t.len(),
            });
        }
    }
    let mut rng = rng::seeded(seed);
    let (real_train, real_test) = stratified(real.len(), &mut rng);
    let (syn_train, syn_test) = stratified(syn.len(), &mut rng);

    let schema = real.schema();
    let kinds: Vec<FeatureKind> = (0..schema.width()).map(|c| schema.column_kind(c)).collect();
    let train_rows: Vec<&[Cell]> = real_train
        .iter()
        .map(|&i| real.row(i))
        .chain(syn_train.iter().map(|&i| syn.row(i)))
        .collect();
    let encoder = FeatureEncoder::fit(&train_rows, &kinds);
    let x: Vec<Vec<f64>> = train_rows.iter().map(|r| encoder.encode(r)).collect();
    let y: Vec<f64> = (0..x.len()).map(|k| if k < real_train.len() { 0.0 } else { 1.0 }).collect();
    let model = Discriminator::fit(&x, &y, config);

    let mut scores = Vec::with_capacity(real_test.len() + syn_test.len());
    let mut labels = Vec::with_capacity(scores.capacity());
    for &i in &real_test {
        scores.push(model.predict(&encoder.encode(real.row(i))));
        labels.push(false);
    }
    for &i in &syn_test {
        scores.push(model.predict(&encoder.encode(syn.row(i))));
        labels.push(true);
    }
    let auc = roc_auc(&scores, &labels)?;
    Ok((1.0 - 2.0 * (auc - 0.5)).clamp(0.0, 1.0))
}

/// Per-level support coverage and its summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportCurves {
    pub levels: Vec<f64>,
    /// `P_α`: share of synthetic rows inside the real `α`-ball.
    pub precision: Vec<f64>,
    /// `R_β`: share of real rows inside the synthetic `β`-ball.
    pub recall: Vec<f64>,
    pub alpha_precision: f64,
    pub beta_recall: f64,
}

fn medoid(t: &Encoded, norm: &DistanceNormalizer) -> usize {
    let sums: Vec<f64> = (0..t.len())
        .into_par_iter()
        .map(|i| (0..t.len()).map(|j| t.mixed(i, t, j, norm)).sum())
        .collect();
    let mut best = 0;
    for (i, &s) in sums.iter().enumerate() {
        if s < sums[best] {
            best = i;
        }
    }
    best
}

/// Coverage of `other` by balls around the medoid of `base`, one per level.
fn coverage(base: &Encoded, other: &Encoded, norm: &DistanceNormalizer, levels: &[f64]) -> Vec<f64> {
    let m = medoid(base, norm);
    let mut radii: Vec<f64> = (0..base.len()).map(|i| base.mixed(i, base, m, norm)).collect();
    radii.sort_by(f64::total_cmp);
    let reach: Vec<f64> = (0..other.len()).map(|i| other.mixed(i, base, m, norm)).collect();
    levels
        .iter()
        .map(|&a| {
            let k = ((a * base.len() as f64).ceil() as usize).clamp(1, base.len());
            let r = radii[k - 1];
            reach.iter().filter(|&&d| d <= r).count() as f64 / other.len() as f64
        })
        .collect()
}

fn calibration(curve: &[f64], levels: &[f64]) -> f64 {
    let gap: f64 = curve.iter().zip(levels).map(|(p, a)| (p - a).abs()).sum::<f64>() / levels.len() as f64;
    (1.0 - 2.0 * gap).clamp(0.0, 1.0)
}

/// Medoid-ball α-precision and β-recall over the levels `k / 20`. Each
/// summary is `1 − 2·mean|P_α − α|`, so a perfectly calibrated support
/// scores 1.
pub fn alpha_precision_beta_recall(real: &Table, syn: &Table) -> Result<SupportCurves> {
    real.ensure_same_schema(syn)?;
    for t in [real, syn] {
        if t.len() < SUPPORT_MIN_ROWS {
            return Err(Error::TooFewRows {
                needed: SUPPORT_MIN_ROWS,
                got: t.len(),
            });
        }
    }
    let norm = fit_normalizer_over(&[real, syn], &[real, syn])?;
    let (r, s) = (Encoded::new(real), Encoded::new(syn));
    let levels: Vec<f64> = (1..=ALPHA_LEVELS).map(|k| k as f64 / ALPHA_LEVELS as f64).collect();
    let precision = coverage(&r, &s, &norm, &levels);
    let recall = coverage(&s, &r, &norm, &levels);
    Ok(SupportCurves {
        alpha_precision: calibration(&precision, &levels),
        beta_recall: calibration(&recall, &levels),
        levels,
        precision,
        recall,
    })
}

/// Out-of-distribution copies of `train`: each row gets one non-target
/// feature perturbed, numericals scaled by 100 and categoricals redrawn
/// uniformly from the observed levels.
pub fn synthesize_ood<R: Rng + ?Sized>(train: &Table, rng: &mut R) -> Table {
    let schema = train.schema();
    let m = schema.feature_count();
    let levels: Vec<Option<Vec<Symbol>>> = (0..m)
        .map(|c| match schema.column_kind(c) {
            FeatureKind::Numerical => None,
            FeatureKind::Categorical => {
                let mut seen: Vec<Symbol> = Vec::new();
                for s in train.category_column(c) {
                    if !seen.contains(&s) {
                        seen.push(s);
                    }
                }
                Some(seen)
            }
        })
        .collect();
    let rows = train
        .rows()
        .iter()
        .map(|row| {
            let mut out = row.clone();
            let f = rng.random_range(0..m);
            out[f] = match (&row[f], &levels[f]) {
                (Cell::Float(v), _) => Cell::Float(v * OOD_SCALE),
                (Cell::Category(_), Some(l)) => Cell::Category(l[rng.random_range(0..l.len())]),
                _ => unreachable!("row conforms to schema"),
            };
            out
        })
        .collect();
    train.with_rows(rows).expect("perturbed rows keep their kinds")
}

/// Every metric; DCR only when a holdout table is given.
pub fn fidelity_report(real: &Table, syn: &Table, holdout: Option<&Table>, seed: u64) -> Result<FidelityReport> {
    let support = alpha_precision_beta_recall(real, syn)?;
    Ok(FidelityReport {
        shape_score: shape_score(real, syn)?,
        trend_score: trend_score(real, syn, DEFAULT_TREND_BINS)?,
        dcr_probability: holdout.map(|h| dcr_probability(syn, real, h)).transpose()?,
        c2st_score: c2st_score(real, syn, seed)?,
        alpha_precision: support.alpha_precision,
        beta_recall: support.beta_recall,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{Feature, Schema};

    fn syms(v: &[&str]) -> Vec<Symbol> {
        v.iter().map(|s| Symbol::new(s)).collect()
    }

    #[test]
    fn ks_examples() {
        assert_eq!(ks_complement(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(ks_complement(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert_eq!(ks_complement(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 5.0]).unwrap(), 0.75);
        assert!(matches!(ks_complement(&[], &[1.0]), Err(Error::EmptyColumn)));
    }

    #[test]
    fn tv_examples() {
        assert_eq!(tv_complement(&syms(&["a", "b"]), &syms(&["b", "a"])).unwrap(), 1.0);
        assert_eq!(tv_complement(&syms(&["a", "a"]), &syms(&["b", "c"])).unwrap(), 0.0);
        let s = syms(&["A", "A", "A", "B"]);
        assert_eq!(tv_complement(&syms(&["A", "B"]), &s).unwrap(), 0.75);
    }

    fn mixed_schema() -> Schema {
        Schema::new(
            vec![
                Feature::numerical("x"),
                Feature::numerical("y"),
                Feature::categorical("c"),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn trend_of_opposite_correlation() {
        let s = Schema::new(vec![Feature::numerical("a"), Feature::numerical("b")], None).unwrap();
        let up = Table::new(s.clone(), (0..5).map(|i| vec![(i as f64).into(), (i as f64).into()]).collect()).unwrap();
        let down = Table::new(s, (0..5).map(|i| vec![(i as f64).into(), (-i as f64).into()]).collect()).unwrap();
        assert_eq!(trend_score(&up, &down, 10).unwrap(), 0.0);
        assert_eq!(trend_score(&up, &up, 10).unwrap(), 1.0);
    }

    #[test]
    fn mixed_pair_uses_real_bins() {
        // real x spans [0, 10]; bins of width 1, the synthetic 100 clamps into the last bin
        let s = Schema::new(vec![Feature::numerical("x"), Feature::categorical("c")], None).unwrap();
        let real = Table::new(s.clone(), vec![vec![0.0.into(), "a".into()], vec![10.0.into(), "b".into()]]).unwrap();
        let syn = Table::new(s, vec![vec![0.5.into(), "a".into()], vec![100.0.into(), "b".into()]]).unwrap();
        assert_eq!(pair_trend(&real, &syn, 0, 1, 10).unwrap(), 1.0);
    }

    #[test]
    fn dcr_examples() {
        let s = mixed_schema();
        let row = |x: f64, y: f64, c: &str| vec![Cell::from(x), y.into(), c.into()];
        let train = Table::new(s.clone(), vec![row(0.0, 0.0, "a"), row(1.0, 1.0, "b")]).unwrap();
        let holdout = Table::new(s.clone(), vec![row(50.0, 50.0, "z"), row(60.0, 61.0, "z")]).unwrap();
        assert_eq!(dcr_probability(&train, &train, &holdout).unwrap(), 1.0);
        assert_eq!(dcr_probability(&train, &holdout, &train).unwrap(), 0.0);
        assert_eq!(dcr_probability(&train, &train, &train).unwrap(), 0.5);
    }

    #[test]
    fn auc_with_ties() {
        assert_eq!(roc_auc(&[0.1, 0.9], &[false, true]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5, 0.5], &[false, true]).unwrap(), 0.5);
        assert_eq!(roc_auc(&[0.9, 0.1], &[false, true]).unwrap(), 0.0);
        assert_eq!(roc_auc(&[0.2, 0.4, 0.4, 0.8], &[false, false, true, true]).unwrap(), 0.875);
    }

    fn gaussian_table(n: usize, shift: f64, seed: u64) -> Table {
        use rand_distr::StandardNormal;
        let mut rng = rng::seeded(seed);
        let rows = (0..n)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                let c = if rng.random_bool(0.5) { "p" } else { "q" };
                vec![Cell::from(x + shift), (y + shift).into(), c.into()]
            })
            .collect();
        Table::new(mixed_schema(), rows).unwrap()
    }

    #[test]
    fn discriminator_loss_is_monotone() {
        let real = gaussian_table(200, 0.0, 1);
        let syn = gaussian_table(200, 0.7, 2);
        let kinds = vec![FeatureKind::Numerical, FeatureKind::Numerical, FeatureKind::Categorical];
        let rows: Vec<&[Cell]> = real.rows().iter().chain(syn.rows()).map(|r| r.as_slice()).collect();
        let enc = FeatureEncoder::fit(&rows, &kinds);
        let x: Vec<Vec<f64>> = rows.iter().map(|r| enc.encode(r)).collect();
        let y: Vec<f64> = (0..400).map(|k| if k < 200 { 0.0 } else { 1.0 }).collect();
        let model = Discriminator::fit(&x, &y, &DiscriminatorConfig::default());
        assert_eq!(model.losses.len(), 501);
        assert!(model.losses.windows(2).all(|w| w[1] <= w[0]));
        assert!(model.losses[500] < model.losses[0]);
    }

    #[test]
    fn c2st_identical_and_separated() {
        let real = gaussian_table(300, 0.0, 3);
        assert!(c2st_score(&real, &real, 4).unwrap() > 0.9);
        let far = gaussian_table(300, 100.0, 5);
        assert!(c2st_score(&real, &far, 4).unwrap() <= 0.05);
        let small = gaussian_table(19, 0.0, 6);
        assert!(matches!(c2st_score(&small, &real, 0), Err(Error::TooFewRows { .. })));
    }

    #[test]
    fn support_of_self_and_collapse() {
        let real = gaussian_table(200, 0.0, 7);
        let own = alpha_precision_beta_recall(&real, &real).unwrap();
        assert!(own.alpha_precision >= 0.95 && own.beta_recall >= 0.95);
        assert_eq!(own.precision[ALPHA_LEVELS - 1], 1.0);

        let collapsed = real.with_rows(vec![real.row(0).to_vec(); 50]).unwrap();
        let c = alpha_precision_beta_recall(&real, &collapsed).unwrap();
        assert!(c.recall.iter().all(|&r| r <= 1.0 / 200.0 + 1e-12));
        assert_eq!(c.beta_recall, 0.0);
    }

    #[test]
    fn ood_examples() {
        let s = Schema::new(vec![Feature::numerical("x")], None).unwrap();
        let t = Table::new(s, vec![vec![2.0.into()]]).unwrap();
        let mut rng = rng::seeded(0);
        assert_eq!(synthesize_ood(&t, &mut rng).row(0), &[Cell::Float(200.0)]);

        let s = Schema::new(vec![Feature::categorical("a"), Feature::categorical("b")], None).unwrap();
        let rows: Vec<_> = (0..30)
            .map(|i| vec![Cell::from(["u", "v", "w"][i % 3]), Cell::from(["p", "q"][i % 2])])
            .collect();
        let t = Table::new(s, rows).unwrap();
        let out = synthesize_ood(&t, &mut rng);
        for (a, b) in t.rows().iter().zip(out.rows()) {
            assert!(a.iter().zip(b).filter(|(x, y)| x != y).count() <= 1);
            assert!(["u", "v", "w"].contains(&b[0].as_symbol().unwrap().as_str()));
            assert!(["p", "q"].contains(&b[1].as_symbol().unwrap().as_str()));
        }
    }

    #[test]
    fn report_fields_in_range() {
        let real = gaussian_table(100, 0.0, 8);
        let syn = gaussian_table(100, 0.3, 9);
        let r = fidelity_report(&real, &syn, Some(&real), 1).unwrap();
        for v in [r.shape_score, r.trend_score, r.c2st_score, r.alpha_precision, r.beta_recall, r.dcr_probability.unwrap()] {
            assert!((0.0..=1.0).contains(&v));
        }
        assert!(fidelity_report(&real, &syn, None, 1).unwrap().dcr_probability.is_none());
    }
}
