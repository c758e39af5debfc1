//! Closed-form denoising score of a finite latent set under
//! variance-exploding noise, and the backward SDE it drives.
//!
//! With training latents `z̃₁ … z̃_N` and noise level `σ`, the optimal score
//! is the gradient of `log Σₙ exp(−‖z̃ₙ − z‖² / 2σ²)`:
//!
//! ```text
//! s(z, σ) = Σₙ wₙ (z̃ₙ − z) / σ²,   w = softmax(−‖z̃ₙ − z‖² / 2σ²)
//! ```
//!
//! Integrating the reverse-time SDE with this score collapses every
//! trajectory onto one of the latents.

use rand::Rng;
use rand_distr::{StandardNormal, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentSet {
    dim: usize,
    points: Vec<f64>,
}

impl LatentSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| Error::InvalidConfig("no latents".into()))?;
        if dim == 0 {
            return Err(Error::InvalidConfig("latents need at least one dimension".into()));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::LengthMismatch(dim, p.len()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidConfig("latent coordinates must be finite".into()));
            }
            flat.extend_from_slice(p);
        }
        Ok(LatentSet { dim, points: flat })
    }

    /// `n` points with coordinates uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(n: usize, dim: usize, rng: &mut R) -> Result<Self> {
        let u = Uniform::new_inclusive(-1.0, 1.0).expect("valid range");
        LatentSet::new((0..n).map(|_| (0..dim).map(|_| rng.sample(u)).collect()).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.points[n * self.dim..(n + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let mut best: f64 = 0.0;
        for (i, a) in self.iter().enumerate() {
            for b in self.iter().skip(i + 1) {
                best = best.max(dist2(a, b).sqrt());
            }
        }
        best
    }

    /// Index and distance of the latent closest to `z`, lowest index on ties.
    pub fn nearest(&self, z: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (n, p) in self.iter().enumerate() {
            let d = dist2(p, z);
            if d < best.1 {
                best = (n, d);
            }
        }
        (best.0, best.1.sqrt())
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() == self.dim {
            Ok(())
        } else {
            Err(Error::LengthMismatch(self.dim, z.len()))
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Noise level as a function of time on `[0, horizon]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SigmaSchedule {
    /// `σ(t) = t`.
    Linear { horizon: f64 },
    /// `σ(t) = scale · t^power`.
    Power { horizon: f64, scale: f64, power: f64 },
}

impl Default for SigmaSchedule {
    fn default() -> Self {
        SigmaSchedule::Linear { horizon: 1.0 }
    }
}

impl SigmaSchedule {
    pub fn horizon(&self) -> f64 {
        match *self {
            SigmaSchedule::Linear { horizon } | SigmaSchedule::Power { horizon, .. } => horizon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            SigmaSchedule::Linear { horizon } => horizon.is_finite() && horizon > 0.0,
            SigmaSchedule::Power { horizon, scale, power } => {
                horizon.is_finite() && horizon > 0.0 && scale.is_finite() && scale > 0.0 && power.is_finite() && power > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid noise schedule {self:?}")))
        }
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let horizon = self.horizon();
        if (0.0..=horizon).contains(&t) {
            Ok(())
        } else {
            Err(Error::BadTime { t, horizon })
        }
    }

    pub fn sigma(&self, t: f64) -> f64 {
        match *self {
            SigmaSchedule::Linear { .. } => t,
            SigmaSchedule::Power { scale, power, .. } => scale * t.powf(power),
        }
    }
}

/// `z0 + σ(t)·ε`.
pub fn forward_noise<R: Rng + ?Sized>(z0: &[f64], t: f64, schedule: &SigmaSchedule, rng: &mut R) -> Result<Vec<f64>> {
    schedule.check_time(t)?;
    let s = schedule.sigma(t);
    Ok(z0
        .iter()
        .map(|&v| {
            let e: f64 = rng.sample(StandardNormal);
            v + s * e
        })
        .collect())
}

/// Posterior weights of every latent given `z`, via log-sum-exp.
pub fn softmax_weights(z: &[f64], sigma: f64, latents: &LatentSet) -> Result<Vec<f64>> {
    latents.check_dim(z)?;
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    let logits: Vec<f64> = latents.iter().map(|p| -dist2(p, z) / (2.0 * sigma * sigma)).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Ok(w)
}

/// `log Σₙ exp(−‖z̃ₙ − z‖² / 2σ²)`, the unnormalized log mixture density.
pub fn log_density(z: &[f64], sigma: f64, latents: &LatentSet) -> Result<f64> {
    latents.check_dim(z)?;
    if sigma == 0.0 {
        return Err(Error::ZeroSigma);
    }
    let logits: Vec<f64> = latents.iter().map(|p| -dist2(p, z) / (2.0 * sigma * sigma)).collect();
    let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(top + logits.iter().map(|l| (l - top).exp()).sum::<f64>().ln())
}

/// Optimal score at noise level `sigma`.
pub fn optimal_score_sigma(z: &[f64], sigma: f64, latents: &LatentSet) -> Result<Vec<f64>> {
    let w = softmax_weights(z, sigma, latents)?;
    let mut out = vec![0.0; z.len()];
    for (wn, p) in w.iter().zip(latents.iter()) {
        if *wn == 0.0 {
            continue;
        }
        for ((o, &pk), &zk) in out.iter_mut().zip(p).zip(z) {
            *o += wn * (pk - zk);
        }
    }
    let s2 = sigma * sigma;
    out.iter_mut().for_each(|v| *v /= s2);
    Ok(out)
}

/// Optimal score at time `t`.
pub fn optimal_score(z: &[f64], t: f64, latents: &LatentSet, schedule: &SigmaSchedule) -> Result<Vec<f64>> {
    schedule.check_time(t)?;
    optimal_score_sigma(z, schedule.sigma(t), latents)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalStep {
    /// The last step snaps to the nearest latent, the `σ → 0` limit of
    /// the update.
    #[default]
    NearestLatent,
    /// The last step is the ordinary Euler update with the score at `t₁`.
    Euler,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub steps: usize,
    pub seed: u64,
    pub trajectories: usize,
    #[serde(default)]
    pub final_step: FinalStep,
}

impl Default for SdeConfig {
    fn default() -> Self {
        SdeConfig {
            steps: 1000,
            seed: 0,
            trajectories: 1,
            final_step: FinalStep::NearestLatent,
        }
    }
}

impl SdeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// `t_n, t_{n-1}, …, t_0`.
    pub times: Vec<f64>,
    /// State at every time in `times`.
    pub states: Vec<Vec<f64>>,
}

/// One reverse-time Euler–Maruyama solve from `z_T = σ(T)·ε` down to
/// `t = 0`. Between grid points `t_{k-1} < t_k` the update is
///
/// ```text
/// z ← z + 2σ(t_k)(σ(t_k) − σ(t_{k-1}))·s(z, t_k)
///       + √(2σ(t_k)(σ(t_k) − σ(t_{k-1}))(t_k − t_{k-1}))·ε
/// ```
pub fn backward_sample<R: Rng + ?Sized>(
    latents: &LatentSet,
    schedule: &SigmaSchedule,
    config: &SdeConfig,
    rng: &mut R,
    record: bool,
) -> Result<(Vec<f64>, Option<Trajectory>)> {
    schedule.validate()?;
    config.validate()?;
    let n = config.steps;
    let horizon = schedule.horizon();
    let time = |k: usize| horizon * k as f64 / n as f64;
    let top = schedule.sigma(horizon);
    let mut z: Vec<f64> = (0..latents.dim())
        .map(|_| {
            let e: f64 = rng.sample(StandardNormal);
            top * e
        })
        .collect();
    let mut trajectory = record.then(|| Trajectory {
        times: vec![horizon],
        states: vec![z.clone()],
    });
    for k in (1..=n).rev() {
        let (t_hi, t_lo) = (time(k), time(k - 1));
        if k == 1 && config.final_step == FinalStep::NearestLatent {
            z = latents.point(latents.nearest(&z).0).to_vec();
        } else {
            let s_hi = schedule.sigma(t_hi);
            let drift = 2.0 * s_hi * (s_hi - schedule.sigma(t_lo));
            let diffusion = (drift * (t_hi - t_lo)).sqrt();
            let score = optimal_score_sigma(&z, s_hi, latents)?;
            for (zk, sk) in z.iter_mut().zip(&score) {
                let e: f64 = rng.sample(StandardNormal);
                *zk += drift * sk + diffusion * e;
            }
        }
        if let Some(tr) = trajectory.as_mut() {
            tr.times.push(t_lo);
            tr.states.push(z.clone());
        }
    }
    Ok((z, trajectory))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationReport {
    pub replication_fraction: f64,
    pub mean_final_nn_distance: f64,
    pub diameter: f64,
    pub tolerance: f64,
}

/// Relative tolerance (against the latent diameter) for a final sample to
/// count as a replica.
pub const REPLICATION_TOLERANCE: f64 = 1e-2;

/// Final states of `config.trajectories` independent solves; trajectory `i`
/// draws from stream `i + 1` of `config.seed`.
pub fn sample_many(
    latents: &LatentSet,
    schedule: &SigmaSchedule,
    config: &SdeConfig,
    record: bool,
) -> Result<Vec<(Vec<f64>, Option<Trajectory>)>> {
    (0..config.trajectories)
        .into_par_iter()
        .map(|i| backward_sample(latents, schedule, config, &mut rng::stream(config.seed, i as u64 + 1), record))
        .collect()
}

/// Share of final samples within `REPLICATION_TOLERANCE × diameter` of some
/// latent.
pub fn replication(latents: &LatentSet, finals: &[Vec<f64>]) -> Result<ReplicationReport> {
    if finals.is_empty() {
        return Err(Error::InvalidConfig("no trajectories".into()));
    }
    let diameter = latents.diameter();
    let tolerance = REPLICATION_TOLERANCE * diameter;
    let distances: Vec<f64> = finals.iter().map(|z| latents.nearest(z).1).collect();
    let hits = distances.iter().filter(|&&d| d <= tolerance).count();
    Ok(ReplicationReport {
        replication_fraction: hits as f64 / finals.len() as f64,
        mean_final_nn_distance: distances.iter().sum::<f64>() / distances.len() as f64,
        diameter,
        tolerance,
    })
}

/// Latents from stream 0 of the seed, then a replication run.
pub fn simulate(
    n_latents: usize,
    dim: usize,
    schedule: &SigmaSchedule,
    config: &SdeConfig,
    record: bool,
) -> Result<(LatentSet, ReplicationReport, Vec<Trajectory>)> {
    let latents = LatentSet::random(n_latents, dim, &mut rng::stream(config.seed, 0))?;
    let runs = sample_many(&latents, schedule, config, record)?;
    let finals: Vec<Vec<f64>> = runs.iter().map(|(z, _)| z.clone()).collect();
    let report = replication(&latents, &finals)?;
    let trajectories = runs.into_iter().filter_map(|(_, t)| t).collect();
    Ok((latents, report, trajectories))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TimeSampling {
    Fixed { t: f64 },
    /// `t ~ U(t_min, T)`.
    Uniform { t_min: f64 },
}

/// One draw of the denoising objective.
pub struct DsmDraw<'a> {
    pub z: &'a [f64],
    pub t: f64,
    pub sigma: f64,
    pub source: usize,
    pub noise: &'a [f64],
}

/// Monte-Carlo estimate of `E‖s(z_t, t) − (−ε/σ(t))‖²`, with `z₀` uniform
/// over the latents and `z_t = z₀ + σ(t)ε`.
pub fn dsm_loss<F, R>(
    latents: &LatentSet,
    mut score_fn: F,
    schedule: &SigmaSchedule,
    times: TimeSampling,
    samples: usize,
    rng: &mut R,
) -> Result<f64>
where
    F: FnMut(&DsmDraw) -> Vec<f64>,
    R: Rng + ?Sized,
{
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be at least 1".into()));
    }
    schedule.validate()?;
    let horizon = schedule.horizon();
    let mut total = 0.0;
    for _ in 0..samples {
        let t = match times {
            TimeSampling::Fixed { t } => t,
            TimeSampling::Uniform { t_min } => rng.random_range(t_min..=horizon),
        };
        schedule.check_time(t)?;
        let sigma = schedule.sigma(t);
        if sigma == 0.0 {
            return Err(Error::ZeroSigma);
        }
        let source = rng.random_range(0..latents.len());
        let noise: Vec<f64> = (0..latents.dim()).map(|_| rng.sample(StandardNormal)).collect();
        let z: Vec<f64> = latents.point(source).iter().zip(&noise).map(|(p, e)| p + sigma * e).collect();
        let s = score_fn(&DsmDraw {
            z: &z,
            t,
            sigma,
            source,
            noise: &noise,
        });
        if s.len() != z.len() {
            return Err(Error::LengthMismatch(z.len(), s.len()));
        }
        total += s.iter().zip(&noise).map(|(sk, ek)| (sk + ek / sigma).powi(2)).sum::<f64>();
    }
    Ok(total / samples as f64)
}
