use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::relax::DiffProgram;
use super::train::{rng_for, train_stream, FmgdRunResult, HyperParams, Optimizer};

const DEFAULT_DISTRIBUTION: &str = include_str!("../../config/hyper_distribution.json");

/// Stream family reserved for drawing hyperparameter sets; training streams
/// use the set index.
const SAMPLER_STREAM: u64 = u32::MAX as u64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogUniform {
    pub log_uniform: [f64; 2],
}

/// Where hyperparameter sets are drawn from. Discrete choices are drawn
/// uniformly; a `null` clip norm means no clipping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperDistribution {
    pub learning_rate: LogUniform,
    pub optimizer: Vec<Optimizer>,
    pub clip_norm: Vec<Option<f64>>,
    pub noise_eta: Vec<f64>,
    pub noise_decay: f64,
    pub entropy_weight: Vec<f64>,
    pub entropy_half_life: Vec<f64>,
    pub init_scale: Vec<f64>,
    pub epochs: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum DistributionError {
    #[error("malformed hyperparameter distribution: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("hyperparameter distribution field `{0}` has no choices")]
    Empty(&'static str),
    #[error("learning-rate range must satisfy 0 < low <= high")]
    Range,
}

impl HyperDistribution {
    pub fn from_json(text: &str) -> Result<Self, DistributionError> {
        let d: HyperDistribution = serde_json::from_str(text)?;
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<(), DistributionError> {
        let [lo, hi] = self.learning_rate.log_uniform;
        if !(lo > 0.0 && lo <= hi) {
            return Err(DistributionError::Range);
        }
        for (name, empty) in [
            ("optimizer", self.optimizer.is_empty()),
            ("clip_norm", self.clip_norm.is_empty()),
            ("noise_eta", self.noise_eta.is_empty()),
            ("entropy_weight", self.entropy_weight.is_empty()),
            ("entropy_half_life", self.entropy_half_life.is_empty()),
            ("init_scale", self.init_scale.is_empty()),
        ] {
            if empty {
                return Err(DistributionError::Empty(name));
            }
        }
        Ok(())
    }

    /// Draw one set; `restarts` and `seed` are filled in by the caller.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> HyperParams {
        let [lo, hi] = self.learning_rate.log_uniform;
        let learning_rate = if lo == hi { lo } else { (rng.gen_range(lo.ln()..hi.ln())).exp() };
        HyperParams {
            learning_rate,
            optimizer: *self.optimizer.choose(rng).expect("validated"),
            clip_norm: *self.clip_norm.choose(rng).expect("validated"),
            noise_eta: *self.noise_eta.choose(rng).expect("validated"),
            noise_decay: self.noise_decay,
            entropy_weight: *self.entropy_weight.choose(rng).expect("validated"),
            entropy_half_life: *self.entropy_half_life.choose(rng).expect("validated"),
            init_scale: *self.init_scale.choose(rng).expect("validated"),
            epochs: self.epochs,
            ..HyperParams::default()
        }
    }
}

impl Default for HyperDistribution {
    fn default() -> Self {
        HyperDistribution::from_json(DEFAULT_DISTRIBUTION).expect("bundled distribution is valid")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    /// Every drawn set with its training result, in draw order.
    pub sets: Vec<(HyperParams, FmgdRunResult)>,
    /// Index into `sets` of the best set: highest success fraction, ties
    /// broken by lower mean final loss, then by draw order.
    pub best: usize,
    /// Mean success fraction over all runs of the search.
    pub average_success: f64,
    pub wall_time: Duration,
}

impl SearchResult {
    pub fn best_hypers(&self) -> &HyperParams {
        &self.sets[self.best].0
    }

    pub fn best_success(&self) -> f64 {
        self.sets[self.best].1.success_fraction
    }
}

/// Draw `sets` hyperparameter sets and train each with `restarts` restarts.
pub fn random_search(dp: &DiffProgram, dist: &HyperDistribution, sets: usize, restarts: usize, seed: u64) -> SearchResult {
    random_search_until(dp, dist, sets, restarts, seed, None)
}

pub fn random_search_until(
    dp: &DiffProgram,
    dist: &HyperDistribution,
    sets: usize,
    restarts: usize,
    seed: u64,
    deadline: Option<Instant>,
) -> SearchResult {
    let start = Instant::now();
    let sets = sets.max(1);
    let mut sampler = rng_for(seed, SAMPLER_STREAM, 0);
    let drawn: Vec<HyperParams> = (0..sets)
        .map(|_| HyperParams { restarts: restarts.max(1), seed, ..dist.sample(&mut sampler) })
        .collect();
    let results: Vec<(HyperParams, FmgdRunResult)> = drawn
        .into_par_iter()
        .enumerate()
        .map(|(k, h)| {
            let r = train_stream(dp, &h, k as u64, deadline);
            (h, r)
        })
        .collect();
    let mut best = 0;
    for (k, (_, r)) in results.iter().enumerate() {
        let b = &results[best].1;
        if r.success_fraction > b.success_fraction
            || (r.success_fraction == b.success_fraction && r.mean_final_loss() < b.mean_final_loss())
        {
            best = k;
        }
    }
    let total_runs: usize = results.iter().map(|(_, r)| r.restarts.len()).sum();
    let total_success: usize = results.iter().map(|(_, r)| r.successes()).sum();
    SearchResult {
        sets: results,
        best,
        average_success: total_success as f64 / total_runs.max(1) as f64,
        wall_time: start.elapsed(),
    }
}
