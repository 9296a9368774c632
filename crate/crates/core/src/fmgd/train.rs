use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::executor::{check_consistency, ParamAssignment};

use super::diff::{loss_and_grad, Logits, Workspace};
use super::relax::DiffProgram;

/// Training stops early once the data loss falls below this value.
pub const CONVERGED_LOSS: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    /// Plain gradient descent.
    Plain,
    /// Per-coordinate RMS-normalized steps (decay 0.9, epsilon 1e-8).
    #[default]
    Rmsprop,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub learning_rate: f64,
    pub optimizer: Optimizer,
    /// Standard deviation of the normal logit initialization.
    pub init_scale: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Gradient noise std at epoch `t` is `noise_eta / (1 + t)^noise_decay`.
    pub noise_eta: f64,
    pub noise_decay: f64,
    /// Entropy bonus weight at epoch `t` is
    /// `entropy_weight · 2^(-t / entropy_half_life)`.
    pub entropy_weight: f64,
    pub entropy_half_life: f64,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            learning_rate: 0.1,
            optimizer: Optimizer::Rmsprop,
            init_scale: 1.0,
            clip_norm: Some(5.0),
            noise_eta: 0.1,
            noise_decay: 0.55,
            entropy_weight: 0.01,
            entropy_half_life: 200.0,
            epochs: 1000,
            restarts: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HyperError {
    #[error("learning rate must be positive, got {0}")]
    LearningRate(f64),
    #[error("epochs must be at least 1")]
    Epochs,
    #[error("restarts must be at least 1")]
    Restarts,
    #[error("{0} must be finite and non-negative")]
    Negative(&'static str),
}

impl HyperParams {
    /// Plain gradient descent with no clipping, noise or entropy bonus.
    pub fn vanilla(learning_rate: f64) -> Self {
        HyperParams {
            learning_rate,
            optimizer: Optimizer::Plain,
            clip_norm: None,
            noise_eta: 0.0,
            entropy_weight: 0.0,
            ..HyperParams::default()
        }
    }

    pub fn validate(&self) -> Result<(), HyperError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(HyperError::LearningRate(self.learning_rate));
        }
        if self.epochs == 0 {
            return Err(HyperError::Epochs);
        }
        if self.restarts == 0 {
            return Err(HyperError::Restarts);
        }
        for (name, x) in [
            ("init_scale", self.init_scale),
            ("noise_eta", self.noise_eta),
            ("noise_decay", self.noise_decay),
            ("entropy_weight", self.entropy_weight),
            ("entropy_half_life", self.entropy_half_life),
            ("clip_norm", self.clip_norm.unwrap_or(0.0)),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(HyperError::Negative(name));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RestartResult {
    pub restart: usize,
    /// Data loss of the final logits (`+∞` if the restart was aborted).
    pub final_loss: f64,
    pub success: bool,
    pub epochs: usize,
    /// Loss was not finite at initialization.
    pub aborted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FmgdRunResult {
    pub restarts: Vec<RestartResult>,
    pub success_fraction: f64,
    pub wall_time: Duration,
    /// Discretized program of the lowest-numbered successful restart.
    pub best: Option<ParamAssignment>,
}

impl FmgdRunResult {
    pub fn successes(&self) -> usize {
        self.restarts.iter().filter(|r| r.success).count()
    }

    /// Mean final data loss over restarts with a finite loss.
    pub fn mean_final_loss(&self) -> f64 {
        let finite: Vec<f64> = self.restarts.iter().map(|r| r.final_loss).filter(|l| l.is_finite()).collect();
        if finite.is_empty() {
            f64::INFINITY
        } else {
            finite.iter().sum::<f64>() / finite.len() as f64
        }
    }
}

/// Train `h.restarts` independent restarts in parallel.
pub fn train(dp: &DiffProgram, h: &HyperParams) -> FmgdRunResult {
    train_stream(dp, h, 0, None)
}

/// Like [`train`], but restarts stop at `deadline`.
pub fn train_until(dp: &DiffProgram, h: &HyperParams, deadline: Option<Instant>) -> FmgdRunResult {
    train_stream(dp, h, 0, deadline)
}

/// `set` selects an independent family of random streams, so hyper-search
/// sets never share initializations by accident. Set 0 is what [`train`]
/// uses, which makes a one-set search identical to a plain training run.
pub(crate) fn train_stream(dp: &DiffProgram, h: &HyperParams, set: u64, deadline: Option<Instant>) -> FmgdRunResult {
    let start = Instant::now();
    let runs: Vec<(RestartResult, Option<ParamAssignment>)> =
        (0..h.restarts).into_par_iter().map(|r| run_restart(dp, h, set, r, deadline)).collect();
    let best = runs.iter().find(|(r, _)| r.success).and_then(|(_, p)| p.clone());
    let restarts: Vec<RestartResult> = runs.into_iter().map(|(r, _)| r).collect();
    let success_fraction = restarts.iter().filter(|r| r.success).count() as f64 / h.restarts.max(1) as f64;
    FmgdRunResult { restarts, success_fraction, wall_time: start.elapsed(), best }
}

pub(crate) fn rng_for(seed: u64, set: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((set << 32) | restart as u64);
    rng
}

fn run_restart(
    dp: &DiffProgram,
    h: &HyperParams,
    set: u64,
    restart: usize,
    deadline: Option<Instant>,
) -> (RestartResult, Option<ParamAssignment>) {
    let mut rng = rng_for(h.seed, set, restart);
    let n = dp.num_logits();
    let mut theta = vec![0.0; n];
    if h.init_scale > 0.0 {
        let init = Normal::new(0.0, h.init_scale).expect("validated init scale");
        for x in theta.iter_mut() {
            *x = init.sample(&mut rng);
        }
    }
    let mut ws = Workspace::new(dp);
    let mut grad = vec![0.0; n];
    let mut acc = vec![0.0; n];
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");

    let mut epochs = 0;
    let mut data_loss = f64::INFINITY;
    for t in 0..h.epochs {
        if deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let lambda = if h.entropy_weight > 0.0 {
            h.entropy_weight * (-(t as f64) / h.entropy_half_life.max(f64::MIN_POSITIVE)).exp2()
        } else {
            0.0
        };
        let loss = loss_and_grad(dp, &theta, lambda, &mut ws, &mut grad);
        data_loss = loss.data;
        if !loss.total.is_finite() {
            if t == 0 {
                let r = RestartResult { restart, final_loss: f64::INFINITY, success: false, epochs: 0, aborted: true };
                return (r, None);
            }
            break;
        }
        if loss.data < CONVERGED_LOSS {
            break;
        }
        epochs = t + 1;
        if h.noise_eta > 0.0 {
            let std = h.noise_eta / (1.0 + t as f64).powf(h.noise_decay);
            for g in grad.iter_mut() {
                *g += std * std_normal.sample(&mut rng);
            }
        }
        if let Some(c) = h.clip_norm {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > c && norm > 0.0 {
                let s = c / norm;
                grad.iter_mut().for_each(|g| *g *= s);
            }
        }
        match h.optimizer {
            Optimizer::Plain => {
                for (x, g) in theta.iter_mut().zip(&grad) {
                    *x -= h.learning_rate * g;
                }
            }
            Optimizer::Rmsprop => {
                for ((x, g), a) in theta.iter_mut().zip(&grad).zip(acc.iter_mut()) {
                    *a = 0.9 * *a + 0.1 * g * g;
                    *x -= h.learning_rate * g / (a.sqrt() + 1e-8);
                }
            }
        }
    }
    if epochs == h.epochs {
        data_loss = super::diff::forward_into(dp, &theta, 0.0, &mut ws).data;
    }
    let program = Logits(theta).discretize(dp);
    let success = check_consistency(&dp.graph, &program, &dp.io);
    let r = RestartResult { restart, final_loss: data_loss, success, epochs, aborted: false };
    (r, success.then_some(program))
}
