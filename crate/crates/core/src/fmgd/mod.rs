//! Forward marginals, gradient descent: every discrete cell becomes a
//! probability vector, the interpreter is run on those vectors, and the Param
//! logits are fitted by gradient descent on the negative log-likelihood of
//! the observed outputs.

mod diff;
mod relax;
mod search;
mod train;

pub use diff::{backward, backward_with_entropy, forward, loss_parts, LossParts, Logits, MarginalState};
pub use relax::{relax, DiffProgram, Slot};
pub use search::{random_search, random_search_until, DistributionError, HyperDistribution, LogUniform, SearchResult};
pub use train::{
    train, train_until, FmgdRunResult, HyperError, HyperParams, Optimizer, RestartResult, CONVERGED_LOSS,
};

use std::time::Instant;

use crate::executor::{RunStats, Status, SynthesisResult};
use crate::ir::{IOExamples, InstanceGraph};

/// Relax `ig`, train and report the program of the first successful
/// restart. Gradient descent cannot prove that no program exists, so a run
/// without a successful restart is reported as `Timeout`.
pub fn synthesize(ig: &InstanceGraph, h: &HyperParams, deadline: Option<Instant>) -> SynthesisResult {
    let start = Instant::now();
    let dp = relax(ig);
    let run = train_until(&dp, h, deadline);
    result_from_run(ig, &run, start)
}

/// Wrap a finished training run as a synthesis result.
pub fn result_from_run(ig: &InstanceGraph, run: &FmgdRunResult, start: Instant) -> SynthesisResult {
    let status = match &run.best {
        Some(p) => Status::Success(p.clone()),
        None => Status::Timeout,
    };
    let mut stats = RunStats {
        restarts: Some(run.restarts.len()),
        successes: Some(run.successes()),
        success_fraction: Some(run.success_fraction),
        ..RunStats::default()
    };
    let loss = run.mean_final_loss();
    if loss.is_finite() {
        stats.extra.insert("mean_final_loss".into(), serde_json::json!(loss));
    }
    let io = IOExamples::new(ig.examples.clone());
    SynthesisResult::new(&ig.graph, &io, "fmgd", status, start.elapsed(), stats)
}
