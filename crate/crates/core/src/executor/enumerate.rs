use std::time::{Duration, Instant};

use crate::ir::{IOExamples, InstanceGraph};

use super::result::{RunStats, Status, SynthesisResult};
use super::{example_holds, ParamAssignment, UNSET};

/// Limits for exhaustive search. `None` means unlimited.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumBudget {
    pub max_candidates: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl EnumBudget {
    pub fn unlimited() -> Self {
        Self::default()
    }

    pub fn time(limit: Duration) -> Self {
        EnumBudget { max_candidates: None, time_limit: Some(limit) }
    }
}

/// Try every Param assignment in lexicographic order (the lowest Param cell
/// is the most significant digit) and return the first one consistent with
/// all examples. A candidate is dropped at its first failing example.
///
/// Running out of candidates or time before the space is exhausted gives
/// `Timeout`; sweeping the whole space without a hit gives `Exhausted`.
pub fn enumerate(ig: &InstanceGraph, budget: EnumBudget) -> SynthesisResult {
    let start = Instant::now();
    let g = &*ig.graph;
    let params = ig.params();
    let domains: Vec<u32> = params.iter().map(|&v| g.vars[v].domain).collect();
    let mut digits = vec![0u32; params.len()];
    let mut vals = vec![UNSET; g.vars.len()];
    let mut tested: u64 = 0;

    let finish = |status: Status, tested: u64| {
        let stats = RunStats { candidates: Some(tested), ..RunStats::default() };
        let io = IOExamples::new(ig.examples.clone());
        SynthesisResult::new(g, &io, "enum", status, start.elapsed(), stats)
    };

    loop {
        if budget.max_candidates.is_some_and(|m| tested >= m) {
            return finish(Status::Timeout, tested);
        }
        if tested.is_multiple_of(1024) && budget.time_limit.is_some_and(|t| start.elapsed() >= t) {
            return finish(Status::Timeout, tested);
        }
        tested += 1;
        let ok = ig.examples.iter().all(|ex| {
            vals.fill(UNSET);
            for (&v, &x) in params.iter().zip(&digits) {
                vals[v] = x;
            }
            example_holds(g, ex, &mut vals)
        });
        if ok {
            let p = ParamAssignment::from_dense(g, &digits).expect("enumerated digits are in range");
            return finish(Status::Success(p), tested);
        }
        // Odometer step: the last Param cell varies fastest.
        let mut k = digits.len();
        loop {
            if k == 0 {
                return finish(Status::Exhausted, tested);
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < domains[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}
