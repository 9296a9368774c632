use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use crate::ir::{Graph, IOExamples};

use super::{check_consistency, ParamAssignment};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Success(ParamAssignment),
    /// The whole program space was ruled out: no consistent program exists.
    Exhausted,
    Timeout,
    SolverError(String),
}

impl Status {
    pub fn name(&self) -> &'static str {
        match self {
            Status::Success(_) => "Success",
            Status::Exhausted => "Exhausted",
            Status::Timeout => "Timeout",
            Status::SolverError(_) => "SolverError",
        }
    }
}

/// Backend-specific counters. Fields a backend does not track stay `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RunStats {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub successes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidates: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver_digest: Option<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

/// Outcome of one synthesis call. A `Success` status is only ever stored
/// after the program has been re-checked against every example.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthesisResult {
    status: Status,
    pub wall_time: Duration,
    pub backend: String,
    pub stats: RunStats,
}

impl SynthesisResult {
    /// Wrap a backend verdict. A claimed success that fails the consistency
    /// check is downgraded to `SolverError` so backend bugs surface loudly.
    pub fn new(g: &Graph, io: &IOExamples, backend: &str, status: Status, wall_time: Duration, stats: RunStats) -> Self {
        let status = match status {
            Status::Success(p) if !check_consistency(g, &p, io) => {
                Status::SolverError(format!("{backend} returned a program that is inconsistent with the examples"))
            }
            s => s,
        };
        SynthesisResult { status, wall_time, backend: backend.to_string(), stats }
    }

    pub fn status(&self) -> &Status {
        &self.status
    }

    pub fn is_success(&self) -> bool {
        matches!(self.status, Status::Success(_))
    }

    pub fn program(&self) -> Option<&ParamAssignment> {
        match &self.status {
            Status::Success(p) => Some(p),
            _ => None,
        }
    }
}
