//! SMT-LIB2 encoding over quantifier-free linear integer arithmetic, and a
//! driver for any external solver that reads a script file.

mod emit;
mod parse;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use crate::executor::{check_consistency, ParamAssignment, RunStats, Status, SynthesisResult};
use crate::ir::{Graph, IOExamples, InstanceGraph, VarId};
use crate::solver::{run_solver, SolverConfig};

pub use emit::{emit_smtlib, TABLE_ITE_LIMIT};
pub use parse::{parse_solver_output, SolverAnswer};

/// An emitted script plus what is needed to decode and verify a model.
#[derive(Clone, Debug)]
pub struct SmtScript {
    pub text: String,
    pub logic: &'static str,
    /// Solver symbol of every Param cell.
    pub symbols: BTreeMap<VarId, String>,
    graph: Arc<Graph>,
    io: IOExamples,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SmtOutcome {
    Sat(ParamAssignment),
    Unsat,
    Unknown(String),
    SolverError(String),
}

/// Result of one solver call with the digest of everything it printed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmtRun {
    pub outcome: SmtOutcome,
    pub digest: Option<String>,
}

/// Run the solver on `script`. A `sat` answer is decoded and re-checked
/// against the examples; a model that fails the check is a `SolverError`.
pub fn solve(script: &SmtScript, cfg: &SolverConfig) -> SmtRun {
    let file = match tempfile::Builder::new().prefix("synthkit-").suffix(".smt2").tempfile() {
        Ok(f) => f,
        Err(e) => return error_run(format!("cannot create script file: {e}"), None),
    };
    if let Err(e) = file.as_file().write_all(script.text.as_bytes()).and_then(|_| file.as_file().flush()) {
        return error_run(format!("cannot write script file: {e}"), None);
    }
    let out = match run_solver(cfg, file.path(), None) {
        Ok(o) => o,
        Err(e) => return error_run(e.to_string(), None),
    };
    let digest = Some(out.digest());
    if out.timed_out {
        return SmtRun { outcome: SmtOutcome::Unknown(format!("timeout after {:?}", cfg.timeout)), digest };
    }
    let outcome = match parse_solver_output(&out.stdout) {
        Err(e) => SmtOutcome::SolverError(format!("{e}; stderr: {}", out.stderr.trim())),
        Ok(SolverAnswer::Unsat) => SmtOutcome::Unsat,
        Ok(SolverAnswer::Unknown) => SmtOutcome::Unknown("solver answered unknown".into()),
        Ok(SolverAnswer::Sat(bindings)) => decode(script, &bindings),
    };
    SmtRun { outcome, digest }
}

fn error_run(msg: String, digest: Option<String>) -> SmtRun {
    SmtRun { outcome: SmtOutcome::SolverError(msg), digest }
}

fn decode(script: &SmtScript, bindings: &BTreeMap<String, i64>) -> SmtOutcome {
    let mut values = BTreeMap::new();
    for (&v, sym) in &script.symbols {
        let Some(&x) = bindings.get(sym) else {
            return SmtOutcome::SolverError(format!("solver model has no value for {sym}"));
        };
        let Ok(x) = u32::try_from(x) else {
            return SmtOutcome::SolverError(format!("solver value {x} for {sym} is out of range"));
        };
        values.insert(v, x);
    }
    match ParamAssignment::new(&script.graph, values) {
        Err(e) => SmtOutcome::SolverError(format!("solver model is not a valid program: {e}")),
        Ok(p) if check_consistency(&script.graph, &p, &script.io) => SmtOutcome::Sat(p),
        Ok(_) => SmtOutcome::SolverError("solver model is inconsistent with the examples".into()),
    }
}

/// Emit, solve and wrap the verdict as a synthesis result.
pub fn synthesize(ig: &InstanceGraph, cfg: &SolverConfig) -> SynthesisResult {
    let start = Instant::now();
    let script = emit_smtlib(ig);
    let run = solve(&script, cfg);
    let status = match run.outcome {
        SmtOutcome::Sat(p) => Status::Success(p),
        SmtOutcome::Unsat => Status::Exhausted,
        SmtOutcome::Unknown(_) => Status::Timeout,
        SmtOutcome::SolverError(e) => Status::SolverError(e),
    };
    let stats = RunStats { solver_digest: run.digest, ..RunStats::default() };
    SynthesisResult::new(&script.graph, &script.io, "smt", status, start.elapsed(), stats)
}
