use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::time::Instant;

use crate::executor::{check_consistency, ParamAssignment, RunStats, Status, SynthesisResult};
use crate::solver::{run_solver, SolutionFormat, SolverConfig};

use super::emit::{emit_ilp, CellRef, IlpMode, IlpModel};
use super::lp_file::write_lp_file;
use crate::ir::InstanceGraph;

const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IlpOutcome {
    Sat(ParamAssignment),
    Infeasible,
    Unknown(String),
    SolverError(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpRun {
    pub outcome: IlpOutcome,
    pub digest: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolutionStatus {
    Feasible,
    Infeasible,
    Unknown,
}

/// A parsed solution file. Variables the solver omitted are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RawSolution {
    pub status: SolutionStatus,
    pub values: HashMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SolutionError {
    #[error("solution file is empty")]
    Empty,
    #[error("unrecognised solver status line `{0}`")]
    Status(String),
    #[error("malformed solution line `{0}`")]
    Line(String),
}

/// Parse a solver solution in the given format.
pub fn parse_solution(text: &str, format: SolutionFormat) -> Result<RawSolution, SolutionError> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let head = lines.next().ok_or(SolutionError::Empty)?;
    let lower = head.to_ascii_lowercase();
    let status = if lower.contains("infeasible") {
        SolutionStatus::Infeasible
    } else if lower.starts_with("optimal") || lower.starts_with("feasible") {
        SolutionStatus::Feasible
    } else if lower.contains("time") || lower.contains("unknown") || lower.contains("stopped") {
        SolutionStatus::Unknown
    } else {
        return Err(SolutionError::Status(head.chars().take(80).collect()));
    };
    let mut values = HashMap::new();
    if status == SolutionStatus::Feasible {
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            let (name, value) = match (format, parts.as_slice()) {
                (SolutionFormat::NameValue, [name, value]) => (*name, *value),
                // `index name value reduced-cost`, optionally prefixed by `**`.
                (SolutionFormat::Cbc, [.., name, value, _reduced]) => (*name, *value),
                _ => return Err(SolutionError::Line(line.to_string())),
            };
            let v: f64 = value.parse().map_err(|_| SolutionError::Line(line.to_string()))?;
            values.insert(name.to_string(), v);
        }
    }
    Ok(RawSolution { status, values })
}

/// Write `m` to a temporary LP file, run the solver and parse its solution
/// file (or standard output when it writes no file).
pub fn run_ilp_solver(m: &IlpModel, cfg: &SolverConfig) -> (Result<RawSolution, String>, Option<String>) {
    let dir = match tempfile::Builder::new().prefix("synthkit-").tempdir() {
        Ok(d) => d,
        Err(e) => return (Err(format!("cannot create work directory: {e}")), None),
    };
    let lp = dir.path().join("model.lp");
    let sol = dir.path().join("model.sol");
    let written = std::fs::File::create(&lp).and_then(|mut f| f.write_all(write_lp_file(m).as_bytes()));
    if let Err(e) = written {
        return (Err(format!("cannot write LP file: {e}")), None);
    }
    let out = match run_solver(cfg, &lp, Some(&sol)) {
        Ok(o) => o,
        Err(e) => return (Err(e.to_string()), None),
    };
    let digest = Some(out.digest());
    if out.timed_out {
        let raw = RawSolution { status: SolutionStatus::Unknown, values: HashMap::new() };
        return (Ok(raw), digest);
    }
    let text = std::fs::read_to_string(&sol).unwrap_or_else(|_| out.stdout.clone());
    let parsed = parse_solution(&text, cfg.solution_format)
        .map_err(|e| format!("{e} (exit code {:?}; stderr: {})", out.exit_code, out.stderr.trim()));
    (parsed, digest)
}

/// Solve `m` and decode the Param indicators. Integral mode demands 0/1
/// values; every decoded program is re-checked against the examples.
pub fn solve_ilp(m: &IlpModel, cfg: &SolverConfig) -> IlpRun {
    let (raw, digest) = run_ilp_solver(m, cfg);
    let outcome = match raw {
        Err(e) => IlpOutcome::SolverError(e),
        Ok(raw) => match raw.status {
            SolutionStatus::Infeasible => IlpOutcome::Infeasible,
            SolutionStatus::Unknown => IlpOutcome::Unknown("solver stopped without a verdict".into()),
            SolutionStatus::Feasible => decode(m, &raw),
        },
    };
    IlpRun { outcome, digest }
}

fn value(raw: &RawSolution, name: &str) -> f64 {
    raw.values.get(name).copied().unwrap_or(0.0)
}

fn decode(m: &IlpModel, raw: &RawSolution) -> IlpOutcome {
    if m.mode == IlpMode::Integral {
        for v in m.vars.iter().filter(|v| v.integer) {
            let x = value(raw, &v.name);
            if (x - x.round()).abs() > INTEGRALITY_TOL {
                return IlpOutcome::SolverError(format!("fractional value {x} for integral variable {}", v.name));
            }
        }
    }
    let mut assigned: BTreeMap<usize, u32> = BTreeMap::new();
    for (&i, &(cell, x)) in &m.indicators {
        if let CellRef::Param(p) = cell {
            if (value(raw, &m.vars[i].name) - 1.0).abs() <= INTEGRALITY_TOL
                && assigned.insert(p, x).is_some() {
                    return IlpOutcome::SolverError(format!("two values selected for {}", m.graph.vars[p].label()));
                }
        }
    }
    match ParamAssignment::new(&m.graph, assigned) {
        Err(e) => IlpOutcome::SolverError(format!("solution is not a valid program: {e}")),
        Ok(p) if check_consistency(&m.graph, &p, &m.io) => IlpOutcome::Sat(p),
        Ok(_) => IlpOutcome::SolverError("decoded program is inconsistent with the examples".into()),
    }
}

/// Feasibility and looseness of an LP relaxation.
#[derive(Clone, Debug, PartialEq)]
pub struct LpBoundReport {
    pub feasible: bool,
    /// Indicators further than 1e-6 from both 0 and 1.
    pub fractional: usize,
    pub indicators: usize,
    pub fractionality: f64,
}

impl LpBoundReport {
    /// Summarize a point of the relaxed model.
    pub fn from_point(m: &IlpModel, values: impl Fn(&str) -> f64) -> Self {
        let n = m.vars.len();
        let fractional = m
            .vars
            .iter()
            .filter(|v| {
                let x = values(&v.name);
                x.abs() > INTEGRALITY_TOL && (x - 1.0).abs() > INTEGRALITY_TOL
            })
            .count();
        LpBoundReport {
            feasible: true,
            fractional,
            indicators: n,
            fractionality: if n == 0 { 0.0 } else { fractional as f64 / n as f64 },
        }
    }
}

pub fn lp_bound_report(m: &IlpModel, cfg: &SolverConfig) -> Result<LpBoundReport, String> {
    let (raw, _) = run_ilp_solver(m, cfg);
    let raw = raw?;
    match raw.status {
        SolutionStatus::Infeasible => {
            Ok(LpBoundReport { feasible: false, fractional: 0, indicators: m.vars.len(), fractionality: 0.0 })
        }
        SolutionStatus::Unknown => Err("solver stopped without a verdict".into()),
        SolutionStatus::Feasible => Ok(LpBoundReport::from_point(m, |n| value(&raw, n))),
    }
}

/// Emit in integral mode, solve and wrap the verdict.
pub fn synthesize(ig: &InstanceGraph, cfg: &SolverConfig) -> SynthesisResult {
    let start = Instant::now();
    let m = emit_ilp(ig, IlpMode::Integral);
    let run = solve_ilp(&m, cfg);
    let status = match run.outcome {
        IlpOutcome::Sat(p) => Status::Success(p),
        IlpOutcome::Infeasible => Status::Exhausted,
        IlpOutcome::Unknown(_) => Status::Timeout,
        IlpOutcome::SolverError(e) => Status::SolverError(e),
    };
    let stats = RunStats { solver_digest: run.digest, ..RunStats::default() };
    SynthesisResult::new(&m.graph, &m.io, "ilp", status, start.elapsed(), stats)
}
