#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use synthkit::solver::SolverConfig;

fn runs(cmd: &str, args: &[&str]) -> bool {
    Command::new(cmd).args(args).stdout(Stdio::null()).stderr(Stdio::null()).status().is_ok_and(|s| s.success())
}

fn from_env(var: &str) -> Option<PathBuf> {
    std::env::var_os(var).filter(|v| !v.is_empty()).map(PathBuf::from)
}

/// SMT-LIB2 solver from `SYNTHKIT_SMT_SOLVER`, else `z3` on the PATH.
pub fn smt_solver(timeout: Duration) -> Option<SolverConfig> {
    let path = from_env("SYNTHKIT_SMT_SOLVER").or_else(|| runs("z3", &["-version"]).then(|| PathBuf::from("z3")))?;
    Some(SolverConfig::new(path).with_timeout(timeout))
}

/// LP solver from `SYNTHKIT_ILP_SOLVER`, else the bundled HiGHS wrapper
/// when its Python module is importable.
pub fn ilp_solver(timeout: Duration) -> Option<SolverConfig> {
    let path = from_env("SYNTHKIT_ILP_SOLVER").or_else(|| {
        let script = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scripts/highs_lp.py");
        (script.exists() && runs("python3", &["-c", "import highspy"])).then_some(script)
    })?;
    Some(SolverConfig::new(path).with_timeout(timeout))
}

pub fn skip(what: &str) {
    eprintln!("skipping: no {what} solver available");
}
