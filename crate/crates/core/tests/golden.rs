//! Emitted text checked against files under `tests/golden`. Run with
//! `UPDATE_GOLDEN=1` to rewrite them after an intended change, then review
//! the diff.

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};
use synthkit::ilp::{emit_ilp, write_lp_file, IlpMode};
use synthkit::smt::emit_smtlib;
use synthkit::zoo::{find_task, list_tasks};

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn updating() -> bool {
    std::env::var_os("UPDATE_GOLDEN").is_some_and(|v| v == "1")
}

fn check(file: &str, actual: &str) {
    let path = golden_dir().join(file);
    if updating() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1 to create it", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).map_or_else(
            || format!("lengths differ ({} vs {} lines)", expected.lines().count(), actual.lines().count()),
            |i| format!("first difference at line {}", i + 1),
        );
        panic!("{file} differs from golden copy: {line}");
    }
}

#[test]
fn automaton_files() {
    let task = find_task("automaton").unwrap().load(&[]).unwrap();
    let ig = task.instance(0).unwrap();
    check("automaton.ir", &task.graph.dump());
    check("automaton.smt2", &emit_smtlib(&ig).text);
    check("automaton.lp", &write_lp_file(&emit_ilp(&ig, IlpMode::Integral)));
}

#[test]
fn parity_files() {
    let task = find_task("parity-chain").unwrap().load(&[]).unwrap();
    let ig = task.instance(0).unwrap();
    check("parity-chain.ir", &task.graph.dump());
    check("parity-chain.smt2", &emit_smtlib(&ig).text);
    check("parity-chain.relaxed.lp", &write_lp_file(&emit_ilp(&ig, IlpMode::Relaxed)));
}

#[test]
fn invert_files() {
    let task = find_task("invert").unwrap().load(&[]).unwrap();
    check("invert.ir", &task.graph.dump());
    check("invert.smt2", &emit_smtlib(&task.instance(0).unwrap()).text);
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// One line per task: SHA-256 of the SMT-LIB2 script and of the integral
/// LP file for the seed-0 instance.
#[test]
fn every_task_digest() {
    let mut manifest = String::new();
    for spec in list_tasks() {
        let ig = spec.load(&[]).unwrap().instance(0).unwrap();
        let smt = sha256(&emit_smtlib(&ig).text);
        let lp = sha256(&write_lp_file(&emit_ilp(&ig, IlpMode::Integral)));
        let _ = writeln!(manifest, "{} smt2={smt} lp={lp}", spec.name);
    }
    check("digests.txt", &manifest);
}
