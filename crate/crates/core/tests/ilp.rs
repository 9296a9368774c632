mod common;

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use synthkit::dsl::VarKind;
use synthkit::executor::Status;
use synthkit::ilp::{
    emit_ilp, lp_bound_report, parse_solution, solve_ilp, synthesize, write_lp_file, CellRef, IlpMode, IlpModel,
    IlpOutcome, LpBoundReport, Sense, SolutionStatus,
};
use synthkit::ir::{bind_examples, Example, FactorKind, GraphBuilder, IOExamples, InstanceGraph, ROOT};
use synthkit::solver::SolutionFormat;
use synthkit::zoo::find_task;

fn copy_instance(domain: u32, observed: &[u32]) -> InstanceGraph {
    let mut b = GraphBuilder::new("t");
    let p = b.scalar("p", VarKind::Param, domain);
    let out = b.scalar("out", VarKind::Output, domain);
    b.copy(ROOT, p, out);
    let examples =
        observed.iter().map(|&x| Example { inputs: BTreeMap::new(), outputs: BTreeMap::from([(out, x)]) }).collect();
    bind_examples(Arc::new(b.finish()), &IOExamples::new(examples)).unwrap()
}

const COPY_LP: &str = "\
\\ model t (integral): 4 variables, 5 rows
Minimize
 obj: 0 b_p_p_0
Subject To
 r0: b_p_p_0 + b_p_p_1 = 1
 r1: b_v_0_1_0 + b_v_0_1_1 = 1
 r2: b_v_0_1_1 = 1
 r3: b_v_0_1_0 - b_p_p_0 = 0
 r4: b_v_0_1_1 - b_p_p_1 = 0
Bounds
 0 <= b_p_p_0 <= 1
 0 <= b_p_p_1 <= 1
 0 <= b_v_0_1_0 <= 1
 0 <= b_v_0_1_1 <= 1
Generals
 b_p_p_0 b_p_p_1 b_v_0_1_0 b_v_0_1_1
End
";

#[test]
fn trivial_lp_file() {
    let m = emit_ilp(&copy_instance(2, &[1]), IlpMode::Integral);
    assert_eq!(write_lp_file(&m), COPY_LP);
    let relaxed = write_lp_file(&emit_ilp(&copy_instance(2, &[1]), IlpMode::Relaxed));
    assert!(!relaxed.contains("Generals"));
    assert!(relaxed.starts_with("\\ model t (relaxed)"));
}

#[test]
fn one_hot_and_copy_rows() {
    let m = emit_ilp(&copy_instance(3, &[2]), IlpMode::Integral);
    // One-hot per cell, the observation, and one equality per copied value.
    assert_eq!(m.rows.len(), 2 + 1 + 3);
    let one_hot: Vec<_> = m.rows.iter().filter(|r| r.terms.len() == 3 && r.rhs == 1).collect();
    assert_eq!(one_hot.len(), 2);
    let copies: Vec<_> = m.rows.iter().filter(|r| r.terms.len() == 2 && r.rhs == 0).collect();
    assert_eq!(copies.len(), 3);
    for r in copies {
        assert_eq!(r.sense, Sense::Eq);
        let coefs: Vec<i64> = r.terms.iter().map(|t| t.1).collect();
        assert_eq!(coefs, [1, -1]);
    }
    for (&i, &(cell, x)) in &m.indicators {
        let expected = match cell {
            CellRef::Param(v) => {
                assert_eq!(v, 0);
                format!("b_p_p_{x}")
            }
            CellRef::Replica { example, var } => format!("b_v_{example}_{var}_{x}"),
        };
        assert_eq!(m.vars[i].name, expected);
    }
}

#[test]
fn model_without_params_or_computation() {
    let mut b = GraphBuilder::new("empty");
    let x = b.scalar("x", VarKind::Input, 2);
    let ex = Example { inputs: BTreeMap::from([(x, 1)]), outputs: BTreeMap::new() };
    let ig = bind_examples(Arc::new(b.finish()), &IOExamples::new(vec![ex])).unwrap();
    let m = emit_ilp(&ig, IlpMode::Integral);
    assert_eq!(m.vars.len(), 2);
    assert_eq!(m.rows.len(), 2);
    let lp = write_lp_file(&m);
    assert_eq!(parse_lp(&lp), Parsed::of(&m));
}

#[test]
fn emission_is_deterministic() {
    for name in ["automaton", "invert", "full-adder", "parity-chain"] {
        let ig = find_task(name).unwrap().load(&[]).unwrap().instance(2).unwrap();
        let a = write_lp_file(&emit_ilp(&ig, IlpMode::Integral));
        assert_eq!(a, write_lp_file(&emit_ilp(&ig, IlpMode::Integral)));
    }
}

/// What an LP file says, read back independently of the writer.
#[derive(Debug, PartialEq)]
struct Parsed {
    rows: Vec<(String, BTreeMap<String, i64>, String, i64)>,
    bounds: Vec<(String, i64, i64)>,
    generals: Vec<String>,
}

impl Parsed {
    fn of(m: &IlpModel) -> Parsed {
        let rows = m
            .rows
            .iter()
            .map(|r| {
                let mut terms = BTreeMap::new();
                for &(i, c) in &r.terms {
                    *terms.entry(m.vars[i].name.clone()).or_insert(0) += c;
                }
                terms.retain(|_, c| *c != 0);
                (r.name.clone(), terms, r.sense.symbol().to_string(), r.rhs)
            })
            .collect();
        let bounds = m.vars.iter().map(|v| (v.name.clone(), v.lower, v.upper)).collect();
        let generals = m.vars.iter().filter(|v| v.integer).map(|v| v.name.clone()).collect();
        Parsed { rows, bounds, generals }
    }
}

fn parse_lp(text: &str) -> Parsed {
    // Join continuation lines (indented by more than one space) onto the
    // line they continue.
    let mut lines: Vec<String> = Vec::new();
    for l in text.lines() {
        if l.starts_with("  ") {
            lines.last_mut().unwrap().push_str(l);
        } else {
            lines.push(l.to_string());
        }
    }
    let mut section = "";
    let mut p = Parsed { rows: vec![], bounds: vec![], generals: vec![] };
    for l in &lines {
        let t = l.trim();
        match t {
            "Minimize" | "Subject To" | "Bounds" | "Generals" | "End" => {
                section = match t {
                    "Minimize" => "min",
                    "Subject To" => "st",
                    "Bounds" => "bounds",
                    "Generals" => "gen",
                    _ => "end",
                };
                continue;
            }
            _ if t.starts_with('\\') => continue,
            _ => {}
        }
        match section {
            "min" => assert!(t.starts_with("obj: 0"), "objective must be constant: {t}"),
            "st" => {
                let (name, body) = t.split_once(':').unwrap();
                let tokens: Vec<&str> = body.split_whitespace().collect();
                let n = tokens.len();
                let (sense, rhs) = (tokens[n - 2].to_string(), tokens[n - 1].parse::<i64>().unwrap());
                let mut terms = BTreeMap::new();
                let mut sign = 1;
                let mut coef = 1;
                for tok in &tokens[..n - 2] {
                    match *tok {
                        "+" => sign = 1,
                        "-" => sign = -1,
                        _ => match tok.parse::<i64>() {
                            Ok(c) => coef = c,
                            Err(_) => {
                                *terms.entry(tok.to_string()).or_insert(0) += sign * coef;
                                sign = 1;
                                coef = 1;
                            }
                        },
                    }
                }
                terms.retain(|_, c: &mut i64| *c != 0);
                p.rows.push((name.to_string(), terms, sense, rhs));
            }
            "bounds" => {
                let tokens: Vec<&str> = t.split_whitespace().collect();
                assert_eq!((tokens[1], tokens[3]), ("<=", "<="));
                p.bounds.push((tokens[2].to_string(), tokens[0].parse().unwrap(), tokens[4].parse().unwrap()));
            }
            "gen" => p.generals.extend(t.split_whitespace().map(String::from)),
            _ => panic!("text after End: {t}"),
        }
    }
    assert_eq!(section, "end");
    p
}

#[test]
fn lp_files_read_back_as_the_model() {
    for name in ["automaton", "invert", "full-adder", "parity-chain", "controlled-shift"] {
        let ig = find_task(name).unwrap().load(&[]).unwrap().instance(0).unwrap();
        for mode in [IlpMode::Integral, IlpMode::Relaxed] {
            let m = emit_ilp(&ig, mode);
            let text = write_lp_file(&m);
            assert!(text.lines().all(|l| l.len() <= 255), "{name}: overlong line");
            assert_eq!(parse_lp(&text), Parsed::of(&m), "{name} {mode:?}");
        }
    }
}

/// Parity of K=4 hidden bits with one example: the relaxation admits the
/// point where every bit is one half and each XOR factor splits evenly
/// between the two tuples that produce the observed parity.
fn parity_half_point(m: &IlpModel, ig: &InstanceGraph) -> Vec<f64> {
    let g = &ig.graph;
    m.vars
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if let Some(&(cell, x)) = m.indicators.get(&i) {
                return match cell {
                    CellRef::Param(_) => 0.5,
                    CellRef::Replica { example, var } => {
                        let observed = ig.examples[example].outputs[&var];
                        if x == observed { 1.0 } else { 0.0 }
                    }
                };
            }
            let parts: Vec<usize> = v.name[2..].split('_').map(|s| s.parse().unwrap()).collect();
            let [example, factor, tuple] = parts[..] else { panic!("unexpected variable {}", v.name) };
            let FactorKind::Table { table, dst, .. } = &g.factors[factor].kind else { panic!("not a table") };
            let observed = ig.examples[example].outputs[dst];
            if g.tables[*table].entries[tuple] == observed { 0.5 } else { 0.0 }
        })
        .collect()
}

#[test]
fn parity_relaxation_is_fractional() {
    let task = find_task("parity-chain").unwrap().load(&[]).unwrap();
    let mut ig = task.instance(0).unwrap();
    assert_eq!(ig.params().len(), 4);
    ig.examples.truncate(1);
    let relaxed = emit_ilp(&ig, IlpMode::Relaxed);
    let x = parity_half_point(&relaxed, &ig);
    relaxed.check_point(&x, 1e-9).unwrap();

    let integral = emit_ilp(&ig, IlpMode::Integral);
    assert!(integral.check_point(&x, 1e-9).unwrap_err().contains("not integral"));

    let report = LpBoundReport::from_point(&relaxed, |n| x[relaxed.var_index(n).unwrap()]);
    assert!(report.fractionality > 0.0);
    // 4 params × 2 values, plus 2 × 3 tuple indicators.
    assert_eq!(report.fractional, 8 + 6);
}

#[test]
fn clamped_model_has_no_fractional_point() {
    let ig = copy_instance(3, &[2]);
    let m = emit_ilp(&ig, IlpMode::Relaxed);
    let mut x = vec![0.0; m.vars.len()];
    for (&i, &(_, v)) in &m.indicators {
        if v == 2 {
            x[i] = 1.0;
        }
    }
    m.check_point(&x, 1e-9).unwrap();
    let report = LpBoundReport::from_point(&m, |n| x[m.var_index(n).unwrap()]);
    assert_eq!(report.fractionality, 0.0);
}

#[test]
fn solution_files() {
    let s = parse_solution("optimal\nb_p_p_0 0\nb_p_p_1 1\n", SolutionFormat::NameValue).unwrap();
    assert_eq!(s.status, SolutionStatus::Feasible);
    assert_eq!(s.values["b_p_p_1"], 1.0);
    assert_eq!(parse_solution("infeasible\n", SolutionFormat::NameValue).unwrap().status, SolutionStatus::Infeasible);
    assert_eq!(
        parse_solution("unknown Time limit reached\n", SolutionFormat::NameValue).unwrap().status,
        SolutionStatus::Unknown
    );
    let cbc = "Optimal - objective value 0\n      0 b_p_p_0  0  0\n**    1 b_p_p_1  1  0\n";
    assert_eq!(parse_solution(cbc, SolutionFormat::Cbc).unwrap().values["b_p_p_1"], 1.0);
    assert!(parse_solution("", SolutionFormat::NameValue).is_err());
    assert!(parse_solution("segfault\n", SolutionFormat::NameValue).is_err());
    assert!(parse_solution("optimal\nb_p_p_0 one\n", SolutionFormat::NameValue).is_err());
}

#[test]
fn fake_solver_answers_are_checked() {
    let ig = copy_instance(2, &[1]);
    let m = emit_ilp(&ig, IlpMode::Integral);
    let fake = |body: &str| {
        synthkit::solver::SolverConfig::new("sh")
            .with_args(["-c", &format!("printf '{body}' > \"$2\""), "sh", "{input}", "{solution}"])
            .with_timeout(Duration::from_secs(5))
    };
    let ok = solve_ilp(&m, &fake("optimal\\nb_p_p_1 1\\n"));
    assert!(matches!(ok.outcome, IlpOutcome::Sat(ref p) if p.get(0) == Some(1)), "{ok:?}");
    let wrong = solve_ilp(&m, &fake("optimal\\nb_p_p_0 1\\n"));
    assert!(matches!(wrong.outcome, IlpOutcome::SolverError(ref e) if e.contains("inconsistent")), "{wrong:?}");
    let fractional = solve_ilp(&m, &fake("optimal\\nb_p_p_0 0.5\\nb_p_p_1 0.5\\n"));
    assert!(matches!(fractional.outcome, IlpOutcome::SolverError(ref e) if e.contains("fractional")));
    assert_eq!(solve_ilp(&m, &fake("infeasible\\n")).outcome, IlpOutcome::Infeasible);
}

#[test]
fn solver_round_trips() {
    let Some(cfg) = common::ilp_solver(Duration::from_secs(60)) else { return common::skip("ILP") };

    let r = synthesize(&copy_instance(2, &[1]), &cfg);
    assert_eq!(r.program().unwrap().get(0), Some(1));
    assert_eq!(*synthesize(&copy_instance(2, &[0, 1]), &cfg).status(), Status::Exhausted);

    let task = find_task("automaton").unwrap().load(&[]).unwrap();
    let ig = task.instance(0).unwrap();
    let r = synthesize(&ig, &cfg);
    assert!(r.is_success(), "{:?}", r.status());

    let bound = lp_bound_report(&emit_ilp(&ig, IlpMode::Relaxed), &cfg).unwrap();
    assert!(bound.feasible);
    let infeasible = lp_bound_report(&emit_ilp(&copy_instance(2, &[0, 1]), IlpMode::Relaxed), &cfg).unwrap();
    assert!(!infeasible.feasible);
}
