use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;
use synthkit::dsl::{compile, ModelSource, VarKind};
use synthkit::ir::{
    bind_examples, lower, lower_with_budget, validate_ssa, Example, FactorKind, Graph, GraphBuilder, IOExamples, IrError,
    Item, SizeBudget, ROOT,
};
use synthkit::zoo::{find_task, list_tasks, model_text};

fn lower_text(name: &str, text: &str) -> Graph {
    let typed = compile(&ModelSource::new(name, text)).unwrap_or_else(|d| panic!("{d}"));
    lower(&typed).unwrap()
}

fn automaton() -> Graph {
    lower_text("automaton", model_text("automaton.tpt").unwrap())
}

fn count(g: &Graph, kind: VarKind) -> usize {
    g.vars_of_kind(kind).count()
}

/// Rule-table examples computed here, without the executor: simulate the
/// two-cell automaton directly.
fn automaton_examples(g: &Graph, table: [u32; 4], inputs: &[[u32; 2]]) -> IOExamples {
    let t = g.decl("tape").unwrap().num_cells();
    let input = g.decl("initial_tape").unwrap().first_var;
    let output = g.decl("final_tape").unwrap().first_var;
    let examples = inputs
        .iter()
        .map(|&[a, b]| {
            let mut tape = vec![a, b];
            while tape.len() < t {
                let n = tape.len();
                tape.push(table[(tape[n - 2] * 2 + tape[n - 1]) as usize]);
            }
            Example {
                inputs: BTreeMap::from([(input, a), (input + 1, b)]),
                outputs: BTreeMap::from([(output, tape[t - 1])]),
            }
        })
        .collect();
    IOExamples::new(examples)
}

#[test]
fn automaton_lowering_census() {
    let g = automaton();
    assert_eq!(count(&g, VarKind::Param), 4);
    assert_eq!(count(&g, VarKind::Var), 5);
    assert_eq!(count(&g, VarKind::Input), 2);
    assert_eq!(count(&g, VarKind::Output), 1);

    let root_gates: Vec<usize> = g.blocks[ROOT]
        .items
        .iter()
        .filter_map(|i| match i {
            Item::Gate(id) => Some(*id),
            Item::Factor(_) => None,
        })
        .collect();
    assert_eq!(root_gates.len(), 3, "one outer gate per unrolled iteration");
    let rule = g.decl("ruleTable").unwrap().vars();
    for gid in root_gates {
        let outer = &g.gates[gid];
        assert_eq!(outer.branches.len(), 2);
        for &b in &outer.branches {
            let inner: Vec<_> = g.blocks[b].items.iter().collect();
            assert_eq!(inner.len(), 1);
            let Item::Gate(inner) = inner[0] else { panic!("expected a nested gate") };
            let inner = &g.gates[*inner];
            assert_eq!(inner.branches.len(), 2);
            for &leaf in &inner.branches {
                let items = &g.blocks[leaf].items;
                assert_eq!(items.len(), 1);
                let Item::Factor(f) = items[0] else { panic!("expected a factor") };
                match g.factors[f].kind {
                    FactorKind::Copy { src, .. } => assert!(rule.contains(&src)),
                    ref k => panic!("expected a copy from the rule table, got {k:?}"),
                }
            }
        }
    }
    // The four leaves of each iteration read the four distinct table cells.
    let gate = &g.gates[0];
    let mut sources: Vec<usize> = gate
        .branches
        .iter()
        .flat_map(|&b| {
            let Item::Gate(inner) = g.blocks[b].items[0] else { unreachable!() };
            g.gates[inner].branches.clone()
        })
        .map(|leaf| {
            let Item::Factor(f) = g.blocks[leaf].items[0] else { unreachable!() };
            g.factors[f].kind.reads()[0]
        })
        .collect();
    sources.sort();
    assert_eq!(sources, rule.collect::<Vec<_>>());
    validate_ssa(&g).unwrap();
}

#[test]
fn constant_program_is_one_const_factor() {
    let g = lower_text("one", "out = Output(2)\nout.set_to(1)\n");
    assert_eq!(g.vars.len(), 1);
    assert_eq!(g.factors.len(), 1);
    assert!(matches!(g.factors[0].kind, FactorKind::Const { value: 1, dst: 0 }));
    assert_eq!(g.param_space_size(), BigUint::from(1u32));
    assert_eq!(g.log10_param_space(), 0.0);
}

#[test]
fn parity_chain_census() {
    let g = find_task("parity-chain").unwrap().load(&[]).unwrap().graph;
    assert_eq!(count(&g, VarKind::Param), 4);
    assert!(g.vars_of_kind(VarKind::Param).all(|v| v.domain == 2));
    assert_eq!(count(&g, VarKind::Output), 3);
    assert_eq!(g.tables.len(), 1);
    assert_eq!(g.tables[0].entries, [0, 1, 1, 0]);
    assert_eq!(g.factors.len(), 3);
    for f in &g.factors {
        let FactorKind::Table { table, inputs, dst } = &f.kind else { panic!("expected table factor") };
        assert_eq!(*table, 0);
        assert_eq!(inputs.len(), 2);
        assert_eq!(g.vars[*dst].kind, VarKind::Output);
    }
}

#[test]
fn double_write_reports_both_factors() {
    let mut b = GraphBuilder::new("dw");
    let y = b.scalar("y", VarKind::Output, 2);
    b.constant(ROOT, 0, y);
    b.constant(ROOT, 1, y);
    let err = validate_ssa(&b.finish()).unwrap_err();
    assert!(err.has_code("double-write"));
    let msg = err.to_string();
    assert!(msg.contains("f0") && msg.contains("f1"), "{msg}");
}

#[test]
fn write_on_one_branch_only_names_the_other_branch() {
    let mut b = GraphBuilder::new("mw");
    let c = b.scalar("c", VarKind::Input, 2);
    let y = b.scalar("y", VarKind::Var, 2);
    let out = b.scalar("out", VarKind::Output, 2);
    let (_, branches) = b.gate(ROOT, c, 0);
    b.constant(branches[0], 1, y);
    b.copy(ROOT, y, out);
    let err = validate_ssa(&b.finish()).unwrap_err();
    assert!(err.has_code("missing-write"));
    assert!(err.to_string().contains("branch 1"), "{err}");
}

#[test]
fn params_and_inputs_have_no_writers() {
    let mut b = GraphBuilder::new("pw");
    let p = b.scalar("p", VarKind::Param, 2);
    let out = b.scalar("out", VarKind::Output, 2);
    b.constant(ROOT, 1, p);
    b.copy(ROOT, p, out);
    assert!(validate_ssa(&b.finish()).is_err());
}

#[test]
fn every_zoo_task_lowers_to_a_valid_graph() {
    for t in list_tasks() {
        let g = t.load(&[]).unwrap().graph;
        validate_ssa(&g).unwrap_or_else(|d| panic!("{}: {d}", t.name));
        assert!(g.vars.iter().enumerate().all(|(i, v)| v.id == i && v.domain >= 1));
        for f in &g.factors {
            if let FactorKind::Table { table, inputs, .. } = &f.kind {
                assert_eq!(inputs.len(), g.tables[*table].input_domains.len());
            }
        }
        for tab in &g.tables {
            let n: usize = tab.input_domains.iter().map(|d| *d as usize).product();
            assert_eq!(tab.entries.len(), n);
            assert!(tab.entries.iter().all(|e| *e < tab.output_domain));
        }
        for gate in &g.gates {
            assert_eq!(gate.branches.len() as u32, g.vars[gate.cond].domain);
        }
    }
}

#[test]
fn binding_replicates_everything_but_params() {
    let g = Arc::new(automaton());
    let io = automaton_examples(&g, [0, 1, 1, 0], &[[0, 0], [0, 1], [1, 0], [1, 1]]);
    let ig = bind_examples(g.clone(), &io).unwrap();
    assert_eq!(ig.num_examples(), 4);
    assert_eq!(ig.params().len(), 4);
    assert_eq!(ig.num_cells(), 4 + 4 * (5 + 2 + 1));
    let tape = g.decl("tape").unwrap().first_var;
    let rule = g.decl("ruleTable").unwrap().first_var;
    let tape_cells: std::collections::BTreeSet<usize> = (0..4).map(|e| ig.cell(e, tape)).collect();
    assert_eq!(tape_cells.len(), 4);
    assert!((0..4).all(|e| ig.cell(e, rule) == ig.cell(0, rule)));
    assert_eq!(ig.param_space_size(), g.param_space_size());
}

#[test]
fn single_example_instance_matches_the_base_graph() {
    let g = Arc::new(automaton());
    let io = automaton_examples(&g, [0, 1, 1, 0], &[[1, 0]]);
    let ig = bind_examples(g.clone(), &io).unwrap();
    assert_eq!(ig.num_cells(), g.vars.len());
    let mut cells: Vec<usize> = (0..g.vars.len()).map(|v| ig.cell(0, v)).collect();
    cells.sort();
    assert_eq!(cells, (0..g.vars.len()).collect::<Vec<_>>());
}

#[test]
fn binding_rejects_bad_examples() {
    let g = Arc::new(automaton());
    let good = automaton_examples(&g, [0, 1, 1, 0], &[[1, 0]]);
    let input = g.decl("initial_tape").unwrap().first_var;

    let mut out_of_domain = good.clone();
    out_of_domain.examples[0].inputs.insert(input, 2);
    assert!(matches!(bind_examples(g.clone(), &out_of_domain), Err(IrError::OutOfDomain { value: 2, .. })));

    let mut missing = good.clone();
    missing.examples[0].inputs.remove(&input);
    assert!(matches!(bind_examples(g.clone(), &missing), Err(IrError::MissingCell { .. })));

    let mut extra = good.clone();
    extra.examples[0].inputs.insert(g.decl("tape").unwrap().first_var, 0);
    assert!(matches!(bind_examples(g.clone(), &extra), Err(IrError::ExtraCell { .. })));

    assert!(matches!(bind_examples(g, &IOExamples::default()), Err(IrError::NoExamples)));
}

#[test]
fn parameter_space_sizes() {
    assert_eq!(automaton().param_space_size(), BigUint::from(16u32));
    let invert = find_task("invert").unwrap().load(&[]).unwrap().graph;
    assert!((invert.log10_param_space() - 4.0).abs() <= 0.5, "{}", invert.log10_param_space());
    let exact: f64 = invert.vars_of_kind(VarKind::Param).map(|v| v.domain as f64).product();
    assert_eq!(invert.param_space_size(), BigUint::from(exact as u64));
}

#[test]
fn lowering_is_deterministic() {
    for t in list_tasks() {
        let a = t.load(&[]).unwrap().graph;
        let b = t.load(&[]).unwrap().graph;
        assert_eq!(a, b, "{}", t.name);
        assert_eq!(a.dump(), b.dump());
    }
}

#[test]
fn size_budget_is_enforced() {
    let typed = compile(&ModelSource::new("automaton", model_text("automaton.tpt").unwrap())).unwrap();
    let tiny = SizeBudget { max_vars: 5, max_factors: 1_000 };
    assert!(matches!(lower_with_budget(&typed, tiny), Err(IrError::TooLarge { .. })));
    let few_factors = SizeBudget { max_vars: 1_000, max_factors: 4 };
    assert!(matches!(lower_with_budget(&typed, few_factors), Err(IrError::TooLarge { .. })));
}

fn constant(g: &Graph, name: &str) -> i64 {
    g.constants.iter().find(|(n, _)| n == name).unwrap().1
}

/// Reference semantics for every function defined in the zoo, written
/// directly in Rust.
fn reference(g: &Graph, name: &str, args: &[i64]) -> i64 {
    let c = |n| constant(g, n);
    match name {
        "xor" => (args[0] + args[1]) % 2,
        "apply_gate" => {
            let (a, b) = (args[1], args[2]);
            match args[0] {
                0 => a & b,
                1 => a | b,
                2 => a ^ b,
                3 => 1 - a,
                _ => a,
            }
        }
        "shift" => (args[0] + args[1] - 1).clamp(0, c("L") - 1),
        "alu" => {
            let m = c("M");
            let (x, y) = (args[1], args[2]);
            match args[0] {
                1 => (x + 1).rem_euclid(m),
                2 => (x - 1).rem_euclid(m),
                3 => (x + y).rem_euclid(m),
                4 => (x - y).rem_euclid(m),
                5 => (x < y) as i64,
                _ => 0,
            }
        }
        "writes_reg" if g.name.starts_with("basic") => (args[0] != 7 && args[0] != 8) as i64,
        "writes_reg" => (args[0] < 7) as i64,
        "writes_heap" => (args[0] == 7) as i64,
        "branch" => {
            if args[0] == 0 {
                args[1]
            } else {
                args[2]
            }
        }
        "jumps" => ((args[0] == 9 && args[1] == 0) || (args[0] == 10 && args[1] != 0)) as i64,
        "as_line" => args[0],
        other => panic!("no reference for `{other}`"),
    }
}

#[test]
fn function_tables_match_reference_semantics() {
    let mut seen = std::collections::BTreeSet::new();
    for t in list_tasks() {
        let g = t.load(&[]).unwrap().graph;
        for tab in &g.tables {
            assert!(tab.entries.len() <= 1 << 16);
            for (i, &entry) in tab.entries.iter().enumerate() {
                let tuple: Vec<i64> = tab.tuple(i).into_iter().map(i64::from).collect();
                assert_eq!(entry as i64, reference(&g, &tab.name, &tuple), "{} {}{tuple:?}", t.name, tab.name);
            }
            seen.insert(tab.name.clone());
        }
    }
    assert!(seen.len() >= 9, "{seen:?}");
}
