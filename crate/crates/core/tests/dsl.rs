use proptest::prelude::*;
use synthkit::dsl::ast::{BinOp, UnOp};
use synthkit::dsl::parser::parse_expr;
use synthkit::dsl::pretty::expr as print_expr;
use synthkit::dsl::{check, compile, parse, pretty, resolve_constants, Expr, ExprKind, ModelSource, Stmt, VarKind};
use synthkit::zoo::{model_files, model_text};

fn automaton() -> ModelSource {
    ModelSource::new("automaton", model_text("automaton.tpt").unwrap())
}

fn src(text: &str) -> ModelSource {
    ModelSource::new("test", text)
}

fn count_gates(body: &[Stmt]) -> usize {
    body.iter()
        .map(|s| match s {
            Stmt::With { body, .. } => 1 + count_gates(body),
            Stmt::For { body, .. } => count_gates(body),
            Stmt::If { then_body, else_body, .. } => count_gates(then_body) + count_gates(else_body),
            Stmt::SetTo { .. } => 0,
        })
        .sum()
}

#[test]
fn automaton_parses_into_the_expected_declarations() {
    let ast = parse(&automaton()).unwrap();
    let kinds: Vec<(&str, VarKind, usize)> =
        ast.decls.iter().map(|d| (d.name.as_str(), d.kind, d.shape.len())).collect();
    assert_eq!(
        kinds,
        [
            ("ruleTable", VarKind::Param, 2),
            ("tape", VarKind::Var, 1),
            ("initial_tape", VarKind::Input, 1),
            ("final_tape", VarKind::Output, 0),
        ]
    );
    let rule = ast.decl("ruleTable").unwrap();
    assert_eq!(rule.domain.as_int(), Some(2));
    assert_eq!(rule.shape.iter().map(|e| e.as_int()).collect::<Vec<_>>(), [Some(2), Some(2)]);
    let loops: Vec<&Stmt> = ast.body.iter().filter(|s| matches!(s, Stmt::For { .. })).collect();
    assert_eq!(loops.len(), 1);
    let Stmt::For { body, .. } = loops[0] else { unreachable!() };
    assert_eq!(count_gates(body), 2);
    assert!(matches!(&body[0], Stmt::With { body: inner, .. } if matches!(inner[0], Stmt::With { .. })));
}

#[test]
fn declarations_without_a_body_parse() {
    let ast = parse(&src("x = Param(2)\ny = Output(2)\n")).unwrap();
    assert!(ast.body.is_empty());
    assert_eq!(ast.decls.len(), 2);
}

#[test]
fn zero_domain_is_rejected() {
    let err = compile(&src("x = Param(0)\n")).unwrap_err();
    assert!(err.has_code("domain-size"), "{err}");
    assert!(err.to_string().contains("domain size must be ≥ 1"));
}

#[test]
fn unsupported_constructs_are_named() {
    let err = parse(&src("x = Var(2)\nwhile x:\n    x.set_to(1)\n")).unwrap_err();
    assert!(err.to_string().contains("while"), "{err}");
    let err = parse(&src("x = Var(2)\nx.set_to(1\n")).unwrap_err();
    assert!(err.has_code("syntax"));
}

#[test]
fn constants_resolve_into_shapes_and_loop_bounds() {
    let ast = parse(&automaton()).unwrap();
    let (resolved, _) = resolve_constants(&ast, &Default::default()).unwrap();
    assert_eq!(resolved.decl("tape").unwrap().shape[0].as_int(), Some(5));
    let bounds = |a: &synthkit::dsl::Ast| {
        a.body
            .iter()
            .find_map(|s| match s {
                Stmt::For { lo, hi, .. } => Some((lo.as_int(), hi.as_int())),
                _ => None,
            })
            .unwrap()
    };
    assert_eq!(bounds(&resolved), (Some(1), Some(4)));

    let overrides = [("T".to_string(), 4)].into_iter().collect();
    let (shorter, _) = resolve_constants(&ast, &overrides).unwrap();
    assert_eq!(shorter.decl("tape").unwrap().shape[0].as_int(), Some(4));
    assert_eq!(bounds(&shorter), (Some(1), Some(3)));
}

#[test]
fn overrides_must_name_declared_constants() {
    assert!(compile(&automaton().with_override("NOPE", 3)).is_err());
}

#[test]
fn empty_range_is_dropped_with_a_warning() {
    let text = "x = Var(2)[4]\ny = Output(2)\nfor i in range(3, 3):\n    x[i].set_to(1)\ny.set_to(0)\n";
    let ast = parse(&src(text)).unwrap();
    let (resolved, warnings) = resolve_constants(&ast, &Default::default()).unwrap();
    assert!(!resolved.body.iter().any(|s| matches!(s, Stmt::For { .. })));
    assert_eq!(warnings.len(), 1);
    assert_eq!(warnings[0].code, "empty-range");
}

#[test]
fn automaton_checks_cleanly() {
    let m = compile(&automaton()).unwrap();
    assert!(m.warnings.is_empty());
}

#[test]
fn domain_mismatch_is_reported() {
    let text = "ruleTable = Param(2)[2, 2]\nx0 = Input(2)\nx1 = Input(2)\nwide = Output(3)\n\
                with x0 as a:\n    with x1 as b:\n        wide.set_to(ruleTable[a, b])\n";
    let err = compile(&src(text)).unwrap_err();
    assert!(err.has_code("domain-mismatch"), "{err}");
}

#[test]
fn runtime_index_needs_a_gate() {
    let bad = "tape = Input(2)[2]\ns = Input(2)\nout = Output(2)\nout.set_to(tape[s])\n";
    let err = compile(&src(bad)).unwrap_err();
    assert!(err.has_code("runtime-index"), "{err}");
    assert!(err.to_string().contains("must be introduced by a gate"));
    let good = "tape = Input(2)[2]\ns = Input(2)\nout = Output(2)\nwith s as i:\n    out.set_to(tape[i])\n";
    compile(&src(good)).unwrap();
}

#[test]
fn inputs_cannot_be_written() {
    let err = compile(&src("x = Input(2)\nx.set_to(1)\n")).unwrap_err();
    assert!(err.has_code("write-input"), "{err}");
}

#[test]
fn outputs_are_written_once_per_path() {
    let twice = "y = Output(2)\ny.set_to(0)\ny.set_to(1)\n";
    assert!(compile(&src(twice)).unwrap_err().has_code("double-write"));
    let missing = "c = Input(2)\ny = Output(2)\nwith c as v:\n    if v == 0:\n        y.set_to(1)\n";
    assert!(compile(&src(missing)).unwrap_err().has_code("missing-write"));
}

#[test]
fn function_results_must_fit_the_output_domain() {
    let text = "def inc(a) -> 2 over (2): return a + 1\nx = Input(2)\ny = Output(2)\ny.set_to(inc(x))\n";
    assert!(compile(&src(text)).unwrap_err().has_code("fn-range"));
}

#[test]
fn check_is_deterministic() {
    let text = "x = Input(2)\nx.set_to(1)\ny = Output(3)\nz = Param(2)\ny.set_to(z)\nq.set_to(1)\n";
    let a = compile(&src(text)).unwrap_err().to_string();
    let b = compile(&src(text)).unwrap_err().to_string();
    assert_eq!(a, b);
    assert!(a.lines().count() >= 3, "{a}");
}

#[test]
fn pretty_print_round_trips_every_zoo_model() {
    for file in model_files() {
        let source = ModelSource::new(file, model_text(file).unwrap());
        let ast = parse(&source).unwrap();
        let printed = pretty(&ast);
        let again = parse(&ModelSource::new(file, printed.clone())).unwrap_or_else(|d| panic!("{file}: {d}\n{printed}"));
        assert_eq!(ast, again, "{file}");
        assert_eq!(pretty(&again), printed, "{file}: printing is not idempotent");
    }
}

#[test]
fn typed_model_exposes_checked_cells() {
    let m = check(&resolve_constants(&parse(&automaton()).unwrap(), &Default::default()).unwrap().0).unwrap();
    assert_eq!(m.num_cells(), 4 + 5 + 2 + 1);
}

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0i64..50).prop_map(Expr::int),
        prop::sample::select(vec!["a", "b", "x1", "T"]).prop_map(|n| Expr::new(ExprKind::Name(n.into()), Default::default())),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        let ops = vec![
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::FloorDiv,
            BinOp::Mod,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::And,
            BinOp::Or,
        ];
        let node = |kind| Expr::new(kind, Default::default());
        prop_oneof![
            (prop::sample::select(ops), inner.clone(), inner.clone())
                .prop_map(move |(op, l, r)| node(ExprKind::Binary(op, Box::new(l), Box::new(r)))),
            (prop::sample::select(vec![UnOp::Neg, UnOp::Not]), inner.clone())
                .prop_map(move |(op, e)| node(ExprKind::Unary(op, Box::new(e)))),
            (inner.clone(), inner.clone(), inner.clone())
                .prop_map(move |(t, c, e)| node(ExprKind::Cond(Box::new(t), Box::new(c), Box::new(e)))),
            prop::collection::vec(inner.clone(), 1..3).prop_map(move |args| node(ExprKind::Call("f".into(), args))),
            prop::collection::vec(inner, 1..3).prop_map(move |idx| node(ExprKind::Index("arr".into(), idx))),
        ]
    })
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in arb_expr()) {
        let text = print_expr(&e);
        let parsed = parse_expr(&text).map_err(|d| TestCaseError::fail(format!("{text}: {}", d.message)))?;
        prop_assert_eq!(parsed, e, "{}", text);
    }
}
