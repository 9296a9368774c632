use std::collections::BTreeMap;
use std::fmt::Write;

use crate::dsl::VarKind;
use crate::ir::{BlockId, FactorKind, Graph, IOExamples, InstanceGraph, Item, Operand, VarId, ROOT};

use super::SmtScript;

/// Tables with at most this many reachable entries are encoded as one
/// if-then-else chain; larger ones get one implication per entry.
pub const TABLE_ITE_LIMIT: usize = 16;

/// Encode `ig` as a QF_LIA script. Params are shared between examples; every
/// other cell gets one integer per example.
pub fn emit_smtlib(ig: &InstanceGraph) -> SmtScript {
    let g = &*ig.graph;
    let mut symbols = BTreeMap::new();
    for &p in ig.params() {
        symbols.insert(p, param_symbol(g, p));
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "; model {}: {} example(s), {} param cell(s)",
        g.name,
        ig.num_examples(),
        symbols.len()
    );
    out.push_str("(set-logic QF_LIA)\n");
    for (&p, sym) in &symbols {
        declare(&mut out, sym, g.vars[p].domain);
    }
    for e in 0..ig.num_examples() {
        for v in g.vars.iter().filter(|v| v.kind != VarKind::Param) {
            declare(&mut out, &var_symbol(e, v.id), v.domain);
        }
    }
    for (e, ex) in ig.examples.iter().enumerate() {
        let _ = writeln!(out, "; example {e}");
        for (&v, &x) in ex.inputs.iter().chain(&ex.outputs) {
            let _ = writeln!(out, "(assert (= {} {x}))", var_symbol(e, v));
        }
        let em = Emitter { g, example: e, symbols: &symbols };
        for f in em.block(ROOT) {
            let _ = writeln!(out, "(assert {f})");
        }
    }
    out.push_str("(check-sat)\n");
    if !symbols.is_empty() {
        let names: Vec<&str> = symbols.values().map(String::as_str).collect();
        let _ = writeln!(out, "(get-value ({}))", names.join(" "));
    }
    SmtScript {
        text: out,
        logic: "QF_LIA",
        symbols,
        graph: ig.graph.clone(),
        io: IOExamples::new(ig.examples.clone()),
    }
}

fn declare(out: &mut String, sym: &str, domain: u32) {
    let _ = writeln!(out, "(declare-fun {sym} () Int)");
    let _ = writeln!(out, "(assert (and (<= 0 {sym}) (< {sym} {domain})))");
}

/// `p_<name>` or `p_<name>_<i>_<j>...`.
pub(crate) fn param_symbol(g: &Graph, v: VarId) -> String {
    let (name, idx) = &g.vars[v].origin;
    let mut s = format!("p_{name}");
    for i in idx {
        let _ = write!(s, "_{i}");
    }
    s
}

pub(crate) fn var_symbol(example: usize, v: VarId) -> String {
    format!("v_{example}_{v}")
}

struct Emitter<'a> {
    g: &'a Graph,
    example: usize,
    symbols: &'a BTreeMap<VarId, String>,
}

impl Emitter<'_> {
    fn sym(&self, v: VarId) -> String {
        match self.symbols.get(&v) {
            Some(s) => s.clone(),
            None => var_symbol(self.example, v),
        }
    }

    fn block(&self, block: BlockId) -> Vec<String> {
        let mut out = Vec::new();
        for item in &self.g.blocks[block].items {
            match *item {
                Item::Factor(f) => out.push(self.factor(&self.g.factors[f].kind)),
                Item::Gate(gid) => {
                    let gate = &self.g.gates[gid];
                    let c = self.sym(gate.cond);
                    for (b, &blk) in gate.branches.iter().enumerate() {
                        let body = self.block(blk);
                        if body.is_empty() {
                            continue;
                        }
                        out.push(format!("(=> (= {c} {b}) {})", conj(&body)));
                    }
                }
            }
        }
        out
    }

    fn factor(&self, kind: &FactorKind) -> String {
        match kind {
            FactorKind::Copy { src, dst } => format!("(= {} {})", self.sym(*dst), self.sym(*src)),
            FactorKind::Const { value, dst } => format!("(= {} {value})", self.sym(*dst)),
            FactorKind::Table { table, inputs, dst } => {
                let t = &self.g.tables[*table];
                let y = self.sym(*dst);
                // Enumerate only tuples that agree with literal operands.
                let free: Vec<(usize, String)> = inputs
                    .iter()
                    .enumerate()
                    .filter_map(|(k, o)| match o {
                        Operand::Var(v) => Some((k, self.sym(*v))),
                        Operand::Lit(_) => None,
                    })
                    .collect();
                let rows: Vec<(Vec<u32>, u32)> = (0..t.entries.len())
                    .map(|i| t.tuple(i))
                    .filter(|tu| {
                        inputs.iter().zip(tu).all(|(o, x)| match o {
                            Operand::Lit(l) => l == x,
                            Operand::Var(_) => true,
                        })
                    })
                    .map(|tu| {
                        let v = t.lookup(&tu);
                        (tu, v)
                    })
                    .collect();
                let guard = |tu: &[u32]| {
                    let parts: Vec<String> = free.iter().map(|(k, s)| format!("(= {s} {})", tu[*k])).collect();
                    conj(&parts)
                };
                if free.is_empty() {
                    format!("(= {y} {})", rows[0].1)
                } else if rows.len() <= TABLE_ITE_LIMIT {
                    let (last, init) = rows.split_last().expect("tables are non-empty");
                    let mut expr = last.1.to_string();
                    for (tu, v) in init.iter().rev() {
                        expr = format!("(ite {} {v} {expr})", guard(tu));
                    }
                    format!("(= {y} {expr})")
                } else {
                    let parts: Vec<String> =
                        rows.iter().map(|(tu, v)| format!("(=> {} (= {y} {v}))", guard(tu))).collect();
                    conj(&parts)
                }
            }
        }
    }
}

fn conj(parts: &[String]) -> String {
    match parts {
        [one] => one.clone(),
        _ => format!("(and {})", parts.join(" ")),
    }
}
