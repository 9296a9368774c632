use std::collections::BTreeSet;

use crate::dsl::{Diagnostic, Diagnostics, Span, VarKind};

use super::graph::*;

/// Check single assignment on every root-to-leaf gate path: each Var or
/// Output cell is written at most once per path, a cell written on one path
/// is written on all of them, every read follows a write, and Params and
/// Inputs have no writers. Walking blocks in order also proves that the
/// statement order is a topological order of each path.
pub fn validate_ssa(g: &Graph) -> Result<(), Diagnostics> {
    let mut st = State { g, writer: vec![None; g.vars.len()], undo: Vec::new(), diags: Vec::new() };
    st.block(ROOT);
    for v in g.vars_of_kind(VarKind::Output) {
        if st.writer[v.id].is_none() {
            st.diags.push(Diagnostic::error(
                "missing-write",
                Span::default(),
                format!("output {} has no writing factor", v.label()),
            ));
        }
    }
    if st.diags.is_empty() {
        Ok(())
    } else {
        Err(Diagnostics(st.diags))
    }
}

struct State<'a> {
    g: &'a Graph,
    writer: Vec<Option<FactorId>>,
    undo: Vec<VarId>,
    diags: Vec<Diagnostic>,
}

impl State<'_> {
    fn origin(&self, f: FactorId) -> String {
        let line = self.g.factors[f].line;
        if line > 0 {
            format!("f{f} (line {line})")
        } else {
            format!("f{f}")
        }
    }

    fn read(&mut self, v: VarId, line: u32, what: &str) {
        let node = &self.g.vars[v];
        if matches!(node.kind, VarKind::Param | VarKind::Input) || self.writer[v].is_some() {
            return;
        }
        self.diags.push(Diagnostic::error(
            "missing-write",
            Span::new(line, 0, 0),
            format!("{what} reads {} before any write on this path", node.label()),
        ));
    }

    fn block(&mut self, block: BlockId) {
        for item in self.g.blocks[block].items.clone() {
            match item {
                Item::Factor(f) => self.factor(f),
                Item::Gate(gid) => self.gate(gid),
            }
        }
    }

    fn factor(&mut self, f: FactorId) {
        let factor = &self.g.factors[f];
        for r in factor.kind.reads() {
            self.read(r, factor.line, &self.origin(f));
        }
        let dst = factor.kind.dst();
        let node = &self.g.vars[dst];
        if matches!(node.kind, VarKind::Param | VarKind::Input) {
            self.diags.push(Diagnostic::error(
                "bad-write",
                Span::new(factor.line, 0, 0),
                format!("{} writes {:?} cell {}", self.origin(f), node.kind, node.label()),
            ));
            return;
        }
        if let Some(prev) = self.writer[dst] {
            self.diags.push(Diagnostic::error(
                "double-write",
                Span::new(factor.line, 0, 0),
                format!("{} is written by both {} and {}", node.label(), self.origin(prev), self.origin(f)),
            ));
            return;
        }
        self.writer[dst] = Some(f);
        self.undo.push(dst);
    }

    fn gate(&mut self, gid: GateId) {
        let gate = &self.g.gates[gid];
        self.read(gate.cond, gate.line, &format!("gate g{gid}"));
        let mark = self.undo.len();
        let mut per_branch: Vec<Vec<(VarId, FactorId)>> = Vec::new();
        for &blk in &gate.branches {
            self.block(blk);
            let mut writes = Vec::new();
            for v in self.undo.drain(mark..) {
                writes.push((v, self.writer[v].take().expect("undo entry")));
            }
            per_branch.push(writes);
        }
        let all: BTreeSet<VarId> = per_branch.iter().flat_map(|w| w.iter().map(|(v, _)| *v)).collect();
        for (b, writes) in per_branch.iter().enumerate() {
            let have: BTreeSet<VarId> = writes.iter().map(|(v, _)| *v).collect();
            for missing in all.difference(&have) {
                self.diags.push(Diagnostic::error(
                    "missing-write",
                    Span::new(gate.line, 0, 0),
                    format!(
                        "{} is written in another branch but not in branch {b} of gate g{gid} on {}",
                        self.g.vars[*missing].label(),
                        self.g.vars[gate.cond].label()
                    ),
                ));
            }
        }
        for v in all {
            let w = per_branch.iter().find_map(|ws| ws.iter().find(|(x, _)| *x == v).map(|(_, f)| *f));
            self.writer[v] = w;
            self.undo.push(v);
        }
    }
}
