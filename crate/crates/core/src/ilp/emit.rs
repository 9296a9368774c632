use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dsl::VarKind;
use crate::ir::{BlockId, FactorKind, Graph, IOExamples, InstanceGraph, Item, Operand, VarId, ROOT};

/// Whether indicator variables keep their integrality constraints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IlpMode {
    Integral,
    Relaxed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IlpVar {
    pub name: String,
    pub lower: i64,
    pub upper: i64,
    pub integer: bool,
}

/// `Σ coef·var sense rhs` with integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(usize, i64)>,
    pub sense: Sense,
    pub rhs: i64,
}

/// A cell of the instance: a shared Param or a per-example replica.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CellRef {
    Param(VarId),
    Replica { example: usize, var: VarId },
}

/// A 0/1 feasibility program over one-hot cell indicators `b_{cell,v}` and
/// per-table-factor tuple indicators `j_t`. The objective is constant.
#[derive(Clone, Debug)]
pub struct IlpModel {
    pub name: String,
    pub mode: IlpMode,
    pub vars: Vec<IlpVar>,
    pub rows: Vec<Row>,
    /// Cell and value of every `b` indicator, keyed by variable index.
    pub indicators: BTreeMap<usize, (CellRef, u32)>,
    pub(crate) graph: Arc<Graph>,
    pub(crate) io: IOExamples,
}

impl IlpModel {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v.name == name)
    }

    /// Check a candidate point against bounds, integrality (integral mode)
    /// and every row, within `tol`. Returns the first violation.
    pub fn check_point(&self, x: &[f64], tol: f64) -> Result<(), String> {
        if x.len() != self.vars.len() {
            return Err(format!("point has {} coordinates, model has {} variables", x.len(), self.vars.len()));
        }
        for (v, &xi) in self.vars.iter().zip(x) {
            if xi < v.lower as f64 - tol || xi > v.upper as f64 + tol {
                return Err(format!("{} = {xi} is outside [{}, {}]", v.name, v.lower, v.upper));
            }
            if v.integer && self.mode == IlpMode::Integral && (xi - xi.round()).abs() > tol {
                return Err(format!("{} = {xi} is not integral", v.name));
            }
        }
        for r in &self.rows {
            let lhs: f64 = r.terms.iter().map(|&(i, c)| c as f64 * x[i]).sum();
            let rhs = r.rhs as f64;
            let ok = match r.sense {
                Sense::Le => lhs <= rhs + tol,
                Sense::Ge => lhs >= rhs - tol,
                Sense::Eq => (lhs - rhs).abs() <= tol,
            };
            if !ok {
                return Err(format!("row {} violated: lhs {lhs} {} {rhs}", r.name, r.sense.symbol()));
            }
        }
        Ok(())
    }
}

/// Encode `ig`. Equalities inside a gate branch are relaxed with the branch
/// activities `a_k = b_{cond_k, branch_k}` of every enclosing gate:
/// `lhs - rhs <= depth - Σ a_k` and `rhs - lhs <= depth - Σ a_k`. All terms
/// lie in [0, 1], so a slack of one per level is a valid big-M.
pub fn emit_ilp(ig: &InstanceGraph, mode: IlpMode) -> IlpModel {
    let g = &*ig.graph;
    let mut e = Emitter {
        g,
        mode,
        vars: Vec::new(),
        rows: Vec::new(),
        indicators: BTreeMap::new(),
        cell_base: BTreeMap::new(),
        example: 0,
        activity: Vec::new(),
    };
    for &p in ig.params() {
        e.cell_block(CellRef::Param(p), &format!("p_{}", origin_suffix(g, p)));
    }
    for ex in 0..ig.num_examples() {
        for v in g.vars.iter().filter(|v| v.kind != VarKind::Param) {
            e.cell_block(CellRef::Replica { example: ex, var: v.id }, &format!("v_{ex}_{}", v.id));
        }
    }
    for (ex, example) in ig.examples.iter().enumerate() {
        e.example = ex;
        for (&v, &x) in example.inputs.iter().chain(&example.outputs) {
            let b = e.indicator(v, x);
            e.row(vec![(b, 1)], Sense::Eq, 1);
        }
        e.block(ROOT);
    }
    IlpModel {
        name: g.name.clone(),
        mode,
        vars: e.vars,
        rows: e.rows,
        indicators: e.indicators,
        graph: ig.graph.clone(),
        io: IOExamples::new(ig.examples.clone()),
    }
}

fn origin_suffix(g: &Graph, v: VarId) -> String {
    let (name, idx) = &g.vars[v].origin;
    let mut s = name.clone();
    for i in idx {
        s.push('_');
        s.push_str(&i.to_string());
    }
    s
}

struct Emitter<'g> {
    g: &'g Graph,
    mode: IlpMode,
    vars: Vec<IlpVar>,
    rows: Vec<Row>,
    indicators: BTreeMap<usize, (CellRef, u32)>,
    /// First indicator of each cell's block.
    cell_base: BTreeMap<CellRef, usize>,
    example: usize,
    /// Activity indicators of the enclosing gate branches.
    activity: Vec<usize>,
}

impl Emitter<'_> {
    fn new_var(&mut self, name: String, integer: bool) -> usize {
        self.vars.push(IlpVar { name, lower: 0, upper: 1, integer: integer && self.mode == IlpMode::Integral });
        self.vars.len() - 1
    }

    fn cell_block(&mut self, cell: CellRef, name: &str) {
        let var = match cell {
            CellRef::Param(v) | CellRef::Replica { var: v, .. } => v,
        };
        let base = self.vars.len();
        let d = self.g.vars[var].domain;
        for x in 0..d {
            let i = self.new_var(format!("b_{name}_{x}"), true);
            self.indicators.insert(i, (cell, x));
        }
        self.cell_base.insert(cell, base);
        let terms = (0..d as usize).map(|k| (base + k, 1)).collect();
        self.push_row(terms, Sense::Eq, 1);
    }

    fn cell(&self, v: VarId) -> CellRef {
        if self.g.vars[v].kind == VarKind::Param {
            CellRef::Param(v)
        } else {
            CellRef::Replica { example: self.example, var: v }
        }
    }

    fn indicator(&self, v: VarId, value: u32) -> usize {
        self.cell_base[&self.cell(v)] + value as usize
    }

    fn push_row(&mut self, raw: Vec<(usize, i64)>, sense: Sense, rhs: i64) {
        // Merge repeated variables (nested gates on the same condition).
        let mut terms: Vec<(usize, i64)> = Vec::with_capacity(raw.len());
        for (i, c) in raw {
            match terms.iter_mut().find(|(j, _)| *j == i) {
                Some(t) => t.1 += c,
                None => terms.push((i, c)),
            }
        }
        terms.retain(|&(_, c)| c != 0);
        if terms.is_empty() {
            let holds = match sense {
                Sense::Le => 0 <= rhs,
                Sense::Ge => 0 >= rhs,
                Sense::Eq => rhs == 0,
            };
            if holds {
                return;
            }
            // Keep an unsatisfiable row visible to the solver.
            terms.push((0, 0));
        }
        let name = format!("r{}", self.rows.len());
        self.rows.push(Row { name, terms, sense, rhs });
    }

    /// Add a row, relaxed by the current gate activities.
    fn row(&mut self, terms: Vec<(usize, i64)>, sense: Sense, rhs: i64) {
        if self.activity.is_empty() {
            self.push_row(terms, sense, rhs);
            return;
        }
        let depth = self.activity.len() as i64;
        let act: Vec<(usize, i64)> = self.activity.iter().map(|&a| (a, 1)).collect();
        if matches!(sense, Sense::Le | Sense::Eq) {
            let mut t = terms.clone();
            t.extend(act.iter().copied());
            self.push_row(t, Sense::Le, rhs + depth);
        }
        if matches!(sense, Sense::Ge | Sense::Eq) {
            let mut t = terms;
            t.extend(act.iter().map(|&(a, _)| (a, -1)));
            self.push_row(t, Sense::Ge, rhs - depth);
        }
    }

    fn block(&mut self, block: BlockId) {
        let g = self.g;
        for item in &g.blocks[block].items {
            match *item {
                Item::Factor(f) => self.factor(f),
                Item::Gate(gid) => {
                    let gate = &g.gates[gid];
                    for (b, &blk) in gate.branches.iter().enumerate() {
                        if g.blocks[blk].items.is_empty() {
                            continue;
                        }
                        let a = self.indicator(gate.cond, b as u32);
                        self.activity.push(a);
                        self.block(blk);
                        self.activity.pop();
                    }
                }
            }
        }
    }

    fn factor(&mut self, f: usize) {
        let g = self.g;
        match &g.factors[f].kind {
            FactorKind::Copy { src, dst } => {
                for x in 0..g.vars[*dst].domain {
                    let (bd, bs) = (self.indicator(*dst, x), self.indicator(*src, x));
                    self.row(vec![(bd, 1), (bs, -1)], Sense::Eq, 0);
                }
            }
            FactorKind::Const { value, dst } => {
                let b = self.indicator(*dst, *value);
                self.row(vec![(b, 1)], Sense::Eq, 1);
            }
            FactorKind::Table { table, inputs, dst } => {
                let t = &g.tables[*table];
                let tuples: Vec<(usize, Vec<u32>)> = (0..t.entries.len())
                    .map(|i| (i, t.tuple(i)))
                    .filter(|(_, tu)| {
                        inputs.iter().zip(tu).all(|(o, x)| match o {
                            Operand::Lit(l) => l == x,
                            Operand::Var(_) => true,
                        })
                    })
                    .collect();
                let free = inputs.iter().any(|o| matches!(o, Operand::Var(_)));
                if !free {
                    let b = self.indicator(*dst, t.entries[tuples[0].0]);
                    self.row(vec![(b, 1)], Sense::Eq, 1);
                    return;
                }
                let mut js = Vec::with_capacity(tuples.len());
                for (i, tu) in &tuples {
                    let j = self.new_var(format!("j_{}_{f}_{i}", self.example), false);
                    js.push((j, t.entries[*i]));
                    for (o, x) in inputs.iter().zip(tu) {
                        if let Operand::Var(v) = o {
                            let b = self.indicator(*v, *x);
                            self.row(vec![(j, 1), (b, -1)], Sense::Le, 0);
                        }
                    }
                }
                self.row(js.iter().map(|&(j, _)| (j, 1)).collect(), Sense::Eq, 1);
                for y in 0..t.output_domain {
                    let mut terms = vec![(self.indicator(*dst, y), 1)];
                    terms.extend(js.iter().filter(|&&(_, v)| v == y).map(|&(j, _)| (j, -1)));
                    self.row(terms, Sense::Eq, 0);
                }
            }
        }
    }
}
