//! Concrete execution of fully specified programs, the consistency check
//! every backend goes through, and exhaustive enumeration.

mod enumerate;
mod render;
mod result;

use std::collections::BTreeMap;

use crate::dsl::VarKind;
use crate::ir::{BlockId, Example, FactorKind, Graph, IOExamples, Item, Operand, VarId, ROOT};

pub use enumerate::{enumerate, EnumBudget};
pub use render::render_program;
pub use result::{RunStats, Status, SynthesisResult};

/// A value for every Param cell of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamAssignment {
    values: BTreeMap<VarId, u32>,
    /// Declared name and index tuple of each cell, for listings.
    origins: BTreeMap<VarId, (String, Vec<usize>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AssignmentError {
    #[error("{0} is not a Param cell")]
    NotParam(String),
    #[error("no value for Param cell {0}")]
    Missing(String),
    #[error("value {value} for {cell} is outside its domain [0, {domain})")]
    OutOfDomain { cell: String, value: u32, domain: u32 },
}

impl ParamAssignment {
    /// Build from per-cell values, checking that exactly the Param cells of
    /// `g` are covered with in-domain values.
    pub fn new(g: &Graph, values: BTreeMap<VarId, u32>) -> Result<Self, AssignmentError> {
        for (&v, &value) in &values {
            let node = g.vars.get(v).ok_or_else(|| AssignmentError::NotParam(format!("#{v}")))?;
            if node.kind != VarKind::Param {
                return Err(AssignmentError::NotParam(node.label()));
            }
            if value >= node.domain {
                return Err(AssignmentError::OutOfDomain { cell: node.label(), value, domain: node.domain });
            }
        }
        let mut origins = BTreeMap::new();
        for node in g.vars_of_kind(VarKind::Param) {
            if !values.contains_key(&node.id) {
                return Err(AssignmentError::Missing(node.label()));
            }
            origins.insert(node.id, node.origin.clone());
        }
        Ok(ParamAssignment { values, origins })
    }

    /// Values listed in Param-cell order (the order of `Graph::param_vars`).
    pub fn from_dense(g: &Graph, dense: &[u32]) -> Result<Self, AssignmentError> {
        let params = g.param_vars();
        if dense.len() != params.len() {
            let missing = params.get(dense.len()).map(|v| g.vars[*v].label()).unwrap_or_default();
            return Err(AssignmentError::Missing(missing));
        }
        Self::new(g, params.into_iter().zip(dense.iter().copied()).collect())
    }

    /// Assign by declared name; `values` lists each array row-major.
    pub fn from_named(g: &Graph, named: &[(&str, Vec<u32>)]) -> Result<Self, AssignmentError> {
        let mut values = BTreeMap::new();
        for (name, vals) in named {
            let d = g
                .decls
                .iter()
                .find(|d| d.name == *name && d.kind == VarKind::Param)
                .ok_or_else(|| AssignmentError::NotParam(name.to_string()))?;
            if vals.len() != d.num_cells() {
                return Err(AssignmentError::Missing(format!("{name} ({} of {} values)", vals.len(), d.num_cells())));
            }
            for (v, x) in d.vars().zip(vals) {
                values.insert(v, *x);
            }
        }
        Self::new(g, values)
    }

    pub fn get(&self, cell: VarId) -> Option<u32> {
        self.values.get(&cell).copied()
    }

    pub fn values(&self) -> &BTreeMap<VarId, u32> {
        &self.values
    }

    pub fn origin(&self, cell: VarId) -> Option<&(String, Vec<usize>)> {
        self.origins.get(&cell)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Values of the cells of `name`, row-major.
    pub fn named(&self, g: &Graph, name: &str) -> Option<Vec<u32>> {
        let d = g.decl(name)?;
        d.vars().map(|v| self.get(v)).collect()
    }
}

/// Values of every cell for one example. Cells that no executed factor
/// writes (and that are not Params or Inputs) stay `None`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub values: Vec<Option<u32>>,
    /// `(gate, branch taken)` for every gate reached, in execution order.
    pub branches: Vec<(usize, u32)>,
}

const UNSET: u32 = u32::MAX;

/// Evaluate `g` on one input. Output cells of the result are keyed by var id.
///
/// Panics if the graph reads a cell before writing it, which `validate_ssa`
/// rules out.
pub fn execute(g: &Graph, p: &ParamAssignment, inputs: &BTreeMap<VarId, u32>) -> (BTreeMap<VarId, u32>, ExecutionTrace) {
    let mut vals = vec![UNSET; g.vars.len()];
    for (&v, &x) in p.values.iter().chain(inputs) {
        vals[v] = x;
    }
    let mut branches = Vec::new();
    run_block(g, ROOT, &mut vals, &mut Some(&mut branches));
    let outputs = g.vars_of_kind(VarKind::Output).map(|n| (n.id, vals[n.id])).collect();
    let values = vals.into_iter().map(|x| (x != UNSET).then_some(x)).collect();
    (outputs, ExecutionTrace { values, branches })
}

/// True iff executing `p` reproduces every observed output of every example.
pub fn check_consistency(g: &Graph, p: &ParamAssignment, io: &IOExamples) -> bool {
    let mut vals = vec![UNSET; g.vars.len()];
    io.examples.iter().all(|ex| {
        vals.fill(UNSET);
        for (&v, &x) in &p.values {
            vals[v] = x;
        }
        example_holds(g, ex, &mut vals)
    })
}

/// Run one example on a buffer that already holds the Param values.
pub(crate) fn example_holds(g: &Graph, ex: &Example, vals: &mut [u32]) -> bool {
    for (&v, &x) in &ex.inputs {
        vals[v] = x;
    }
    run_block(g, ROOT, vals, &mut None);
    ex.outputs.iter().all(|(&v, &x)| vals[v] == x)
}

fn operand(vals: &[u32], o: &Operand) -> u32 {
    match *o {
        Operand::Var(v) => read(vals, v),
        Operand::Lit(x) => x,
    }
}

fn read(vals: &[u32], v: VarId) -> u32 {
    let x = vals[v];
    assert!(x != UNSET, "cell #{v} read before it was written; graph failed single assignment");
    x
}

fn run_block(g: &Graph, block: BlockId, vals: &mut [u32], trace: &mut Option<&mut Vec<(usize, u32)>>) {
    for item in &g.blocks[block].items {
        match *item {
            Item::Factor(f) => match &g.factors[f].kind {
                FactorKind::Copy { src, dst } => vals[*dst] = read(vals, *src),
                FactorKind::Const { value, dst } => vals[*dst] = *value,
                FactorKind::Table { table, inputs, dst } => {
                    let t = &g.tables[*table];
                    let mut idx = 0usize;
                    for (o, d) in inputs.iter().zip(&t.input_domains) {
                        idx = idx * *d as usize + operand(vals, o) as usize;
                    }
                    vals[*dst] = t.entries[idx];
                }
            },
            Item::Gate(gid) => {
                let gate = &g.gates[gid];
                let b = read(vals, gate.cond);
                if let Some(tr) = trace.as_mut() {
                    tr.push((gid, b));
                }
                run_block(g, gate.branches[b as usize], vals, trace);
            }
        }
    }
}
