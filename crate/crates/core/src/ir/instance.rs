use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigUint;

use crate::dsl::VarKind;

use super::graph::{Graph, VarId};
use super::lower::SizeBudget;
use super::IrError;

/// One input-output example: a value for every Input cell and every Output
/// cell of a graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Example {
    pub inputs: BTreeMap<VarId, u32>,
    pub outputs: BTreeMap<VarId, u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IOExamples {
    pub examples: Vec<Example>,
}

impl IOExamples {
    pub fn new(examples: Vec<Example>) -> Self {
        IOExamples { examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// The base graph replicated once per example. Params are shared; every
/// other cell gets its own copy per example, Inputs clamped and Outputs
/// observed.
#[derive(Clone, Debug)]
pub struct InstanceGraph {
    pub graph: Arc<Graph>,
    pub examples: Vec<Example>,
    params: Vec<VarId>,
    /// Dense replica slot for every non-Param var.
    replica_slot: Vec<Option<usize>>,
    param_slot: Vec<Option<usize>>,
    replica_width: usize,
}

impl InstanceGraph {
    pub fn num_examples(&self) -> usize {
        self.examples.len()
    }

    pub fn params(&self) -> &[VarId] {
        &self.params
    }

    /// Number of distinct cells across all replicas (shared Params counted once).
    pub fn num_cells(&self) -> usize {
        self.params.len() + self.replica_width * self.examples.len()
    }

    /// Instance-level cell of `var` in example `example`. Params map to the
    /// same cell for every example.
    pub fn cell(&self, example: usize, var: VarId) -> usize {
        match self.replica_slot[var] {
            None => self.param_slot[var].expect("param var"),
            Some(slot) => self.params.len() + example * self.replica_width + slot,
        }
    }

    pub fn param_space_size(&self) -> BigUint {
        self.graph.param_space_size()
    }
}

pub fn bind_examples(graph: Arc<Graph>, io: &IOExamples) -> Result<InstanceGraph, IrError> {
    bind_examples_with_budget(graph, io, SizeBudget::default())
}

pub fn bind_examples_with_budget(graph: Arc<Graph>, io: &IOExamples, budget: SizeBudget) -> Result<InstanceGraph, IrError> {
    if io.examples.is_empty() {
        return Err(IrError::NoExamples);
    }
    for (e, ex) in io.examples.iter().enumerate() {
        check_cover(&graph, e, &ex.inputs, VarKind::Input)?;
        check_cover(&graph, e, &ex.outputs, VarKind::Output)?;
    }
    let params = graph.param_vars();
    let mut replica_slot = vec![None; graph.vars.len()];
    let mut param_slot = vec![None; graph.vars.len()];
    for (k, p) in params.iter().enumerate() {
        param_slot[*p] = Some(k);
    }
    let mut width = 0;
    for v in &graph.vars {
        if v.kind != VarKind::Param {
            replica_slot[v.id] = Some(width);
            width += 1;
        }
    }
    let n = io.examples.len();
    let cells = params.len() + width * n;
    if cells > budget.max_vars {
        return Err(IrError::TooLarge { what: "instance cells", count: cells, limit: budget.max_vars });
    }
    let factors = graph.factors.len() * n;
    if factors > budget.max_factors {
        return Err(IrError::TooLarge { what: "instance factors", count: factors, limit: budget.max_factors });
    }
    Ok(InstanceGraph { graph, examples: io.examples.clone(), params, replica_slot, param_slot, replica_width: width })
}

fn check_cover(g: &Graph, example: usize, values: &BTreeMap<VarId, u32>, kind: VarKind) -> Result<(), IrError> {
    for (&v, &value) in values {
        let Some(node) = g.vars.get(v) else {
            return Err(IrError::ExtraCell { example, cell: format!("#{v}") });
        };
        if node.kind != kind {
            return Err(IrError::ExtraCell { example, cell: node.label() });
        }
        if value >= node.domain {
            return Err(IrError::OutOfDomain { example, cell: node.label(), value: value as i64, domain: node.domain });
        }
    }
    for node in g.vars_of_kind(kind) {
        if !values.contains_key(&node.id) {
            return Err(IrError::MissingCell { example, cell: node.label() });
        }
    }
    Ok(())
}
