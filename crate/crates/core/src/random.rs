//! Small random models with matching examples, for property tests and
//! cross-checking backends against each other.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dsl::VarKind;
use crate::executor::{execute, ParamAssignment};
use crate::ir::{bind_examples, BlockId, Example, Graph, GraphBuilder, IOExamples, InstanceGraph, Operand, VarId, ROOT};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RandomSpec {
    /// Upper bound on cells of the base graph (Params, Inputs, Vars, Outputs).
    pub max_cells: usize,
    pub max_params: usize,
    /// Domains are drawn from `2..=max_domain`.
    pub max_domain: u32,
    pub max_examples: usize,
    /// Maximum nesting depth of gates.
    pub max_depth: usize,
    /// Probability that each observed output is replaced by a random value,
    /// which usually makes the examples unsatisfiable.
    pub corrupt: f64,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec { max_cells: 6, max_params: 2, max_domain: 4, max_examples: 3, max_depth: 2, corrupt: 0.0 }
    }
}

/// A random graph bound to examples. Unless outputs were corrupted, `hidden`
/// is consistent with them.
#[derive(Clone, Debug)]
pub struct RandomInstance {
    pub instance: InstanceGraph,
    pub hidden: ParamAssignment,
}

impl RandomInstance {
    pub fn graph(&self) -> &Arc<Graph> {
        &self.instance.graph
    }

    pub fn examples(&self) -> IOExamples {
        IOExamples::new(self.instance.examples.clone())
    }
}

/// Draw a graph with at least one gate and at least one Output, a hidden
/// program, and examples produced by running it.
pub fn random_instance<R: Rng>(rng: &mut R, spec: &RandomSpec) -> RandomInstance {
    assert!(spec.max_cells >= 3 && spec.max_params >= 1 && spec.max_domain >= 2);
    let mut b = GraphBuilder::new("random");
    let domain = |rng: &mut R| rng.gen_range(2..=spec.max_domain);

    let n_params = rng.gen_range(1..=spec.max_params.min(spec.max_cells - 2));
    let n_inputs = rng.gen_range(0..=(spec.max_cells - n_params - 1).min(2));
    let n_computed = rng.gen_range(1..=spec.max_cells - n_params - n_inputs);
    let n_outputs = rng.gen_range(1..=n_computed.min(2));

    let mut cells: Vec<(VarId, u32)> = Vec::new();
    for k in 0..n_params {
        let d = domain(rng);
        cells.push((b.scalar(&format!("p{k}"), VarKind::Param, d), d));
    }
    for k in 0..n_inputs {
        let d = domain(rng);
        cells.push((b.scalar(&format!("x{k}"), VarKind::Input, d), d));
    }
    let first_computed = cells.len();
    for k in 0..n_computed {
        let d = domain(rng);
        let (name, kind) = if k >= n_computed - n_outputs {
            (format!("out{}", k - (n_computed - n_outputs)), VarKind::Output)
        } else {
            (format!("v{k}"), VarKind::Var)
        };
        cells.push((b.scalar(&name, kind, d), d));
    }

    let forced_gate = rng.gen_range(first_computed..cells.len());
    let mut tables = 0;
    for c in first_computed..cells.len() {
        let gated = c == forced_gate || rng.gen_bool(0.4);
        let mut writer = Writer { rng: &mut *rng, b: &mut b, cells: &cells[..c], target: cells[c], tables: &mut tables };
        let depth = if gated { spec.max_depth.max(1) } else { 0 };
        writer.write(ROOT, depth, &BTreeMap::new());
    }
    let graph = Arc::new(b.finish());

    let dense: Vec<u32> = cells[..n_params].iter().map(|&(_, d)| rng.gen_range(0..d)).collect();
    let hidden = ParamAssignment::from_dense(&graph, &dense).expect("in-domain values");
    let n_examples = rng.gen_range(1..=spec.max_examples);
    let examples = (0..n_examples)
        .map(|_| {
            let inputs: BTreeMap<VarId, u32> =
                cells[n_params..first_computed].iter().map(|&(v, d)| (v, rng.gen_range(0..d))).collect();
            let (mut outputs, _) = execute(&graph, &hidden, &inputs);
            for (v, x) in outputs.iter_mut() {
                if rng.gen_bool(spec.corrupt) {
                    *x = rng.gen_range(0..graph.vars[*v].domain);
                }
            }
            Example { inputs, outputs }
        })
        .collect();
    let instance = bind_examples(graph, &IOExamples::new(examples)).expect("examples cover the graph");
    RandomInstance { instance, hidden }
}

struct Writer<'a, R> {
    rng: &'a mut R,
    b: &'a mut GraphBuilder,
    /// Cells that may be read: everything declared before the target.
    cells: &'a [(VarId, u32)],
    target: (VarId, u32),
    tables: &'a mut usize,
}

impl<R: Rng> Writer<'_, R> {
    /// Write the target in `block`, optionally under up to `depth` nested
    /// gates. `bound` maps gate conditions to their branch literal.
    fn write(&mut self, block: BlockId, depth: usize, bound: &BTreeMap<VarId, u32>) {
        let free: Vec<(VarId, u32)> = self.cells.iter().copied().filter(|(v, _)| !bound.contains_key(v)).collect();
        if depth > 0 && !free.is_empty() && (bound.is_empty() || self.rng.gen_bool(0.3)) {
            let &(cond, _) = free.choose(self.rng).expect("non-empty");
            let (_, branches) = self.b.gate(block, cond, 0);
            for (value, blk) in branches.into_iter().enumerate() {
                let mut inner = bound.clone();
                inner.insert(cond, value as u32);
                self.write(blk, depth - 1, &inner);
            }
            return;
        }
        let (dst, dom) = self.target;
        let same_domain: Vec<VarId> = self.cells.iter().filter(|(_, d)| *d == dom).map(|(v, _)| *v).collect();
        match self.rng.gen_range(0..4) {
            0 => {
                let value = self.rng.gen_range(0..dom);
                self.b.constant(block, value, dst);
            }
            1 if !same_domain.is_empty() && same_domain.iter().all(|v| !bound.contains_key(v)) => {
                let &src = same_domain.choose(self.rng).expect("non-empty");
                self.b.copy(block, src, dst);
            }
            _ if !self.cells.is_empty() => {
                let arity = self.rng.gen_range(1..=self.cells.len().min(2));
                let inputs: Vec<(VarId, u32)> = self.cells.choose_multiple(self.rng, arity).copied().collect();
                let n: usize = inputs.iter().map(|(_, d)| *d as usize).product();
                let entries: Vec<u32> = (0..n).map(|_| self.rng.gen_range(0..dom)).collect();
                let name = format!("t{}", *self.tables);
                *self.tables += 1;
                let table = self.b.table(&name, inputs.iter().map(|(_, d)| *d).collect(), dom, entries);
                let operands = inputs
                    .iter()
                    .map(|(v, _)| match bound.get(v) {
                        Some(&lit) => Operand::Lit(lit),
                        None => Operand::Var(*v),
                    })
                    .collect();
                self.b.apply(block, table, operands, dst);
            }
            _ => {
                let value = self.rng.gen_range(0..dom);
                self.b.constant(block, value, dst);
            }
        }
    }
}
