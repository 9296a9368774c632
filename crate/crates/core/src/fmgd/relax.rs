use std::collections::HashMap;
use std::sync::Arc;

use crate::ir::{BlockId, FactorKind, Graph, IOExamples, InstanceGraph, Item, Operand, TableId, VarId, ROOT};

/// Index of a probability vector in the slot arena.
pub type Slot = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct SlotInfo {
    pub offset: usize,
    pub len: usize,
    /// Set when the slot is a fixed one-hot vector.
    pub known: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Op {
    /// `out = softmax(θ[param])`.
    Softmax { param: usize, out: Slot },
    /// Sum-product through a function table. Only the free inputs are
    /// enumerated, each with its stride; `base` is the index contribution of the
    /// fixed inputs.
    Table { table: TableId, free: Vec<(Slot, usize)>, base: usize, out: Slot },
    /// Gate mixture `out = Σ_b cond[b] · branches[b]`.
    Mix { cond: Slot, branches: Vec<Slot>, out: Slot },
}

/// One logit vector per Param cell, laid out back to back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct ParamLayout {
    pub var: VarId,
    pub offset: usize,
    pub len: usize,
}

/// An observed output: `-ln μ[slot][value]` enters the loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Observation {
    pub slot: Slot,
    pub value: u32,
}

/// The continuous relaxation of an instance graph: a straight-line program
/// of differentiable ops from Param logits to output marginals.
#[derive(Clone, Debug)]
pub struct DiffProgram {
    pub(crate) graph: Arc<Graph>,
    pub(crate) io: IOExamples,
    pub(crate) slots: Vec<SlotInfo>,
    pub(crate) arena_len: usize,
    /// Arena contents before any op runs (fixed one-hot slots filled in).
    pub(crate) template: Vec<f64>,
    pub(crate) ops: Vec<Op>,
    pub(crate) params: Vec<ParamLayout>,
    pub(crate) theta_len: usize,
    pub(crate) observations: Vec<Observation>,
    /// Some observation contradicts a value fixed at compile time, so the
    /// data loss is +∞ whatever the logits.
    pub(crate) contradiction: bool,
    /// Final slot of each cell, per example.
    pub(crate) cell_slots: Vec<Vec<Option<Slot>>>,
}

impl DiffProgram {
    pub fn graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn examples(&self) -> &IOExamples {
        &self.io
    }

    /// Number of logits (sum of Param cell domain sizes).
    pub fn num_logits(&self) -> usize {
        self.theta_len
    }

    pub fn num_param_cells(&self) -> usize {
        self.params.len()
    }

    pub fn num_ops(&self) -> usize {
        self.ops.len()
    }

    pub fn num_slots(&self) -> usize {
        self.slots.len()
    }

    /// `(var, offset, domain)` of every Param cell's logit block.
    pub fn param_layout(&self) -> impl Iterator<Item = (VarId, usize, usize)> + '_ {
        self.params.iter().map(|p| (p.var, p.offset, p.len))
    }
}

/// Build the relaxation of `ig`. Cells whose values are fixed by the inputs
/// are folded away: tables over fixed inputs become constants and gates on a
/// fixed condition keep only the taken branch.
pub fn relax(ig: &InstanceGraph) -> DiffProgram {
    let g = ig.graph.clone();
    let mut b = Builder {
        g: &g,
        slots: Vec::new(),
        arena_len: 0,
        template: Vec::new(),
        ops: Vec::new(),
        const_cache: HashMap::new(),
        env: Vec::new(),
        undo: Vec::new(),
    };
    let mut params = Vec::new();
    let mut theta_len = 0;
    let mut param_slots = Vec::new();
    for &v in ig.params() {
        let len = g.vars[v].domain as usize;
        let out = b.new_slot(len, None);
        b.ops.push(Op::Softmax { param: params.len(), out });
        params.push(ParamLayout { var: v, offset: theta_len, len });
        param_slots.push((v, out));
        theta_len += len;
    }

    let mut observations = Vec::new();
    let mut contradiction = false;
    let mut cell_slots = Vec::with_capacity(ig.examples.len());
    for ex in &ig.examples {
        b.env = vec![None; g.vars.len()];
        b.undo.clear();
        for &(v, s) in &param_slots {
            b.env[v] = Some(s);
        }
        for (&v, &x) in &ex.inputs {
            let s = b.const_slot(g.vars[v].domain as usize, x);
            b.env[v] = Some(s);
        }
        b.block(ROOT);
        for (&v, &obs) in &ex.outputs {
            let s = b.env[v].expect("validated graph writes every output");
            match b.slots[s].known {
                Some(k) if k != obs => contradiction = true,
                Some(_) => {}
                None => observations.push(Observation { slot: s, value: obs }),
            }
        }
        cell_slots.push(std::mem::take(&mut b.env));
    }
    DiffProgram {
        graph: g.clone(),
        io: IOExamples::new(ig.examples.clone()),
        slots: b.slots,
        arena_len: b.arena_len,
        template: b.template,
        ops: b.ops,
        params,
        theta_len,
        observations,
        contradiction,
        cell_slots,
    }
}

struct Builder<'g> {
    g: &'g Graph,
    slots: Vec<SlotInfo>,
    arena_len: usize,
    template: Vec<f64>,
    ops: Vec<Op>,
    const_cache: HashMap<(usize, u32), Slot>,
    env: Vec<Option<Slot>>,
    undo: Vec<(VarId, Option<Slot>)>,
}

impl Builder<'_> {
    fn new_slot(&mut self, len: usize, known: Option<u32>) -> Slot {
        let id = self.slots.len();
        self.slots.push(SlotInfo { offset: self.arena_len, len, known });
        self.arena_len += len;
        self.template.resize(self.arena_len, 0.0);
        if let Some(k) = known {
            self.template[self.arena_len - len + k as usize] = 1.0;
        }
        id
    }

    fn const_slot(&mut self, len: usize, value: u32) -> Slot {
        if let Some(&s) = self.const_cache.get(&(len, value)) {
            return s;
        }
        let s = self.new_slot(len, Some(value));
        self.const_cache.insert((len, value), s);
        s
    }

    fn set(&mut self, v: VarId, s: Slot) {
        self.undo.push((v, self.env[v]));
        self.env[v] = Some(s);
    }

    fn get(&self, v: VarId) -> Slot {
        self.env[v].unwrap_or_else(|| panic!("cell #{v} read before write; graph failed single assignment"))
    }

    fn block(&mut self, block: BlockId) {
        let g = self.g;
        for item in &g.blocks[block].items {
            match *item {
                Item::Factor(f) => self.factor(&g.factors[f].kind),
                Item::Gate(gid) => self.gate(gid),
            }
        }
    }

    fn factor(&mut self, kind: &FactorKind) {
        let g = self.g;
        match kind {
            FactorKind::Copy { src, dst } => {
                let s = self.get(*src);
                self.set(*dst, s);
            }
            FactorKind::Const { value, dst } => {
                let s = self.const_slot(g.vars[*dst].domain as usize, *value);
                self.set(*dst, s);
            }
            FactorKind::Table { table, inputs, dst } => {
                let t = &g.tables[*table];
                let mut strides = vec![0usize; inputs.len()];
                let mut acc = 1usize;
                for k in (0..inputs.len()).rev() {
                    strides[k] = acc;
                    acc *= t.input_domains[k] as usize;
                }
                let mut base = 0;
                let mut free = Vec::new();
                for (k, o) in inputs.iter().enumerate() {
                    let fixed = match *o {
                        Operand::Lit(x) => Some(x),
                        Operand::Var(v) => {
                            let s = self.get(v);
                            match self.slots[s].known {
                                Some(x) => Some(x),
                                None => {
                                    free.push((s, strides[k]));
                                    None
                                }
                            }
                        }
                    };
                    if let Some(x) = fixed {
                        base += x as usize * strides[k];
                    }
                }
                let out_len = t.output_domain as usize;
                let s = if free.is_empty() {
                    self.const_slot(out_len, t.entries[base])
                } else {
                    let out = self.new_slot(out_len, None);
                    self.ops.push(Op::Table { table: *table, free, base, out });
                    out
                };
                self.set(*dst, s);
            }
        }
    }

    fn gate(&mut self, gid: usize) {
        let gate = &self.g.gates[gid];
        let c = self.get(gate.cond);
        if let Some(b) = self.slots[c].known {
            self.block(gate.branches[b as usize]);
            return;
        }
        let mark = self.undo.len();
        let mut per_branch: Vec<Vec<(VarId, Slot)>> = Vec::with_capacity(gate.branches.len());
        for &blk in &gate.branches {
            self.block(blk);
            let mut writes: Vec<(VarId, Slot)> = Vec::new();
            for &(v, _) in &self.undo[mark..] {
                if !writes.iter().any(|(w, _)| *w == v) {
                    writes.push((v, self.get(v)));
                }
            }
            while self.undo.len() > mark {
                let (v, prev) = self.undo.pop().expect("undo entry");
                self.env[v] = prev;
            }
            per_branch.push(writes);
        }
        let mut written: Vec<VarId> = per_branch.iter().flatten().map(|(v, _)| *v).collect();
        written.sort_unstable();
        written.dedup();
        for v in written {
            let branches: Vec<Slot> = per_branch
                .iter()
                .map(|ws| {
                    ws.iter()
                        .find(|(w, _)| *w == v)
                        .map(|(_, s)| *s)
                        .unwrap_or_else(|| self.get(v))
                })
                .collect();
            let s = if branches.iter().all(|s| *s == branches[0]) {
                branches[0]
            } else {
                let out = self.new_slot(self.g.vars[v].domain as usize, None);
                self.ops.push(Op::Mix { cond: c, branches, out });
                out
            };
            self.set(v, s);
        }
    }
}
