use std::fmt::Write;

use num_bigint::BigUint;

use crate::dsl::VarKind;

pub type VarId = usize;
pub type FactorId = usize;
pub type GateId = usize;
pub type BlockId = usize;
pub type TableId = usize;

/// The global block every graph starts from.
pub const ROOT: BlockId = 0;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarNode {
    pub id: VarId,
    pub domain: u32,
    pub kind: VarKind,
    /// Declared name and index tuple of the cell.
    pub origin: (String, Vec<usize>),
}

impl VarNode {
    pub fn label(&self) -> String {
        let (name, idx) = &self.origin;
        if idx.is_empty() {
            name.clone()
        } else {
            let idx: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            format!("{name}[{}]", idx.join(", "))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Operand {
    Var(VarId),
    Lit(u32),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FactorKind {
    Copy { src: VarId, dst: VarId },
    Const { value: u32, dst: VarId },
    Table { table: TableId, inputs: Vec<Operand>, dst: VarId },
}

impl FactorKind {
    pub fn dst(&self) -> VarId {
        match self {
            FactorKind::Copy { dst, .. } | FactorKind::Const { dst, .. } | FactorKind::Table { dst, .. } => *dst,
        }
    }

    /// Variables read by the factor.
    pub fn reads(&self) -> Vec<VarId> {
        match self {
            FactorKind::Copy { src, .. } => vec![*src],
            FactorKind::Const { .. } => vec![],
            FactorKind::Table { inputs, .. } => inputs
                .iter()
                .filter_map(|o| match o {
                    Operand::Var(v) => Some(*v),
                    Operand::Lit(_) => None,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Factor {
    pub kind: FactorKind,
    pub block: BlockId,
    /// Source line of the statement that produced the factor (0 if built by hand).
    pub line: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateNode {
    pub cond: VarId,
    /// One block per value of `cond`'s domain.
    pub branches: Vec<BlockId>,
    pub block: BlockId,
    pub line: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Item {
    Factor(FactorId),
    Gate(GateId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub id: BlockId,
    /// Owning gate and branch value; `None` for the root.
    pub parent: Option<(GateId, u32)>,
    /// Factors and nested gates in execution order.
    pub items: Vec<Item>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunctionTable {
    pub id: TableId,
    pub name: String,
    pub input_domains: Vec<u32>,
    pub output_domain: u32,
    /// Output per input tuple, row-major.
    pub entries: Vec<u32>,
}

impl FunctionTable {
    pub fn index(&self, tuple: &[u32]) -> usize {
        tuple.iter().zip(&self.input_domains).fold(0usize, |acc, (t, d)| acc * *d as usize + *t as usize)
    }

    pub fn lookup(&self, tuple: &[u32]) -> u32 {
        self.entries[self.index(tuple)]
    }

    /// Inverse of [`FunctionTable::index`].
    pub fn tuple(&self, mut index: usize) -> Vec<u32> {
        let mut t = vec![0; self.input_domains.len()];
        for k in (0..t.len()).rev() {
            let d = self.input_domains[k] as usize;
            t[k] = (index % d) as u32;
            index /= d;
        }
        t
    }
}

/// Declared array, kept so IO files and program listings can address cells
/// by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeclInfo {
    pub name: String,
    pub kind: VarKind,
    pub domain: u32,
    pub shape: Vec<usize>,
    pub first_var: VarId,
}

impl DeclInfo {
    pub fn num_cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn vars(&self) -> std::ops::Range<VarId> {
        self.first_var..self.first_var + self.num_cells()
    }
}

/// Gated factor graph produced by lowering a model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    pub name: String,
    pub constants: Vec<(String, i64)>,
    pub decls: Vec<DeclInfo>,
    pub vars: Vec<VarNode>,
    pub factors: Vec<Factor>,
    pub gates: Vec<GateNode>,
    pub blocks: Vec<Block>,
    pub tables: Vec<FunctionTable>,
}

impl Graph {
    pub fn vars_of_kind(&self, kind: VarKind) -> impl Iterator<Item = &VarNode> + '_ {
        self.vars.iter().filter(move |v| v.kind == kind)
    }

    pub fn param_vars(&self) -> Vec<VarId> {
        self.vars_of_kind(VarKind::Param).map(|v| v.id).collect()
    }

    pub fn decl(&self, name: &str) -> Option<&DeclInfo> {
        self.decls.iter().find(|d| d.name == name)
    }

    /// Product of the domain sizes of all Param cells.
    pub fn param_space_size(&self) -> BigUint {
        self.vars_of_kind(VarKind::Param).fold(BigUint::from(1u32), |acc, v| acc * BigUint::from(v.domain))
    }

    pub fn log10_param_space(&self) -> f64 {
        self.vars_of_kind(VarKind::Param).map(|v| (v.domain as f64).log10()).sum()
    }

    fn operand_label(&self, o: &Operand) -> String {
        match o {
            Operand::Var(v) => self.vars[*v].label(),
            Operand::Lit(x) => x.to_string(),
        }
    }

    pub fn factor_text(&self, f: &Factor) -> String {
        match &f.kind {
            FactorKind::Copy { src, dst } => format!("{} = {}", self.vars[*dst].label(), self.vars[*src].label()),
            FactorKind::Const { value, dst } => format!("{} = {value}", self.vars[*dst].label()),
            FactorKind::Table { table, inputs, dst } => {
                let args: Vec<String> = inputs.iter().map(|o| self.operand_label(o)).collect();
                format!("{} = {}({})", self.vars[*dst].label(), self.tables[*table].name, args.join(", "))
            }
        }
    }

    /// Deterministic textual listing: one factor per line, gates as
    /// indented blocks.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph {}", self.name);
        for (n, v) in &self.constants {
            let _ = writeln!(out, "const {n} = {v}");
        }
        for d in &self.decls {
            let shape: Vec<String> = d.shape.iter().map(|s| s.to_string()).collect();
            let _ = writeln!(
                out,
                "decl {} : {}({})[{}] vars {}..{}",
                d.name,
                d.kind.keyword(),
                d.domain,
                shape.join(", "),
                d.vars().start,
                d.vars().end
            );
        }
        for t in &self.tables {
            let doms: Vec<String> = t.input_domains.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(out, "table {} {} : ({}) -> {}", t.id, t.name, doms.join(", "), t.output_domain);
        }
        let _ = writeln!(out, "params {} log10(D) = {:.3}", self.param_vars().len(), self.log10_param_space());
        self.dump_block(&mut out, ROOT, 0);
        out
    }

    fn dump_block(&self, out: &mut String, block: BlockId, depth: usize) {
        let pad = "  ".repeat(depth);
        for item in &self.blocks[block].items {
            match *item {
                Item::Factor(f) => {
                    let _ = writeln!(out, "{pad}f{f}: {}", self.factor_text(&self.factors[f]));
                }
                Item::Gate(g) => {
                    let gate = &self.gates[g];
                    let _ = writeln!(out, "{pad}gate g{g} on {}:", self.vars[gate.cond].label());
                    for (b, blk) in gate.branches.iter().enumerate() {
                        let _ = writeln!(out, "{pad}  case {b}:");
                        self.dump_block(out, *blk, depth + 2);
                    }
                }
            }
        }
    }
}

/// Incremental graph construction; used by lowering and by tests that
/// need hand-made graphs.
#[derive(Clone, Debug)]
pub struct GraphBuilder {
    graph: Graph,
}

impl GraphBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        GraphBuilder {
            graph: Graph {
                name: name.into(),
                constants: Vec::new(),
                decls: Vec::new(),
                vars: Vec::new(),
                factors: Vec::new(),
                gates: Vec::new(),
                blocks: vec![Block { id: ROOT, parent: None, items: Vec::new() }],
                tables: Vec::new(),
            },
        }
    }

    pub fn constants(&mut self, constants: Vec<(String, i64)>) -> &mut Self {
        self.graph.constants = constants;
        self
    }

    /// Declare an array of cells; returns the id of the first cell.
    pub fn declare(&mut self, name: &str, kind: VarKind, domain: u32, shape: &[usize]) -> VarId {
        let first = self.graph.vars.len();
        let total: usize = shape.iter().product();
        for k in 0..total {
            let mut idx = vec![0; shape.len()];
            let mut rem = k;
            for d in (0..shape.len()).rev() {
                idx[d] = rem % shape[d];
                rem /= shape[d];
            }
            let id = self.graph.vars.len();
            self.graph.vars.push(VarNode { id, domain, kind, origin: (name.to_string(), idx) });
        }
        self.graph.decls.push(DeclInfo { name: name.to_string(), kind, domain, shape: shape.to_vec(), first_var: first });
        first
    }

    pub fn scalar(&mut self, name: &str, kind: VarKind, domain: u32) -> VarId {
        self.declare(name, kind, domain, &[])
    }

    pub fn table(&mut self, name: &str, input_domains: Vec<u32>, output_domain: u32, entries: Vec<u32>) -> TableId {
        let id = self.graph.tables.len();
        self.graph.tables.push(FunctionTable { id, name: name.to_string(), input_domains, output_domain, entries });
        id
    }

    pub fn factor(&mut self, block: BlockId, kind: FactorKind, line: u32) -> FactorId {
        let id = self.graph.factors.len();
        self.graph.factors.push(Factor { kind, block, line });
        self.graph.blocks[block].items.push(Item::Factor(id));
        id
    }

    pub fn copy(&mut self, block: BlockId, src: VarId, dst: VarId) -> FactorId {
        self.factor(block, FactorKind::Copy { src, dst }, 0)
    }

    pub fn constant(&mut self, block: BlockId, value: u32, dst: VarId) -> FactorId {
        self.factor(block, FactorKind::Const { value, dst }, 0)
    }

    pub fn apply(&mut self, block: BlockId, table: TableId, inputs: Vec<Operand>, dst: VarId) -> FactorId {
        self.factor(block, FactorKind::Table { table, inputs, dst }, 0)
    }

    /// Open a gate on `cond`; returns the gate id and one block per value.
    pub fn gate(&mut self, block: BlockId, cond: VarId, line: u32) -> (GateId, Vec<BlockId>) {
        let id = self.graph.gates.len();
        let domain = self.graph.vars[cond].domain;
        let mut branches = Vec::with_capacity(domain as usize);
        for b in 0..domain {
            let bid = self.graph.blocks.len();
            self.graph.blocks.push(Block { id: bid, parent: Some((id, b)), items: Vec::new() });
            branches.push(bid);
        }
        self.graph.gates.push(GateNode { cond, branches: branches.clone(), block, line });
        self.graph.blocks[block].items.push(Item::Gate(id));
        (id, branches)
    }

    pub fn num_vars(&self) -> usize {
        self.graph.vars.len()
    }

    pub fn num_factors(&self) -> usize {
        self.graph.factors.len()
    }

    pub fn finish(self) -> Graph {
        self.graph
    }
}
