use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use super::eval::{eval, EvalError};

/// Upper bound on statement instances visited while checking; larger models
/// are rejected before lowering would blow past its own budget.
pub const CHECK_VISIT_LIMIT: usize = 20_000_000;
const MAX_TABLE_ENTRIES: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedDecl {
    pub name: String,
    pub kind: VarKind,
    pub domain: u32,
    pub shape: Vec<usize>,
    /// Dense id of the first cell; cells are laid out row-major in
    /// declaration order.
    pub first_cell: usize,
    pub span: Span,
}

impl TypedDecl {
    pub fn num_cells(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn cell(&self, index: &[usize]) -> usize {
        let mut off = 0;
        for (i, d) in index.iter().zip(&self.shape) {
            off = off * d + i;
        }
        self.first_cell + off
    }

    /// Inverse of [`TypedDecl::cell`].
    pub fn index_of(&self, cell: usize) -> Vec<usize> {
        let mut rem = cell - self.first_cell;
        let mut idx = vec![0; self.shape.len()];
        for (k, d) in self.shape.iter().enumerate().rev() {
            idx[k] = rem % d;
            rem /= d;
        }
        idx
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedFn {
    pub name: String,
    pub args: Vec<String>,
    pub arg_domains: Vec<u32>,
    pub out_domain: u32,
    pub body: Expr,
    /// Output for every argument tuple, row-major over `arg_domains`.
    pub table: Vec<u32>,
    pub span: Span,
}

impl TypedFn {
    pub fn eval(&self, args: &[i64]) -> Result<i64, EvalError> {
        let env: Vec<(String, i64)> = self.args.iter().cloned().zip(args.iter().copied()).collect();
        eval(&self.body, &env)
    }
}

/// A checked, constant-resolved model ready for lowering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedModel {
    pub name: String,
    pub constants: Vec<(String, i64)>,
    pub decls: Vec<TypedDecl>,
    pub functions: Vec<TypedFn>,
    pub body: Vec<Stmt>,
    pub warnings: Vec<Diagnostic>,
}

impl TypedModel {
    pub fn decl(&self, name: &str) -> Option<(usize, &TypedDecl)> {
        self.decls.iter().enumerate().find(|(_, d)| d.name == name)
    }

    pub fn function(&self, name: &str) -> Option<(usize, &TypedFn)> {
        self.functions.iter().enumerate().find(|(_, f)| f.name == name)
    }

    pub fn num_cells(&self) -> usize {
        self.decls.last().map(|d| d.first_cell + d.num_cells()).unwrap_or(0)
    }

    pub fn cell_decl(&self, cell: usize) -> &TypedDecl {
        self.decls.iter().rev().find(|d| d.first_cell <= cell).expect("cell id within model")
    }
}

pub(crate) enum RefError {
    Undeclared(String),
    NotVariable(String),
    Arity { name: String, expected: usize, found: usize },
    RuntimeIndex(String),
    OutOfRange { name: String, index: i64, dim: usize },
    Eval(EvalError),
}

impl RefError {
    pub(crate) fn diagnostic(&self, span: Span) -> Diagnostic {
        match self {
            RefError::Undeclared(n) => Diagnostic::error("undeclared", span, format!("`{n}` is not declared")),
            RefError::NotVariable(n) => {
                Diagnostic::error("not-variable", span, format!("`{n}` is not a declared variable"))
            }
            RefError::Arity { name, expected, found } => Diagnostic::error(
                "index-arity",
                span,
                format!("`{name}` has {expected} dimensions but is indexed with {found}"),
            ),
            RefError::RuntimeIndex(n) => Diagnostic::error(
                "runtime-index",
                span,
                format!("runtime index `{n}` must be introduced by a gate (`with {n} as name:`)"),
            ),
            RefError::OutOfRange { name, index, dim } => Diagnostic::error(
                "index-range",
                span,
                format!("index {index} out of range for dimension of size {dim} in `{name}`"),
            ),
            RefError::Eval(EvalError::DivByZero(_)) => Diagnostic::error("div-by-zero", span, "division by zero"),
            RefError::Eval(e) => Diagnostic::error("unresolved-constant", span, format!("cannot evaluate index: {e:?}")),
        }
    }
}

/// Resolve `name[indices]` to a cell id under the compile-time environment.
pub(crate) fn resolve_cell(model: &TypedModel, name: &str, indices: &[Expr], env: &[(String, i64)]) -> Result<usize, RefError> {
    let Some((_, decl)) = model.decl(name) else {
        return Err(if env.iter().any(|(n, _)| n == name) || model.function(name).is_some() {
            RefError::NotVariable(name.to_string())
        } else {
            RefError::Undeclared(name.to_string())
        });
    };
    if indices.len() != decl.shape.len() {
        return Err(RefError::Arity { name: name.to_string(), expected: decl.shape.len(), found: indices.len() });
    }
    let mut idx = Vec::with_capacity(indices.len());
    for (e, dim) in indices.iter().zip(&decl.shape) {
        let v = eval(e, env).map_err(|err| match err {
            EvalError::Unbound(n, _) if model.decl(&n).is_some() => RefError::RuntimeIndex(n),
            EvalError::NotConstant(_) => RefError::RuntimeIndex(first_runtime_name(e)),
            other => RefError::Eval(other),
        })?;
        if v < 0 || v as usize >= *dim {
            return Err(RefError::OutOfRange { name: name.to_string(), index: v, dim: *dim });
        }
        idx.push(v as usize);
    }
    Ok(decl.cell(&idx))
}

fn first_runtime_name(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Index(n, _) | ExprKind::Call(n, _) | ExprKind::Name(n) => n.clone(),
        ExprKind::Unary(_, x) => first_runtime_name(x),
        ExprKind::Binary(_, l, r) => {
            let l = first_runtime_name(l);
            if l.is_empty() {
                first_runtime_name(r)
            } else {
                l
            }
        }
        ExprKind::Cond(t, c, o) => [first_runtime_name(t), first_runtime_name(c), first_runtime_name(o)]
            .into_iter()
            .find(|s| !s.is_empty())
            .unwrap_or_default(),
        ExprKind::Int(_) => String::new(),
    }
}

/// How a right-hand side of `set_to` reads.
pub(crate) enum Rhs {
    Literal(i64),
    Cell(usize),
    Call { func: usize, args: Vec<Operand> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Operand {
    Literal(i64),
    Cell(usize),
}

pub(crate) fn classify_operand(model: &TypedModel, e: &Expr, env: &[(String, i64)]) -> Result<Operand, Diagnostic> {
    match &e.kind {
        ExprKind::Name(n) if model.decl(n).is_some() => {
            resolve_cell(model, n, &[], env).map(Operand::Cell).map_err(|err| err.diagnostic(e.span))
        }
        ExprKind::Index(n, idx) => {
            resolve_cell(model, n, idx, env).map(Operand::Cell).map_err(|err| err.diagnostic(e.span))
        }
        _ => match eval(e, env) {
            Ok(v) => Ok(Operand::Literal(v)),
            Err(EvalError::Unbound(n, s)) => Err(Diagnostic::error("undeclared", s, format!("`{n}` is not declared"))),
            Err(EvalError::DivByZero(s)) => Err(Diagnostic::error("div-by-zero", s, "division by zero")),
            Err(_) => Err(Diagnostic::error(
                "unsupported-rhs",
                e.span,
                "arithmetic on runtime values must go through a user-defined function",
            )),
        },
    }
}

pub(crate) fn classify_rhs(model: &TypedModel, e: &Expr, env: &[(String, i64)]) -> Result<Rhs, Diagnostic> {
    if let ExprKind::Call(f, args) = &e.kind {
        let Some((func, _)) = model.function(f) else {
            return Err(Diagnostic::error("undeclared", e.span, format!("function `{f}` is not defined")));
        };
        let args = args.iter().map(|a| classify_operand(model, a, env)).collect::<Result<Vec<_>, _>>()?;
        return Ok(Rhs::Call { func, args });
    }
    Ok(match classify_operand(model, e, env)? {
        Operand::Literal(v) => Rhs::Literal(v),
        Operand::Cell(c) => Rhs::Cell(c),
    })
}

/// Type-check a constant-resolved tree.
pub fn check(ast: &Ast) -> Result<TypedModel, Diagnostics> {
    let mut diags: Vec<Diagnostic> = Vec::new();
    let mut names: HashSet<&str> = HashSet::new();
    let mut constants = Vec::new();
    for c in &ast.constants {
        if !names.insert(&c.name) {
            diags.push(Diagnostic::error("duplicate", c.span, format!("`{}` is declared twice", c.name)));
        }
        match c.value.as_int() {
            Some(v) => constants.push((c.name.clone(), v)),
            None => diags.push(Diagnostic::error("unresolved-constant", c.span, "constants must be resolved before checking")),
        }
    }

    let mut decls = Vec::new();
    let mut next_cell = 0usize;
    for d in &ast.decls {
        if !names.insert(&d.name) {
            diags.push(Diagnostic::error("duplicate", d.span, format!("`{}` is declared twice", d.name)));
        }
        let domain = match d.domain.as_int() {
            Some(v) if v >= 1 && v <= u32::MAX as i64 => v as u32,
            Some(_) => {
                diags.push(Diagnostic::error("domain-size", d.domain.span, "domain size must be ≥ 1"));
                1
            }
            None => {
                diags.push(Diagnostic::error("unresolved-constant", d.domain.span, "domain size must be a constant"));
                1
            }
        };
        let mut shape = Vec::new();
        for s in &d.shape {
            match s.as_int() {
                Some(v) if v >= 1 => shape.push(v as usize),
                Some(v) => {
                    diags.push(Diagnostic::error("shape", s.span, format!("array dimension {v} must be ≥ 1")));
                    shape.push(1);
                }
                None => {
                    diags.push(Diagnostic::error("unresolved-constant", s.span, "array dimensions must be constants"));
                    shape.push(1);
                }
            }
        }
        let cells: usize = shape.iter().product();
        decls.push(TypedDecl { name: d.name.clone(), kind: d.kind, domain, shape, first_cell: next_cell, span: d.span });
        next_cell = next_cell.saturating_add(cells);
    }
    if next_cell > CHECK_VISIT_LIMIT {
        diags.push(Diagnostic::error("too-large", Span::default(), format!("model declares {next_cell} cells")));
        return Err(Diagnostics(diags));
    }

    let mut functions = Vec::new();
    for f in &ast.functions {
        if !names.insert(&f.name) {
            diags.push(Diagnostic::error("duplicate", f.span, format!("`{}` is declared twice", f.name)));
        }
        match check_function(f) {
            Ok(tf) => functions.push(tf),
            Err(d) => {
                diags.push(d);
                functions.push(TypedFn {
                    name: f.name.clone(),
                    args: f.args.clone(),
                    arg_domains: vec![1; f.args.len()],
                    out_domain: 1,
                    body: f.body.clone(),
                    table: vec![0; 1],
                    span: f.span,
                });
            }
        }
    }

    let mut model = TypedModel {
        name: ast.name.clone(),
        constants,
        decls,
        functions,
        body: ast.body.clone(),
        warnings: Vec::new(),
    };
    if diags.iter().any(|d| d.is_error()) {
        return Err(Diagnostics(diags));
    }

    let mut walker = Walker {
        model: &model,
        written: vec![None; next_cell],
        undo: Vec::new(),
        env: Vec::new(),
        diags: Vec::new(),
        seen: BTreeSet::new(),
        visits: 0,
    };
    walker.block(&model.body);
    for d in &model.decls {
        if d.kind != VarKind::Output {
            continue;
        }
        for cell in d.first_cell..d.first_cell + d.num_cells() {
            if walker.written[cell].is_none() {
                walker.report(Diagnostic::error(
                    "missing-write",
                    d.span,
                    format!("output {} is never written", cell_name(&model, cell)),
                ));
            }
        }
    }
    let errs = walker.diags;
    if errs.iter().any(|d| d.is_error()) {
        return Err(Diagnostics(errs));
    }
    model.warnings = errs;
    Ok(model)
}

fn check_function(f: &FnDef) -> Result<TypedFn, Diagnostic> {
    let mut arg_domains = Vec::new();
    for d in &f.arg_domains {
        match d.as_int() {
            Some(v) if v >= 1 => arg_domains.push(v as u32),
            _ => return Err(Diagnostic::error("domain-size", d.span, "argument domain must be a constant ≥ 1")),
        }
    }
    let out_domain = match f.out_domain.as_int() {
        Some(v) if v >= 1 => v as u32,
        _ => return Err(Diagnostic::error("domain-size", f.out_domain.span, "output domain must be a constant ≥ 1")),
    };
    let unique: HashSet<&String> = f.args.iter().collect();
    if unique.len() != f.args.len() {
        return Err(Diagnostic::error("duplicate", f.span, format!("function `{}` repeats an argument name", f.name)));
    }
    let total = arg_domains.iter().try_fold(1usize, |acc, d| acc.checked_mul(*d as usize));
    let total = match total {
        Some(t) if t <= MAX_TABLE_ENTRIES => t,
        _ => {
            return Err(Diagnostic::error(
                "too-large",
                f.span,
                format!("function `{}` has more than {MAX_TABLE_ENTRIES} argument tuples", f.name),
            ))
        }
    };
    let mut tf = TypedFn {
        name: f.name.clone(),
        args: f.args.clone(),
        arg_domains: arg_domains.clone(),
        out_domain,
        body: f.body.clone(),
        table: Vec::with_capacity(total),
        span: f.span,
    };
    let mut tuple = vec![0i64; arg_domains.len()];
    for _ in 0..total {
        let v = tf.eval(&tuple).map_err(|e| match e {
            EvalError::Unbound(n, s) => {
                Diagnostic::error("undeclared", s, format!("`{n}` is neither an argument nor a constant"))
            }
            EvalError::NotConstant(s) => {
                Diagnostic::error("unsupported", s, "function bodies may not index variables or call functions")
            }
            EvalError::DivByZero(s) => {
                Diagnostic::error("fn-range", s, format!("`{}` divides by zero at arguments {tuple:?}", f.name))
            }
            EvalError::Overflow(s) => Diagnostic::error("overflow", s, "integer overflow"),
        })?;
        if v < 0 || v >= out_domain as i64 {
            return Err(Diagnostic::error(
                "fn-range",
                f.body.span,
                format!("`{}` returns {v} at arguments {tuple:?}, outside [0, {out_domain})", f.name),
            ));
        }
        tf.table.push(v as u32);
        for k in (0..tuple.len()).rev() {
            tuple[k] += 1;
            if tuple[k] < arg_domains[k] as i64 {
                break;
            }
            tuple[k] = 0;
        }
    }
    Ok(tf)
}

pub(crate) fn cell_name(model: &TypedModel, cell: usize) -> String {
    let d = model.cell_decl(cell);
    if d.shape.is_empty() {
        format!("`{}`", d.name)
    } else {
        let idx: Vec<String> = d.index_of(cell).iter().map(|i| i.to_string()).collect();
        format!("`{}[{}]`", d.name, idx.join(", "))
    }
}

struct Walker<'a> {
    model: &'a TypedModel,
    /// Span of the statement that wrote each cell on the current path.
    written: Vec<Option<Span>>,
    undo: Vec<usize>,
    env: Vec<(String, i64)>,
    diags: Vec<Diagnostic>,
    seen: BTreeSet<(&'static str, u32, u32)>,
    visits: usize,
}

impl Walker<'_> {
    fn report(&mut self, d: Diagnostic) {
        // one report per (code, location): loop unrolling would repeat it
        if self.seen.insert((d.code, d.span.line, d.span.col_start)) {
            self.diags.push(d);
        }
    }

    fn shadows(&self, name: &str) -> bool {
        self.model.decl(name).is_some()
            || self.model.function(name).is_some()
            || self.model.constants.iter().any(|(n, _)| n == name)
            || self.env.iter().any(|(n, _)| n == name)
    }

    fn readable(&mut self, cell: usize, span: Span) {
        let kind = self.model.cell_decl(cell).kind;
        if matches!(kind, VarKind::Param | VarKind::Input) {
            return;
        }
        if self.written[cell].is_none() {
            let msg = format!("{} is read before it is written on this path", cell_name(self.model, cell));
            self.report(Diagnostic::error("missing-write", span, msg));
        }
    }

    fn domain(&self, cell: usize) -> u32 {
        self.model.cell_decl(cell).domain
    }

    fn block(&mut self, body: &[Stmt]) {
        for s in body {
            self.visits += 1;
            if self.visits > CHECK_VISIT_LIMIT {
                self.report(Diagnostic::error("too-large", s.span(), "model is too large to check"));
                return;
            }
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::SetTo { target, value, span } => self.set_to(target, value, *span),
            Stmt::For { var, lo, hi, body, span } => {
                if self.shadows(var) {
                    self.report(Diagnostic::error("shadowing", *span, format!("loop variable `{var}` shadows another name")));
                    return;
                }
                let (Some(lo), Some(hi)) = (lo.as_int(), hi.as_int()) else {
                    self.report(Diagnostic::error("loop-bound", *span, "loop bounds must be constants"));
                    return;
                };
                for i in lo..hi {
                    self.env.push((var.clone(), i));
                    self.block(body);
                    self.env.pop();
                }
            }
            Stmt::If { cond, then_body, else_body, span } => match eval(cond, &self.env) {
                Ok(v) => {
                    if v != 0 {
                        self.block(then_body)
                    } else {
                        self.block(else_body)
                    }
                }
                Err(EvalError::Unbound(n, _)) if self.model.decl(&n).is_none() => {
                    self.report(Diagnostic::error("undeclared", *span, format!("`{n}` is not declared")))
                }
                Err(_) => self.report(Diagnostic::error(
                    "runtime-if",
                    *span,
                    "`if` conditions must be compile-time; use `with` for runtime branching",
                )),
            },
            Stmt::With { scrutinee, name, body, span } => {
                let cell = match resolve_cell(self.model, &scrutinee.name, &scrutinee.indices, &self.env) {
                    Ok(c) => c,
                    Err(e) => {
                        self.report(e.diagnostic(scrutinee.span));
                        return;
                    }
                };
                self.readable(cell, scrutinee.span);
                if self.shadows(name) {
                    self.report(Diagnostic::error("shadowing", *span, format!("gate name `{name}` shadows another name")));
                    return;
                }
                let domain = self.domain(cell);
                let mark = self.undo.len();
                let mut branch_writes: Vec<BTreeMap<usize, Span>> = Vec::with_capacity(domain as usize);
                for b in 0..domain {
                    self.env.push((name.clone(), b as i64));
                    self.block(body);
                    self.env.pop();
                    let mut writes = BTreeMap::new();
                    for c in self.undo.drain(mark..) {
                        writes.insert(c, self.written[c].take().expect("undo entry"));
                    }
                    branch_writes.push(writes);
                }
                let all: BTreeSet<usize> = branch_writes.iter().flat_map(|w| w.keys().copied()).collect();
                for (b, writes) in branch_writes.iter().enumerate() {
                    if let Some(missing) = all.iter().find(|c| !writes.contains_key(c)) {
                        let msg = format!(
                            "{} is written in some branches but not in branch {b} of the gate on {}",
                            cell_name(self.model, *missing),
                            cell_name(self.model, cell)
                        );
                        self.report(Diagnostic::error("missing-write", *span, msg));
                    }
                }
                for c in all {
                    let sp = branch_writes.iter().find_map(|w| w.get(&c)).copied();
                    self.written[c] = sp;
                    self.undo.push(c);
                }
            }
        }
    }

    fn set_to(&mut self, target: &Ref, value: &Expr, span: Span) {
        let cell = match resolve_cell(self.model, &target.name, &target.indices, &self.env) {
            Ok(c) => c,
            Err(e) => {
                self.report(e.diagnostic(target.span));
                return;
            }
        };
        let decl = self.model.cell_decl(cell);
        match decl.kind {
            VarKind::Input => {
                let msg = format!("cannot write to Input {}", cell_name(self.model, cell));
                self.report(Diagnostic::error("write-input", span, msg));
                return;
            }
            VarKind::Param => {
                let msg = format!("cannot write to Param {}", cell_name(self.model, cell));
                self.report(Diagnostic::error("write-param", span, msg));
                return;
            }
            _ => {}
        }
        let target_domain = decl.domain;
        let rhs = match classify_rhs(self.model, value, &self.env) {
            Ok(r) => r,
            Err(d) => {
                self.report(d);
                return;
            }
        };
        match rhs {
            Rhs::Literal(v) => {
                if v < 0 || v >= target_domain as i64 {
                    self.report(Diagnostic::error(
                        "domain-mismatch",
                        value.span,
                        format!("value {v} is outside the domain [0, {target_domain}) of the target"),
                    ));
                }
            }
            Rhs::Cell(src) => {
                self.readable(src, value.span);
                let d = self.domain(src);
                if d != target_domain {
                    self.report(Diagnostic::error(
                        "domain-mismatch",
                        value.span,
                        format!("cannot assign a domain-{d} value to a domain-{target_domain} variable"),
                    ));
                }
            }
            Rhs::Call { func, args } => {
                let f = &self.model.functions[func];
                if args.len() != f.args.len() {
                    self.report(Diagnostic::error(
                        "arity",
                        value.span,
                        format!("`{}` takes {} arguments, got {}", f.name, f.args.len(), args.len()),
                    ));
                    return;
                }
                if f.out_domain != target_domain {
                    self.report(Diagnostic::error(
                        "domain-mismatch",
                        value.span,
                        format!(
                            "`{}` returns a domain-{} value but the target has domain {target_domain}",
                            f.name, f.out_domain
                        ),
                    ));
                }
                let arg_domains = f.arg_domains.clone();
                let fname = f.name.clone();
                for (k, (a, want)) in args.iter().zip(arg_domains).enumerate() {
                    match *a {
                        Operand::Literal(v) if v < 0 || v >= want as i64 => self.report(Diagnostic::error(
                            "domain-mismatch",
                            value.span,
                            format!("argument {k} of `{fname}` is {v}, outside [0, {want})"),
                        )),
                        Operand::Literal(_) => {}
                        Operand::Cell(c) => {
                            self.readable(c, value.span);
                            let d = self.domain(c);
                            if d != want {
                                self.report(Diagnostic::error(
                                    "domain-mismatch",
                                    value.span,
                                    format!("argument {k} of `{fname}` has domain {d}, expected {want}"),
                                ));
                            }
                        }
                    }
                }
            }
        }
        if let Some(prev) = self.written[cell] {
            let msg = format!(
                "{} is written twice on one control path (previous write at line {})",
                cell_name(self.model, cell),
                prev.line
            );
            self.report(Diagnostic::error("double-write", span, msg));
            return;
        }
        self.written[cell] = Some(span);
        self.undo.push(cell);
    }
}
