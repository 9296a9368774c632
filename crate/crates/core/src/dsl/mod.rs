//! Model language front end: lexing, parsing, constant resolution and
//! static checking.
//!
//! A model is a small indentation-scoped language. Constants are plain
//! assignments, variables are declared with one of `Param`, `Var`, `Input`
//! or `Output`, and the body is made of `set_to` writes, constant-bounded
//! `for` loops, compile-time `if`s and `with` gates, the only way to branch
//! on a runtime value.
//!
//! ```
//! use synthkit::dsl::{compile, ModelSource};
//!
//! let src = ModelSource::new("tiny", "p = Param(2)\nout = Output(2)\nout.set_to(p)\n");
//! let model = compile(&src).unwrap();
//! assert_eq!(model.decls.len(), 2);
//! ```

pub mod ast;
pub mod check;
pub mod diag;
pub mod eval;
pub mod lexer;
pub mod parser;
pub mod pretty;
pub mod resolve;

use std::collections::BTreeMap;

pub use ast::{Ast, Expr, ExprKind, FnDef, Ref, Span, Stmt, VarDecl, VarKind};
pub use check::{check, TypedDecl, TypedFn, TypedModel};
pub use diag::{Diagnostic, Diagnostics, Severity};
pub use parser::parse;
pub use pretty::pretty;
pub use resolve::resolve_constants;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSource {
    pub text: String,
    pub name: String,
    pub const_overrides: BTreeMap<String, i64>,
}

impl ModelSource {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        ModelSource { text: text.into(), name: name.into(), const_overrides: BTreeMap::new() }
    }

    pub fn with_override(mut self, name: impl Into<String>, value: i64) -> Self {
        self.const_overrides.insert(name.into(), value);
        self
    }
}

/// Parse, resolve constants and check in one go.
pub fn compile(src: &ModelSource) -> Result<TypedModel, Diagnostics> {
    let ast = parse(src)?;
    let (resolved, warnings) = resolve_constants(&ast, &src.const_overrides)?;
    let mut model = check(&resolved)?;
    let mut all = warnings;
    all.append(&mut model.warnings);
    model.warnings = all;
    Ok(model)
}
