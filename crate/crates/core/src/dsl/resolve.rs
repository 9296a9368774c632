use std::collections::BTreeMap;

use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use super::eval::{eval, substitute, EvalError};

/// Evaluate every constant (overrides win), substitute the values into the
/// tree and fold. Shapes, domains and loop bounds come out as literals; empty
/// loops are dropped with a warning.
pub fn resolve_constants(ast: &Ast, overrides: &BTreeMap<String, i64>) -> Result<(Ast, Vec<Diagnostic>), Diagnostics> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();

    for name in overrides.keys() {
        if !ast.constants.iter().any(|c| &c.name == name) {
            errors.push(Diagnostic::error(
                "unknown-override",
                Span::default(),
                format!("override `{name}` does not match any declared constant"),
            ));
        }
    }

    let mut env: Vec<(String, i64)> = Vec::new();
    let mut constants = Vec::new();
    for c in &ast.constants {
        let value = match overrides.get(&c.name) {
            Some(v) => Ok(*v),
            None => eval(&c.value, &env),
        };
        match value {
            Ok(v) => {
                env.push((c.name.clone(), v));
                constants.push(ConstDef { name: c.name.clone(), value: Expr::new(ExprKind::Int(v), c.value.span), span: c.span });
            }
            Err(e) => errors.push(eval_diag(&e, &format!("constant `{}`", c.name))),
        }
    }
    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }

    let literal = |e: &Expr, what: &str, errors: &mut Vec<Diagnostic>| -> Expr {
        let s = substitute(e, &env, &[]);
        if s.as_int().is_none() {
            let err = eval(&s, &env).err().unwrap_or(EvalError::NotConstant(e.span));
            errors.push(eval_diag(&err, what));
        }
        s
    };

    let mut decls = Vec::new();
    for d in &ast.decls {
        let domain = literal(&d.domain, &format!("domain of `{}`", d.name), &mut errors);
        let shape = d.shape.iter().map(|s| literal(s, &format!("shape of `{}`", d.name), &mut errors)).collect();
        decls.push(VarDecl { name: d.name.clone(), kind: d.kind, domain, shape, span: d.span });
    }

    let mut functions = Vec::new();
    for f in &ast.functions {
        let out_domain = literal(&f.out_domain, &format!("output domain of `{}`", f.name), &mut errors);
        let arg_domains =
            f.arg_domains.iter().map(|a| literal(a, &format!("argument domain of `{}`", f.name), &mut errors)).collect();
        let body = substitute(&f.body, &env, &f.args);
        functions.push(FnDef { name: f.name.clone(), args: f.args.clone(), arg_domains, out_domain, body, span: f.span });
    }

    let mut scope = Vec::new();
    let body = resolve_block(&ast.body, &env, &mut scope, &mut errors, &mut warnings);

    if !errors.is_empty() {
        return Err(Diagnostics(errors));
    }
    Ok((Ast { name: ast.name.clone(), constants, decls, functions, body }, warnings))
}

fn resolve_block(
    body: &[Stmt],
    env: &[(String, i64)],
    scope: &mut Vec<String>,
    errors: &mut Vec<Diagnostic>,
    warnings: &mut Vec<Diagnostic>,
) -> Vec<Stmt> {
    let mut out = Vec::new();
    for s in body {
        match s {
            Stmt::SetTo { target, value, span } => out.push(Stmt::SetTo {
                target: resolve_ref(target, env, scope),
                value: substitute(value, env, scope),
                span: *span,
            }),
            Stmt::For { var, lo, hi, body, span } => {
                let lo = substitute(lo, env, scope);
                let hi = substitute(hi, env, scope);
                let (Some(a), Some(b)) = (lo.as_int(), hi.as_int()) else {
                    errors.push(Diagnostic::error(
                        "loop-bound",
                        *span,
                        format!("bounds of loop over `{var}` must be compile-time constants"),
                    ));
                    continue;
                };
                if a > b {
                    errors.push(Diagnostic::error(
                        "negative-range",
                        *span,
                        format!("loop range({a}, {b}) over `{var}` is negative"),
                    ));
                    continue;
                }
                if a == b {
                    warnings.push(Diagnostic::warning(
                        "empty-range",
                        *span,
                        format!("loop range({a}, {b}) over `{var}` is empty; body dropped"),
                    ));
                    continue;
                }
                scope.push(var.clone());
                let body = resolve_block(body, env, scope, errors, warnings);
                scope.pop();
                out.push(Stmt::For { var: var.clone(), lo, hi, body, span: *span });
            }
            Stmt::If { cond, then_body, else_body, span } => {
                let cond = substitute(cond, env, scope);
                let then_body = resolve_block(then_body, env, scope, errors, warnings);
                let else_body = resolve_block(else_body, env, scope, errors, warnings);
                out.push(Stmt::If { cond, then_body, else_body, span: *span });
            }
            Stmt::With { scrutinee, name, body, span } => {
                let scrutinee = resolve_ref(scrutinee, env, scope);
                scope.push(name.clone());
                let body = resolve_block(body, env, scope, errors, warnings);
                scope.pop();
                out.push(Stmt::With { scrutinee, name: name.clone(), body, span: *span });
            }
        }
    }
    out
}

fn resolve_ref(r: &Ref, env: &[(String, i64)], scope: &[String]) -> Ref {
    Ref { name: r.name.clone(), indices: r.indices.iter().map(|i| substitute(i, env, scope)).collect(), span: r.span }
}

fn eval_diag(e: &EvalError, what: &str) -> Diagnostic {
    match e {
        EvalError::Unbound(n, s) => {
            Diagnostic::error("unresolved-constant", *s, format!("{what}: `{n}` is not a declared constant"))
        }
        EvalError::NotConstant(s) => {
            Diagnostic::error("unresolved-constant", *s, format!("{what} must be a compile-time constant"))
        }
        EvalError::DivByZero(s) => Diagnostic::error("div-by-zero", *s, format!("{what}: division by zero")),
        EvalError::Overflow(s) => Diagnostic::error("overflow", *s, format!("{what}: integer overflow")),
    }
}
