use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Render an [`Ast`] back to model source. Re-parsing the output yields a
/// structurally equal tree.
pub fn pretty(ast: &Ast) -> String {
    let mut out = String::new();
    for c in &ast.constants {
        let _ = writeln!(out, "{} = {}", c.name, expr(&c.value));
    }
    for d in &ast.decls {
        let _ = write!(out, "{} = {}({})", d.name, d.kind.keyword(), expr(&d.domain));
        if !d.shape.is_empty() {
            let _ = write!(out, "[{}]", list(&d.shape));
        }
        out.push('\n');
    }
    for f in &ast.functions {
        let _ = writeln!(
            out,
            "def {}({}) -> {} over ({}): return {}",
            f.name,
            f.args.join(", "),
            expr(&f.out_domain),
            list(&f.arg_domains),
            expr(&f.body)
        );
    }
    for s in &ast.body {
        stmt(&mut out, s, 0);
    }
    out
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match s {
        Stmt::SetTo { target, value, .. } => {
            let _ = writeln!(out, "{pad}{}.set_to({})", reference(target), expr(value));
        }
        Stmt::For { var, lo, hi, body, .. } => {
            let _ = writeln!(out, "{pad}for {var} in range({}, {}):", expr(lo), expr(hi));
            block(out, body, depth + 1);
        }
        Stmt::If { cond, then_body, else_body, .. } => {
            let _ = writeln!(out, "{pad}if {}:", expr(cond));
            block(out, then_body, depth + 1);
            if !else_body.is_empty() {
                let _ = writeln!(out, "{pad}else:");
                block(out, else_body, depth + 1);
            }
        }
        Stmt::With { scrutinee, name, body, .. } => {
            let _ = writeln!(out, "{pad}with {} as {name}:", reference(scrutinee));
            block(out, body, depth + 1);
        }
    }
}

fn block(out: &mut String, body: &[Stmt], depth: usize) {
    if body.is_empty() {
        // Parsed trees never contain empty blocks; the grammar has no `pass`.
        let _ = writeln!(out, "{}# empty", INDENT.repeat(depth));
        return;
    }
    for s in body {
        stmt(out, s, depth);
    }
}

pub fn reference(r: &Ref) -> String {
    if r.indices.is_empty() {
        r.name.clone()
    } else {
        format!("{}[{}]", r.name, list(&r.indices))
    }
}

fn list(items: &[Expr]) -> String {
    items.iter().map(expr).collect::<Vec<_>>().join(", ")
}

pub fn expr(e: &Expr) -> String {
    prec_expr(e, 0)
}

fn own_prec(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Cond(..) => 1,
        ExprKind::Binary(op, ..) => op.precedence(),
        ExprKind::Unary(UnOp::Not, _) => 4,
        ExprKind::Unary(UnOp::Neg, _) => 8,
        ExprKind::Int(v) if *v < 0 => 8,
        _ => 9,
    }
}

fn prec_expr(e: &Expr, required: u8) -> String {
    let text = match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Index(n, idx) => format!("{n}[{}]", list(idx)),
        ExprKind::Call(n, args) => format!("{n}({})", list(args)),
        ExprKind::Unary(UnOp::Neg, inner) => format!("-{}", prec_expr(inner, 8)),
        ExprKind::Unary(UnOp::Not, inner) => format!("not {}", prec_expr(inner, 4)),
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let left_req = if p == 5 { p + 1 } else { p };
            format!("{} {} {}", prec_expr(l, left_req), op.symbol(), prec_expr(r, p + 1))
        }
        ExprKind::Cond(then, cond, other) => {
            format!("{} if {} else {}", prec_expr(then, 2), prec_expr(cond, 2), prec_expr(other, 1))
        }
    };
    if own_prec(e) < required {
        format!("({text})")
    } else {
        text
    }
}
