//! Integer evaluation of compile-time expressions and function bodies.

use super::ast::*;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EvalError {
    Unbound(String, Span),
    /// The expression mentions a runtime variable or call.
    NotConstant(Span),
    DivByZero(Span),
    Overflow(Span),
}

impl EvalError {
    pub fn span(&self) -> Span {
        match self {
            EvalError::Unbound(_, s) | EvalError::NotConstant(s) | EvalError::DivByZero(s) | EvalError::Overflow(s) => *s,
        }
    }
}

/// Anything that can resolve a bare name to an integer.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<i64>;
}

impl Env for [(String, i64)] {
    fn lookup(&self, name: &str) -> Option<i64> {
        self.iter().rev().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

impl Env for Vec<(String, i64)> {
    fn lookup(&self, name: &str) -> Option<i64> {
        self.as_slice().lookup(name)
    }
}

impl<F: Fn(&str) -> Option<i64>> Env for F {
    fn lookup(&self, name: &str) -> Option<i64> {
        self(name)
    }
}

pub fn floor_div(a: i64, b: i64) -> i64 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

pub fn floor_mod(a: i64, b: i64) -> i64 {
    a - b * floor_div(a, b)
}

pub fn eval<E: Env + ?Sized>(e: &Expr, env: &E) -> Result<i64, EvalError> {
    let ov = |v: Option<i64>| v.ok_or(EvalError::Overflow(e.span));
    match &e.kind {
        ExprKind::Int(v) => Ok(*v),
        ExprKind::Name(n) => env.lookup(n).ok_or_else(|| EvalError::Unbound(n.clone(), e.span)),
        ExprKind::Index(..) | ExprKind::Call(..) => Err(EvalError::NotConstant(e.span)),
        ExprKind::Unary(UnOp::Neg, x) => ov(eval(x, env)?.checked_neg()),
        ExprKind::Unary(UnOp::Not, x) => Ok((eval(x, env)? == 0) as i64),
        ExprKind::Cond(then, cond, other) => {
            if eval(cond, env)? != 0 {
                eval(then, env)
            } else {
                eval(other, env)
            }
        }
        ExprKind::Binary(op, l, r) => {
            let a = eval(l, env)?;
            // short-circuit boolean operators
            match op {
                BinOp::And if a == 0 => return Ok(0),
                BinOp::Or if a != 0 => return Ok(1),
                _ => {}
            }
            let b = eval(r, env)?;
            Ok(match op {
                BinOp::Add => ov(a.checked_add(b))?,
                BinOp::Sub => ov(a.checked_sub(b))?,
                BinOp::Mul => ov(a.checked_mul(b))?,
                BinOp::FloorDiv | BinOp::Mod if b == 0 => return Err(EvalError::DivByZero(e.span)),
                BinOp::FloorDiv => floor_div(a, b),
                BinOp::Mod => floor_mod(a, b),
                BinOp::Eq => (a == b) as i64,
                BinOp::Ne => (a != b) as i64,
                BinOp::Lt => (a < b) as i64,
                BinOp::Le => (a <= b) as i64,
                BinOp::Gt => (a > b) as i64,
                BinOp::Ge => (a >= b) as i64,
                BinOp::And | BinOp::Or => (b != 0) as i64,
            })
        }
    }
}

/// Replace names bound in `env` by literals and fold every closed
/// subexpression. Names in `shadowed` are left untouched.
pub fn substitute<E: Env + ?Sized>(e: &Expr, env: &E, shadowed: &[String]) -> Expr {
    let kind = match &e.kind {
        ExprKind::Int(v) => ExprKind::Int(*v),
        ExprKind::Name(n) => match env.lookup(n) {
            Some(v) if !shadowed.contains(n) => ExprKind::Int(v),
            _ => ExprKind::Name(n.clone()),
        },
        ExprKind::Index(n, idx) => ExprKind::Index(n.clone(), idx.iter().map(|x| substitute(x, env, shadowed)).collect()),
        ExprKind::Call(n, args) => ExprKind::Call(n.clone(), args.iter().map(|x| substitute(x, env, shadowed)).collect()),
        ExprKind::Unary(op, x) => ExprKind::Unary(*op, Box::new(substitute(x, env, shadowed))),
        ExprKind::Binary(op, l, r) => {
            ExprKind::Binary(*op, Box::new(substitute(l, env, shadowed)), Box::new(substitute(r, env, shadowed)))
        }
        ExprKind::Cond(t, c, o) => ExprKind::Cond(
            Box::new(substitute(t, env, shadowed)),
            Box::new(substitute(c, env, shadowed)),
            Box::new(substitute(o, env, shadowed)),
        ),
    };
    let out = Expr::new(kind, e.span);
    if is_closed(&out) {
        let empty: &[(String, i64)] = &[];
        if let Ok(v) = eval(&out, empty) {
            return Expr::new(ExprKind::Int(v), e.span);
        }
    }
    out
}

fn is_closed(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) => true,
        ExprKind::Name(_) | ExprKind::Index(..) | ExprKind::Call(..) => false,
        ExprKind::Unary(_, x) => is_closed(x),
        ExprKind::Binary(_, l, r) => is_closed(l) && is_closed(r),
        ExprKind::Cond(t, c, o) => is_closed(t) && is_closed(c) && is_closed(o),
    }
}
