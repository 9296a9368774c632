use super::ast::*;
use super::diag::{Diagnostic, Diagnostics};
use super::lexer::{tokenize, Tok, Token};
use super::ModelSource;

const UNSUPPORTED: &[&str] = &[
    "while", "elif", "import", "from", "class", "lambda", "try", "except", "break", "continue", "pass", "global",
    "yield", "del", "assert", "print",
];

const RESERVED: &[&str] = &["for", "in", "range", "if", "else", "with", "as", "def", "return", "over", "and", "or", "not"];

/// Parse model source into an unchecked syntax tree.
pub fn parse(src: &ModelSource) -> Result<Ast, Diagnostics> {
    if src.text.trim().is_empty() {
        return Err(Diagnostics::single(Diagnostic::error("syntax", Span::new(1, 1, 1), "model source is empty")));
    }
    let tokens = tokenize(&src.text).map_err(Diagnostics::single)?;
    let mut p = Parser { toks: tokens, pos: 0 };
    let mut ast = Ast { name: src.name.clone(), ..Ast::default() };
    p.parse_module(&mut ast).map_err(Diagnostics::single)?;
    Ok(ast)
}

/// Parse a standalone expression (used for `--const` style values and tests).
pub fn parse_expr(text: &str) -> Result<Expr, Diagnostic> {
    let mut p = Parser { toks: tokenize(text)?, pos: 0 };
    let e = p.expr()?;
    p.skip_newlines();
    p.expect(&Tok::Eof, "end of expression")?;
    Ok(e)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == word)
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: &Tok, what: &str) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(what))
        }
    }

    fn expect_keyword(&mut self, word: &str) -> PResult<Span> {
        if self.at_ident(word) {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&format!("`{word}`")))
        }
    }

    fn unexpected(&self, what: &str) -> Diagnostic {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Newline => "end of line".to_string(),
            Tok::Indent => "indentation".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::Eof => "end of file".to_string(),
            other => format!("{other:?}"),
        };
        Diagnostic::error("syntax", self.span(), format!("expected {what}, found {found}"))
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let sp = self.bump().span;
                Ok((s, sp))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn skip_newlines(&mut self) {
        while self.eat(&Tok::Newline) {}
    }

    fn end_of_line(&mut self) -> PResult<()> {
        if self.eat(&Tok::Newline) || *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.unexpected("end of line"))
        }
    }

    fn parse_module(&mut self, ast: &mut Ast) -> PResult<()> {
        loop {
            self.skip_newlines();
            match self.peek() {
                Tok::Eof => return Ok(()),
                Tok::Indent => return Err(Diagnostic::error("syntax", self.span(), "unexpected indentation")),
                _ => {}
            }
            if self.at_ident("def") {
                let f = self.fn_def()?;
                ast.functions.push(f);
                continue;
            }
            if let (Tok::Ident(name), Tok::Assign) = (self.peek().clone(), self.peek_at(1).clone()) {
                if !RESERVED.contains(&name.as_str()) {
                    self.declaration(ast)?;
                    continue;
                }
            }
            let s = self.stmt()?;
            ast.body.push(s);
        }
    }

    fn declaration(&mut self, ast: &mut Ast) -> PResult<()> {
        let (name, start) = self.ident("a name")?;
        self.expect(&Tok::Assign, "`=`")?;
        let kind = match self.peek() {
            Tok::Ident(k) if matches!(self.peek_at(1), Tok::LParen) => VarKind::from_keyword(k),
            _ => None,
        };
        match kind {
            Some(kind) => {
                self.bump();
                self.expect(&Tok::LParen, "`(`")?;
                let domain = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                if let Some(v) = domain.as_int() {
                    if v < 1 {
                        return Err(Diagnostic::error("domain-size", domain.span, "domain size must be ≥ 1"));
                    }
                }
                let mut shape = Vec::new();
                if self.eat(&Tok::LBracket) {
                    shape = self.expr_list(&Tok::RBracket)?;
                    self.expect(&Tok::RBracket, "`]`")?;
                }
                let span = Span::new(start.line, start.col_start, self.prev_span().col_end);
                self.end_of_line()?;
                ast.decls.push(VarDecl { name, kind, domain, shape, span });
            }
            None => {
                let value = self.expr()?;
                let span = Span::new(start.line, start.col_start, self.prev_span().col_end);
                self.end_of_line()?;
                ast.constants.push(ConstDef { name, value, span });
            }
        }
        Ok(())
    }

    fn fn_def(&mut self) -> PResult<FnDef> {
        let start = self.expect_keyword("def")?;
        let (name, _) = self.ident("function name")?;
        self.expect(&Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.ident("argument name")?.0);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen, "`)`")?;
        self.expect(&Tok::Arrow, "`->`")?;
        let out_domain = self.expr()?;
        self.expect_keyword("over")?;
        self.expect(&Tok::LParen, "`(`")?;
        let arg_domains = self.expr_list(&Tok::RParen)?;
        self.expect(&Tok::RParen, "`)`")?;
        self.expect(&Tok::Colon, "`:`")?;
        let span = Span::new(start.line, start.col_start, self.prev_span().col_end);
        let indented = self.eat(&Tok::Newline);
        if indented {
            self.expect(&Tok::Indent, "indented function body")?;
        }
        if !self.at_ident("return") {
            return Err(Diagnostic::error(
                "unsupported",
                self.span(),
                "function bodies must be a single `return <expr>`",
            ));
        }
        self.bump();
        let body = self.expr()?;
        self.end_of_line()?;
        if indented {
            self.skip_newlines();
            self.expect(&Tok::Dedent, "end of function body")?;
        }
        if args.len() != arg_domains.len() {
            return Err(Diagnostic::error(
                "syntax",
                span,
                format!("function `{name}` has {} arguments but {} argument domains", args.len(), arg_domains.len()),
            ));
        }
        Ok(FnDef { name, args, arg_domains, out_domain, body, span })
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(&Tok::Colon, "`:`")?;
        self.expect(&Tok::Newline, "end of line after `:`")?;
        self.skip_newlines();
        self.expect(&Tok::Indent, "an indented block")?;
        let mut body = Vec::new();
        loop {
            self.skip_newlines();
            if self.eat(&Tok::Dedent) || *self.peek() == Tok::Eof {
                break;
            }
            if self.at_ident("def") {
                return Err(Diagnostic::error("syntax", self.span(), "functions must be defined at top level"));
            }
            if let (Tok::Ident(_), Tok::Assign) = (self.peek(), self.peek_at(1)) {
                return Err(Diagnostic::error(
                    "syntax",
                    self.span(),
                    "declarations and constants must be at top level",
                ));
            }
            body.push(self.stmt()?);
        }
        Ok(body)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span();
        if let Tok::Ident(word) = self.peek().clone() {
            if UNSUPPORTED.contains(&word.as_str()) {
                return Err(Diagnostic::error("unsupported", start, format!("unsupported construct `{word}`")));
            }
            match word.as_str() {
                "for" => {
                    self.bump();
                    let (var, _) = self.ident("loop variable")?;
                    self.expect_keyword("in")?;
                    self.expect_keyword("range")?;
                    self.expect(&Tok::LParen, "`(`")?;
                    let args = self.expr_list(&Tok::RParen)?;
                    self.expect(&Tok::RParen, "`)`")?;
                    let (lo, hi) = match args.len() {
                        1 => (Expr::new(ExprKind::Int(0), start), args.into_iter().next().unwrap()),
                        2 => {
                            let mut it = args.into_iter();
                            (it.next().unwrap(), it.next().unwrap())
                        }
                        _ => return Err(Diagnostic::error("unsupported", start, "range takes one or two arguments")),
                    };
                    let span = Span::new(start.line, start.col_start, self.span().col_end);
                    let body = self.block()?;
                    return Ok(Stmt::For { var, lo, hi, body, span });
                }
                "if" => {
                    self.bump();
                    let cond = self.expr()?;
                    let span = Span::new(start.line, start.col_start, self.span().col_end);
                    let then_body = self.block()?;
                    self.skip_newlines();
                    let else_body = if self.at_ident("else") {
                        self.bump();
                        self.block()?
                    } else if self.at_ident("elif") {
                        return Err(Diagnostic::error("unsupported", self.span(), "unsupported construct `elif`"));
                    } else {
                        Vec::new()
                    };
                    return Ok(Stmt::If { cond, then_body, else_body, span });
                }
                "with" => {
                    self.bump();
                    let scrutinee = self.reference()?;
                    self.expect_keyword("as")?;
                    let (name, _) = self.ident("bound name")?;
                    let span = Span::new(start.line, start.col_start, self.span().col_end);
                    let body = self.block()?;
                    return Ok(Stmt::With { scrutinee, name, body, span });
                }
                "else" => return Err(Diagnostic::error("syntax", start, "`else` without matching `if`")),
                "return" => return Err(Diagnostic::error("syntax", start, "`return` outside a function")),
                _ => {}
            }
        }
        let target = self.reference()?;
        self.expect(&Tok::Dot, "`.set_to(...)`")?;
        match self.peek() {
            Tok::Ident(m) if m == "set_to" => {
                self.bump();
            }
            Tok::Ident(m) => {
                let m = m.clone();
                return Err(Diagnostic::error("unsupported", self.span(), format!("unsupported method `{m}`")));
            }
            _ => return Err(self.unexpected("`set_to`")),
        }
        self.expect(&Tok::LParen, "`(`")?;
        let value = self.expr()?;
        self.expect(&Tok::RParen, "`)`")?;
        let span = Span::new(start.line, start.col_start, self.prev_span().col_end);
        self.end_of_line()?;
        Ok(Stmt::SetTo { target, value, span })
    }

    fn reference(&mut self) -> PResult<Ref> {
        let (name, sp) = self.ident("a variable reference")?;
        let mut indices = Vec::new();
        if self.eat(&Tok::LBracket) {
            indices = self.expr_list(&Tok::RBracket)?;
            self.expect(&Tok::RBracket, "`]`")?;
        }
        Ok(Ref { name, indices, span: Span::new(sp.line, sp.col_start, self.prev_span().col_end) })
    }

    fn expr_list(&mut self, close: &Tok) -> PResult<Vec<Expr>> {
        let mut out = Vec::new();
        if self.peek() == close {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if !self.eat(&Tok::Comma) || self.peek() == close {
                break;
            }
        }
        Ok(out)
    }

    fn expr(&mut self) -> PResult<Expr> {
        let then = self.or_expr()?;
        if self.at_ident("if") {
            self.bump();
            let cond = self.or_expr()?;
            self.expect_keyword("else")?;
            let otherwise = self.expr()?;
            let span = join(then.span, otherwise.span);
            return Ok(Expr::new(ExprKind::Cond(Box::new(then), Box::new(cond), Box::new(otherwise)), span));
        }
        Ok(then)
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.at_ident("or") {
            self.bump();
            let rhs = self.and_expr()?;
            lhs = binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.at_ident("and") {
            self.bump();
            let rhs = self.not_expr()?;
            lhs = binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.at_ident("not") {
            let sp = self.bump().span;
            let inner = self.not_expr()?;
            let span = join(sp, inner.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(inner)), span));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.arith()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.arith()?;
        if matches!(self.peek(), Tok::EqEq | Tok::NotEq | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge) {
            return Err(Diagnostic::error("unsupported", self.span(), "chained comparisons are not supported"));
        }
        Ok(binary(op, lhs, rhs))
    }

    fn arith(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::SlashSlash => BinOp::FloorDiv,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            let sp = self.bump().span;
            let inner = self.unary()?;
            let span = join(sp, inner.span);
            return Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(inner)), span));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(v), sp))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(word) if UNSUPPORTED.contains(&word.as_str()) => {
                Err(Diagnostic::error("unsupported", sp, format!("unsupported construct `{word}`")))
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident("an expression")?;
                if self.eat(&Tok::LParen) {
                    let args = self.expr_list(&Tok::RParen)?;
                    self.expect(&Tok::RParen, "`)`")?;
                    Ok(Expr::new(ExprKind::Call(name, args), join(sp, self.prev_span())))
                } else if self.eat(&Tok::LBracket) {
                    let idx = self.expr_list(&Tok::RBracket)?;
                    self.expect(&Tok::RBracket, "`]`")?;
                    Ok(Expr::new(ExprKind::Index(name, idx), join(sp, self.prev_span())))
                } else {
                    Ok(Expr::new(ExprKind::Name(name), sp))
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}

fn join(a: Span, b: Span) -> Span {
    if a.line == b.line {
        Span::new(a.line, a.col_start, b.col_end)
    } else {
        a
    }
}

fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
    let span = join(lhs.span, rhs.span);
    Expr::new(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span)
}
