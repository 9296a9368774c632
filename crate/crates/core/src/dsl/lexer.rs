use super::ast::Span;
use super::diag::Diagnostic;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Assign,
    Arrow,
    Plus,
    Minus,
    Star,
    SlashSlash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

/// Splits source into tokens, turning leading whitespace into
/// `Indent`/`Dedent` markers. Newlines inside brackets are ignored.
pub fn tokenize(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut out = Vec::new();
    let mut indents: Vec<usize> = vec![0];
    let mut depth: i32 = 0;

    for (lineno, raw) in src.lines().enumerate() {
        let line_no = lineno as u32 + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0usize;

        if depth == 0 {
            let mut width = 0usize;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                if chars[i] == '\t' {
                    return Err(Diagnostic::error(
                        "syntax",
                        Span::new(line_no, i as u32 + 1, i as u32 + 2),
                        "tab characters are not allowed in indentation",
                    ));
                }
                width += 1;
                i += 1;
            }
            if i >= chars.len() || chars[i] == '#' {
                continue;
            }
            let current = *indents.last().unwrap();
            let span = Span::new(line_no, 1, width as u32 + 1);
            if width > current {
                indents.push(width);
                out.push(Token { tok: Tok::Indent, span });
            } else {
                while width < *indents.last().unwrap() {
                    indents.pop();
                    out.push(Token { tok: Tok::Dedent, span });
                }
                if width != *indents.last().unwrap() {
                    return Err(Diagnostic::error("syntax", span, "inconsistent dedent"));
                }
            }
        }

        while i < chars.len() {
            let c = chars[i];
            let col = i as u32 + 1;
            if c == ' ' || c == '\t' || c == '\r' {
                i += 1;
                continue;
            }
            if c == '#' {
                break;
            }
            if c.is_ascii_digit() {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let span = Span::new(line_no, col, i as u32 + 1);
                let v = text
                    .parse::<i64>()
                    .map_err(|_| Diagnostic::error("syntax", span, format!("integer literal `{text}` too large")))?;
                out.push(Token { tok: Tok::Int(v), span });
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Token { tok: Tok::Ident(text), span: Span::new(line_no, col, i as u32 + 1) });
                continue;
            }
            let next = chars.get(i + 1).copied();
            let (tok, len) = match (c, next) {
                ('/', Some('/')) => (Tok::SlashSlash, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('!', Some('=')) => (Tok::NotEq, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('.', _) => (Tok::Dot, 1),
                ('=', _) => (Tok::Assign, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('%', _) => (Tok::Percent, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                _ => {
                    return Err(Diagnostic::error(
                        "syntax",
                        Span::new(line_no, col, col + 1),
                        format!("unexpected character `{c}`"),
                    ))
                }
            };
            match tok {
                Tok::LParen | Tok::LBracket => depth += 1,
                Tok::RParen | Tok::RBracket => depth -= 1,
                _ => {}
            }
            out.push(Token { tok, span: Span::new(line_no, col, col + len as u32) });
            i += len;
        }

        if depth == 0 {
            let end = chars.len() as u32 + 1;
            out.push(Token { tok: Tok::Newline, span: Span::new(line_no, end, end) });
        } else if depth < 0 {
            return Err(Diagnostic::error("syntax", Span::new(line_no, 1, 2), "unbalanced closing bracket"));
        }
    }

    let last_line = src.lines().count() as u32 + 1;
    if depth != 0 {
        return Err(Diagnostic::error("syntax", Span::new(last_line, 1, 1), "unclosed bracket at end of file"));
    }
    let span = Span::new(last_line, 1, 1);
    while indents.len() > 1 {
        indents.pop();
        out.push(Token { tok: Tok::Dedent, span });
    }
    out.push(Token { tok: Tok::Eof, span });
    Ok(out)
}
