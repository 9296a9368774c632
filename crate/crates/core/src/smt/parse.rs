use std::collections::BTreeMap;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverAnswer {
    /// `sat` with the `(get-value ...)` bindings that followed it.
    Sat(BTreeMap<String, i64>),
    Unsat,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("solver printed no verdict")]
    NoVerdict,
    #[error("unexpected solver verdict `{0}`")]
    BadVerdict(String),
    #[error("malformed get-value output: {0}")]
    Model(String),
}

#[derive(Debug, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

/// Parse a solver's standard output: a verdict line and, after `sat`, the
/// `((sym value) ...)` response to get-value.
pub fn parse_solver_output(stdout: &str) -> Result<SolverAnswer, ParseError> {
    let trimmed = stdout.trim_start();
    let end = trimmed.find(|c: char| c.is_whitespace()).unwrap_or(trimmed.len());
    let verdict = &trimmed[..end];
    match verdict {
        "" => Err(ParseError::NoVerdict),
        "unsat" => Ok(SolverAnswer::Unsat),
        "unknown" => Ok(SolverAnswer::Unknown),
        "sat" => {
            let rest = &trimmed[end..];
            let mut bindings = BTreeMap::new();
            let tokens = tokenize(rest);
            let mut pos = 0;
            while pos < tokens.len() {
                let sexp = parse_sexp(&tokens, &mut pos)?;
                collect_bindings(&sexp, &mut bindings)?;
            }
            Ok(SolverAnswer::Sat(bindings))
        }
        other => Err(ParseError::BadVerdict(other.chars().take(80).collect())),
    }
}

fn tokenize(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in s.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_sexp(tokens: &[String], pos: &mut usize) -> Result<Sexp, ParseError> {
    let t = tokens.get(*pos).ok_or_else(|| ParseError::Model("unexpected end of output".into()))?;
    *pos += 1;
    match t.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    None => return Err(ParseError::Model("unbalanced parentheses".into())),
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(parse_sexp(tokens, pos)?),
                }
            }
        }
        ")" => Err(ParseError::Model("unbalanced parentheses".into())),
        atom => Ok(Sexp::Atom(atom.to_string())),
    }
}

fn int_value(s: &Sexp) -> Option<i64> {
    match s {
        Sexp::Atom(a) => a.parse().ok(),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(minus), inner] if minus == "-" => int_value(inner).map(|x| -x),
            _ => None,
        },
    }
}

fn collect_bindings(s: &Sexp, out: &mut BTreeMap<String, i64>) -> Result<(), ParseError> {
    let Sexp::List(pairs) = s else {
        return Err(ParseError::Model(format!("expected a list of bindings, found {s:?}")));
    };
    for pair in pairs {
        match pair {
            Sexp::List(kv) if kv.len() == 2 => {
                let Sexp::Atom(name) = &kv[0] else {
                    return Err(ParseError::Model("binding name is not a symbol".into()));
                };
                let value =
                    int_value(&kv[1]).ok_or_else(|| ParseError::Model(format!("non-integer value for {name}")))?;
                out.insert(name.clone(), value);
            }
            other => return Err(ParseError::Model(format!("malformed binding {other:?}"))),
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_sat_with_bindings() {
        let out = "sat\n((p_a 1)\n (p_b (- 2)))\n";
        let SolverAnswer::Sat(b) = parse_solver_output(out).unwrap() else { panic!() };
        assert_eq!(b["p_a"], 1);
        assert_eq!(b["p_b"], -2);
    }

    #[test]
    fn parses_unsat_followed_by_error() {
        let out = "unsat\n(error \"line 9 column 10: model is not available\")\n";
        assert_eq!(parse_solver_output(out).unwrap(), SolverAnswer::Unsat);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(parse_solver_output("segfault"), Err(ParseError::BadVerdict(_))));
        assert_eq!(parse_solver_output("  \n"), Err(ParseError::NoVerdict));
    }
}
