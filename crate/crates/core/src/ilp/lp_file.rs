use std::fmt::Write;

use super::emit::{IlpMode, IlpModel};

/// Longest line we emit; some LP readers reject lines over 255 characters.
const MAX_LINE: usize = 200;

/// CPLEX LP text: Minimize / Subject To / Bounds / Generals / End, with
/// variables and rows in model order.
pub fn write_lp_file(m: &IlpModel) -> String {
    let mut out = String::new();
    let mode = match m.mode {
        IlpMode::Integral => "integral",
        IlpMode::Relaxed => "relaxed",
    };
    let _ = writeln!(out, "\\ model {} ({mode}): {} variables, {} rows", m.name, m.vars.len(), m.rows.len());
    out.push_str("Minimize\n");
    match m.vars.first() {
        Some(v) => {
            let _ = writeln!(out, " obj: 0 {}", v.name);
        }
        None => out.push_str(" obj: 0\n"),
    }
    out.push_str("Subject To\n");
    for r in &m.rows {
        let mut line = format!(" {}:", r.name);
        let mut first = true;
        for &(i, c) in &r.terms {
            let name = &m.vars[i].name;
            let term = match (c, first) {
                (1, true) => name.clone(),
                (1, false) => format!("+ {name}"),
                (-1, _) => format!("- {name}"),
                (c, _) if c < 0 => format!("- {} {name}", -c),
                (c, true) => format!("{c} {name}"),
                (c, false) => format!("+ {c} {name}"),
            };
            first = false;
            push_wrapped(&mut out, &mut line, &term);
        }
        push_wrapped(&mut out, &mut line, &format!("{} {}", r.sense.symbol(), r.rhs));
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("Bounds\n");
    for v in &m.vars {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    let generals: Vec<&str> = m.vars.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        let mut line = String::new();
        for name in generals {
            push_wrapped(&mut out, &mut line, name);
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

fn push_wrapped(out: &mut String, line: &mut String, token: &str) {
    if !line.is_empty() && line.len() + 1 + token.len() > MAX_LINE {
        out.push_str(line);
        out.push('\n');
        line.clear();
        line.push_str("   ");
    }
    line.push(' ');
    line.push_str(token);
}
