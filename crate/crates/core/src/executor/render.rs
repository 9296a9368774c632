use std::fmt::Write;

use crate::dsl::VarKind;
use crate::ir::{DeclInfo, Graph};

use super::ParamAssignment;

/// Human-readable listing of a program, grouped by declared Param name.
///
/// Machines with `write`/`move`/`next` rule tables of the same shape are
/// listed as one transition per line; everything else prints one cell per
/// line as `name[i,j] = v`.
pub fn render_program(g: &Graph, p: &ParamAssignment) -> String {
    let params: Vec<&DeclInfo> = g.decls.iter().filter(|d| d.kind == VarKind::Param).collect();
    if params.iter().all(|d| d.num_cells() == 0) {
        return "(constant program)\n".to_string();
    }
    let mut out = String::new();
    let rules = ["write", "move", "next"].map(|n| params.iter().find(|d| d.name == n).copied());
    let rule_decls = match rules {
        [Some(w), Some(m), Some(n)] if w.shape.len() == 2 && w.shape == m.shape && w.shape == n.shape => {
            out.push_str("(state,symbol) → (write,move,next)\n");
            for (k, idx) in indices(&w.shape).enumerate() {
                let v = |d: &DeclInfo| p.get(d.first_var + k).unwrap_or(0);
                let _ = writeln!(out, "({},{}) → ({},{},{})", idx[0], idx[1], v(w), v(m), v(n));
            }
            vec!["write", "move", "next"]
        }
        _ => Vec::new(),
    };
    for d in params.iter().filter(|d| !rule_decls.contains(&d.name.as_str())) {
        for (k, idx) in indices(&d.shape).enumerate() {
            let value = p.get(d.first_var + k).unwrap_or(0);
            if idx.is_empty() {
                let _ = writeln!(out, "{} = {value}", d.name);
            } else {
                let idx: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                let _ = writeln!(out, "{}[{}] = {value}", d.name, idx.join(","));
            }
        }
    }
    out
}

fn indices(shape: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = shape.iter().product();
    (0..total).map(move |mut k| {
        let mut idx = vec![0; shape.len()];
        for d in (0..shape.len()).rev() {
            idx[d] = k % shape[d];
            k /= shape[d];
        }
        idx
    })
}
