//! JSON form of input-output examples, addressed by declared names.
//!
//! ```json
//! {"model": "automaton", "constants": {"T": 5},
//!  "examples": [{"inputs": {"initial_tape": [1, 0]}, "outputs": {"final_tape": 0}}]}
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dsl::VarKind;

use super::graph::{DeclInfo, Graph, VarId};
use super::instance::{Example, IOExamples};
use super::IrError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IoFile {
    pub model: String,
    #[serde(default)]
    pub constants: BTreeMap<String, i64>,
    pub examples: Vec<IoFileExample>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IoFileExample {
    #[serde(default)]
    pub inputs: BTreeMap<String, Value>,
    #[serde(default)]
    pub outputs: BTreeMap<String, Value>,
}

impl IoFile {
    pub fn from_json(text: &str) -> Result<IoFile, IrError> {
        serde_json::from_str(text).map_err(|e| IrError::Io(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("io file serializes")
    }

    /// Resolve names to graph cells.
    pub fn to_examples(&self, g: &Graph) -> Result<IOExamples, IrError> {
        let mut out = Vec::with_capacity(self.examples.len());
        for (e, ex) in self.examples.iter().enumerate() {
            let mut example = Example::default();
            flatten_side(g, e, &ex.inputs, VarKind::Input, &mut example.inputs)?;
            flatten_side(g, e, &ex.outputs, VarKind::Output, &mut example.outputs)?;
            out.push(example);
        }
        Ok(IOExamples::new(out))
    }

    /// Inverse of [`IoFile::to_examples`]; examples must cover whole arrays.
    pub fn from_examples(g: &Graph, io: &IOExamples) -> IoFile {
        let examples = io
            .examples
            .iter()
            .map(|ex| IoFileExample {
                inputs: nest_side(g, &ex.inputs, VarKind::Input),
                outputs: nest_side(g, &ex.outputs, VarKind::Output),
            })
            .collect();
        IoFile { model: g.name.clone(), constants: g.constants.iter().cloned().collect(), examples }
    }
}

fn flatten_side(
    g: &Graph,
    example: usize,
    values: &BTreeMap<String, Value>,
    kind: VarKind,
    out: &mut BTreeMap<VarId, u32>,
) -> Result<(), IrError> {
    for (name, value) in values {
        let decl = g
            .decls
            .iter()
            .find(|d| &d.name == name && d.kind == kind)
            .ok_or_else(|| IrError::ExtraCell { example, cell: name.clone() })?;
        let mut flat = Vec::new();
        flatten_value(value, &decl.shape, name, example, &mut flat)?;
        for (k, v) in flat.into_iter().enumerate() {
            let var = decl.first_var + k;
            if v < 0 || v >= decl.domain as i64 {
                return Err(IrError::OutOfDomain { example, cell: g.vars[var].label(), value: v, domain: decl.domain });
            }
            out.insert(var, v as u32);
        }
    }
    Ok(())
}

fn flatten_value(v: &Value, shape: &[usize], name: &str, example: usize, out: &mut Vec<i64>) -> Result<(), IrError> {
    let bad = || IrError::Shape { example, name: name.to_string(), expected: shape.to_vec() };
    match shape.split_first() {
        None => out.push(v.as_i64().ok_or_else(bad)?),
        Some((dim, rest)) => {
            let arr = v.as_array().ok_or_else(bad)?;
            if arr.len() != *dim {
                return Err(bad());
            }
            for item in arr {
                flatten_value(item, rest, name, example, out)?;
            }
        }
    }
    Ok(())
}

fn nest_side(g: &Graph, values: &BTreeMap<VarId, u32>, kind: VarKind) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    for d in g.decls.iter().filter(|d| d.kind == kind) {
        if d.vars().all(|v| values.contains_key(&v)) {
            let flat: Vec<u32> = d.vars().map(|v| values[&v]).collect();
            out.insert(d.name.clone(), nest(&flat, d));
        }
    }
    out
}

fn nest(flat: &[u32], d: &DeclInfo) -> Value {
    fn go(flat: &[u32], shape: &[usize]) -> Value {
        match shape.split_first() {
            None => Value::from(flat[0]),
            Some((dim, rest)) => {
                let stride: usize = rest.iter().product();
                Value::Array((0..*dim).map(|i| go(&flat[i * stride..(i + 1) * stride], rest)).collect())
            }
        }
    }
    go(flat, &d.shape)
}
