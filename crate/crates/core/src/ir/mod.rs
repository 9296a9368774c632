//! Gated factor graph IR: lowering, single-assignment validation and
//! per-example instantiation.

pub mod graph;
pub mod instance;
pub mod io;
pub mod lower;
pub mod ssa;

use thiserror::Error;

pub use graph::{
    Block, BlockId, DeclInfo, Factor, FactorId, FactorKind, FunctionTable, GateId, GateNode, Graph, GraphBuilder, Item,
    Operand, TableId, VarId, VarNode, ROOT,
};
pub use instance::{bind_examples, bind_examples_with_budget, Example, IOExamples, InstanceGraph};
pub use io::{IoFile, IoFileExample};
pub use lower::{lower, lower_with_budget, SizeBudget};
pub use ssa::validate_ssa;

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum IrError {
    #[error("model too large to compile: {count} {what} exceeds the budget of {limit}")]
    TooLarge { what: &'static str, count: usize, limit: usize },
    #[error("at least one input-output example is required")]
    NoExamples,
    #[error("example {example}: missing value for {cell}")]
    MissingCell { example: usize, cell: String },
    #[error("example {example}: {cell} is not an input/output cell of the model")]
    ExtraCell { example: usize, cell: String },
    #[error("example {example}: value {value} for {cell} is outside its domain [0, {domain})")]
    OutOfDomain { example: usize, cell: String, value: i64, domain: u32 },
    #[error("example {example}: value for `{name}` does not match shape {expected:?}")]
    Shape { example: usize, name: String, expected: Vec<usize> },
    #[error("malformed examples file: {0}")]
    Io(String),
    #[error("internal lowering error: {0}")]
    Internal(String),
}
