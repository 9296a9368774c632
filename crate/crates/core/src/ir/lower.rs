use crate::dsl::check::{classify_rhs, resolve_cell, Operand as AstOperand, Rhs};
use crate::dsl::eval::eval;
use crate::dsl::{Stmt, TypedModel};

use super::graph::*;
use super::IrError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SizeBudget {
    pub max_vars: usize,
    pub max_factors: usize,
}

impl Default for SizeBudget {
    fn default() -> Self {
        SizeBudget { max_vars: 200_000, max_factors: 1_000_000 }
    }
}

/// Lower a checked model with the default size budget.
pub fn lower(model: &TypedModel) -> Result<Graph, IrError> {
    lower_with_budget(model, SizeBudget::default())
}

/// Unroll loops, resolve compile-time `if`s and turn each `with` into a gate
/// whose branch `b` sees the bound name as the literal `b`.
pub fn lower_with_budget(model: &TypedModel, budget: SizeBudget) -> Result<Graph, IrError> {
    let cells = model.num_cells();
    if cells > budget.max_vars {
        return Err(IrError::TooLarge { what: "variable cells", count: cells, limit: budget.max_vars });
    }
    let mut b = GraphBuilder::new(model.name.clone());
    b.constants(model.constants.clone());
    for d in &model.decls {
        let first = b.declare(&d.name, d.kind, d.domain, &d.shape);
        debug_assert_eq!(first, d.first_cell);
    }
    for f in &model.functions {
        b.table(&f.name, f.arg_domains.clone(), f.out_domain, f.table.clone());
    }
    let mut lw = Lowerer { model, b, env: Vec::new(), budget };
    lw.block(&model.body, ROOT)?;
    Ok(lw.b.finish())
}

struct Lowerer<'a> {
    model: &'a TypedModel,
    b: GraphBuilder,
    env: Vec<(String, i64)>,
    budget: SizeBudget,
}

impl Lowerer<'_> {
    fn internal(msg: impl Into<String>) -> IrError {
        IrError::Internal(msg.into())
    }

    fn block(&mut self, body: &[Stmt], block: BlockId) -> Result<(), IrError> {
        for s in body {
            self.stmt(s, block)?;
            if self.b.num_factors() > self.budget.max_factors {
                return Err(IrError::TooLarge {
                    what: "factors",
                    count: self.b.num_factors(),
                    limit: self.budget.max_factors,
                });
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, block: BlockId) -> Result<(), IrError> {
        match s {
            Stmt::SetTo { target, value, span } => {
                let dst = resolve_cell(self.model, &target.name, &target.indices, &self.env)
                    .map_err(|e| Self::internal(e.diagnostic(*span).message))?;
                let rhs = classify_rhs(self.model, value, &self.env).map_err(|d| Self::internal(d.message))?;
                let kind = match rhs {
                    Rhs::Literal(v) => FactorKind::Const { value: v as u32, dst },
                    Rhs::Cell(src) => FactorKind::Copy { src, dst },
                    Rhs::Call { func, args } => FactorKind::Table {
                        table: func,
                        inputs: args
                            .into_iter()
                            .map(|a| match a {
                                AstOperand::Literal(v) => Operand::Lit(v as u32),
                                AstOperand::Cell(c) => Operand::Var(c),
                            })
                            .collect(),
                        dst,
                    },
                };
                self.b.factor(block, kind, span.line);
            }
            Stmt::For { var, lo, hi, body, .. } => {
                let lo = lo.as_int().ok_or_else(|| Self::internal("unresolved loop bound"))?;
                let hi = hi.as_int().ok_or_else(|| Self::internal("unresolved loop bound"))?;
                for i in lo..hi {
                    self.env.push((var.clone(), i));
                    let r = self.block(body, block);
                    self.env.pop();
                    r?;
                }
            }
            Stmt::If { cond, then_body, else_body, .. } => {
                let v = eval(cond, &self.env).map_err(|e| Self::internal(format!("{e:?}")))?;
                if v != 0 {
                    self.block(then_body, block)?;
                } else {
                    self.block(else_body, block)?;
                }
            }
            Stmt::With { scrutinee, name, body, span } => {
                let cond = resolve_cell(self.model, &scrutinee.name, &scrutinee.indices, &self.env)
                    .map_err(|e| Self::internal(e.diagnostic(*span).message))?;
                let (_, branches) = self.b.gate(block, cond, span.line);
                for (value, branch) in branches.into_iter().enumerate() {
                    self.env.push((name.clone(), value as i64));
                    let r = self.block(body, branch);
                    self.env.pop();
                    r?;
                }
            }
        }
        Ok(())
    }
}
