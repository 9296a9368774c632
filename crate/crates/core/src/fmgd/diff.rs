use crate::executor::ParamAssignment;
use crate::ir::VarId;

use super::relax::{DiffProgram, Op};

/// Logit used for the losing entries of a point mass; its softmax weight
/// underflows to exactly zero.
const POINT_MASS_LOW: f64 = -1.0e4;

/// Continuous parameters: one logit vector per Param cell, concatenated in
/// Param-cell order.
#[derive(Clone, Debug, PartialEq)]
pub struct Logits(pub Vec<f64>);

impl Logits {
    pub fn zeros(dp: &DiffProgram) -> Self {
        Logits(vec![0.0; dp.theta_len])
    }

    /// Logits whose softmax is exactly one-hot at the assigned values.
    pub fn point_mass(dp: &DiffProgram, p: &ParamAssignment) -> Self {
        let mut theta = vec![POINT_MASS_LOW; dp.theta_len];
        for l in &dp.params {
            let v = p.get(l.var).expect("assignment covers every Param cell") as usize;
            theta[l.offset + v] = 0.0;
        }
        Logits(theta)
    }

    /// Per-cell argmax (lowest index on ties).
    pub fn discretize(&self, dp: &DiffProgram) -> ParamAssignment {
        let dense: Vec<u32> = dp
            .params
            .iter()
            .map(|l| {
                let block = &self.0[l.offset..l.offset + l.len];
                let mut best = 0;
                for (k, x) in block.iter().enumerate() {
                    if *x > block[best] {
                        best = k;
                    }
                }
                best as u32
            })
            .collect();
        ParamAssignment::from_dense(&dp.graph, &dense).expect("argmax is in range")
    }
}

/// Marginals of every slot after a forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalState {
    arena: Vec<f64>,
}

impl MarginalState {
    /// Marginal of cell `var` in example `example`; `None` for cells the
    /// program never writes.
    pub fn marginal<'a>(&'a self, dp: &DiffProgram, example: usize, var: VarId) -> Option<&'a [f64]> {
        let s = dp.cell_slots.get(example)?.get(var).copied().flatten()?;
        let info = dp.slots[s];
        Some(&self.arena[info.offset..info.offset + info.len])
    }

    /// Every slot vector, including internal ones.
    pub fn all_slots<'a>(&'a self, dp: &'a DiffProgram) -> impl Iterator<Item = &'a [f64]> + 'a {
        dp.slots.iter().map(move |s| &self.arena[s.offset..s.offset + s.len])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossParts {
    /// `Σ -ln μ_out[observed]`; `+∞` when some observed value has marginal 0.
    pub data: f64,
    /// Total entropy of the Param distributions.
    pub entropy: f64,
    /// `data - λ · entropy`.
    pub total: f64,
}

/// Reusable buffers for repeated forward/backward passes.
#[derive(Clone, Debug)]
pub struct Workspace {
    arena: Vec<f64>,
    grad: Vec<f64>,
    log_softmax: Vec<f64>,
    free_buf: Vec<usize>,
}

impl Workspace {
    pub fn new(dp: &DiffProgram) -> Self {
        Workspace {
            arena: dp.template.clone(),
            grad: vec![0.0; dp.arena_len],
            log_softmax: vec![0.0; dp.theta_len],
            free_buf: Vec::new(),
        }
    }
}

/// Loss and marginals at `theta`, without an entropy term.
pub fn forward(dp: &DiffProgram, theta: &Logits) -> (f64, MarginalState) {
    let mut ws = Workspace::new(dp);
    let loss = forward_into(dp, &theta.0, 0.0, &mut ws);
    (loss.total, MarginalState { arena: ws.arena })
}

/// Gradient of the data loss w.r.t. `theta`.
pub fn backward(dp: &DiffProgram, theta: &Logits) -> Vec<f64> {
    backward_with_entropy(dp, theta, 0.0).1
}

/// Loss parts and gradient of `data - λ · entropy`.
pub fn backward_with_entropy(dp: &DiffProgram, theta: &Logits, lambda: f64) -> (LossParts, Vec<f64>) {
    let mut ws = Workspace::new(dp);
    let mut g = vec![0.0; dp.theta_len];
    let loss = loss_and_grad(dp, &theta.0, lambda, &mut ws, &mut g);
    (loss, g)
}

pub fn loss_parts(dp: &DiffProgram, theta: &Logits, lambda: f64) -> LossParts {
    let mut ws = Workspace::new(dp);
    forward_into(dp, &theta.0, lambda, &mut ws)
}

/// Forward pass into `ws.arena`.
pub(crate) fn forward_into(dp: &DiffProgram, theta: &[f64], lambda: f64, ws: &mut Workspace) -> LossParts {
    let arena = &mut ws.arena;
    let mut entropy = 0.0;
    for op in &dp.ops {
        match op {
            Op::Softmax { param, out } => {
                let l = &dp.params[*param];
                let th = &theta[l.offset..l.offset + l.len];
                let max = th.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = th.iter().map(|x| (x - max).exp()).sum();
                let lse = max + sum.ln();
                let o = dp.slots[*out].offset;
                for k in 0..l.len {
                    let ls = th[k] - lse;
                    ws.log_softmax[l.offset + k] = ls;
                    let p = ls.exp();
                    arena[o + k] = p;
                    if p > 0.0 {
                        entropy -= p * ls;
                    }
                }
            }
            Op::Table { table, free, base, out } => {
                let t = &dp.graph.tables[*table];
                let o = dp.slots[*out].offset;
                arena[o..o + dp.slots[*out].len].fill(0.0);
                let digits = &mut ws.free_buf;
                digits.clear();
                digits.resize(free.len(), 0);
                loop {
                    let mut prod = 1.0;
                    let mut idx = *base;
                    for (k, &(s, stride)) in free.iter().enumerate() {
                        prod *= arena[dp.slots[s].offset + digits[k]];
                        idx += stride * digits[k];
                    }
                    arena[o + t.entries[idx] as usize] += prod;
                    if !advance(digits, free, dp) {
                        break;
                    }
                }
            }
            Op::Mix { cond, branches, out } => {
                let info = dp.slots[*out];
                let c = dp.slots[*cond].offset;
                arena[info.offset..info.offset + info.len].fill(0.0);
                for (b, &bs) in branches.iter().enumerate() {
                    let w = arena[c + b];
                    if w == 0.0 {
                        continue;
                    }
                    let x = dp.slots[bs].offset;
                    for v in 0..info.len {
                        arena[info.offset + v] += w * arena[x + v];
                    }
                }
            }
        }
    }
    let mut data = if dp.contradiction { f64::INFINITY } else { 0.0 };
    for obs in &dp.observations {
        let p = arena[dp.slots[obs.slot].offset + obs.value as usize];
        data += if p > 0.0 { -p.ln() } else { f64::INFINITY };
    }
    let total = if lambda == 0.0 { data } else { data - lambda * entropy };
    LossParts { data, entropy, total }
}

fn advance(digits: &mut [usize], free: &[(usize, usize)], dp: &DiffProgram) -> bool {
    for k in (0..digits.len()).rev() {
        digits[k] += 1;
        if digits[k] < dp.slots[free[k].0].len {
            return true;
        }
        digits[k] = 0;
    }
    false
}

/// Forward then reverse pass. `grad` receives d(total)/dθ. When the data
/// loss is infinite the gradient is left at zero.
pub(crate) fn loss_and_grad(
    dp: &DiffProgram,
    theta: &[f64],
    lambda: f64,
    ws: &mut Workspace,
    grad: &mut [f64],
) -> LossParts {
    let loss = forward_into(dp, theta, lambda, ws);
    grad.fill(0.0);
    if !loss.data.is_finite() {
        return loss;
    }
    let arena = &ws.arena;
    let g = &mut ws.grad;
    g.fill(0.0);
    for obs in &dp.observations {
        let i = dp.slots[obs.slot].offset + obs.value as usize;
        g[i] -= 1.0 / arena[i];
    }
    let mut prefix = Vec::new();
    for op in dp.ops.iter().rev() {
        match op {
            Op::Softmax { param, out } => {
                let l = &dp.params[*param];
                let o = dp.slots[*out].offset;
                let mu = &arena[o..o + l.len];
                let dot: f64 = (0..l.len).map(|k| mu[k] * g[o + k]).sum();
                let ls = &ws.log_softmax[l.offset..l.offset + l.len];
                let h: f64 = -(0..l.len).filter(|&k| mu[k] > 0.0).map(|k| mu[k] * ls[k]).sum::<f64>();
                for k in 0..l.len {
                    let mut d = mu[k] * (g[o + k] - dot);
                    if lambda != 0.0 && mu[k] > 0.0 {
                        d += lambda * mu[k] * (ls[k] + h);
                    }
                    grad[l.offset + k] += d;
                }
            }
            Op::Table { table, free, base, out } => {
                let t = &dp.graph.tables[*table];
                let o = dp.slots[*out].offset;
                let n = free.len();
                let digits = &mut ws.free_buf;
                digits.clear();
                digits.resize(n, 0);
                prefix.resize(n + 1, 0.0);
                loop {
                    let mut idx = *base;
                    for (k, &(_, stride)) in free.iter().enumerate() {
                        idx += stride * digits[k];
                    }
                    let go = g[o + t.entries[idx] as usize];
                    if go != 0.0 {
                        prefix[0] = 1.0;
                        for k in 0..n {
                            prefix[k + 1] = prefix[k] * arena[dp.slots[free[k].0].offset + digits[k]];
                        }
                        let mut suffix = 1.0;
                        for k in (0..n).rev() {
                            let at = dp.slots[free[k].0].offset + digits[k];
                            g[at] += go * prefix[k] * suffix;
                            suffix *= arena[at];
                        }
                    }
                    if !advance(digits, free, dp) {
                        break;
                    }
                }
            }
            Op::Mix { cond, branches, out } => {
                let info = dp.slots[*out];
                let c = dp.slots[*cond].offset;
                for (b, &bs) in branches.iter().enumerate() {
                    let x = dp.slots[bs].offset;
                    let w = arena[c + b];
                    let mut dc = 0.0;
                    for v in 0..info.len {
                        let go = g[info.offset + v];
                        dc += go * arena[x + v];
                        g[x + v] += w * go;
                    }
                    g[c + b] += dc;
                }
            }
        }
    }
    loss
}
