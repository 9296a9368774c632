use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthkit::dsl::{compile, ModelSource, VarKind};
use synthkit::executor::{execute, ParamAssignment};
use synthkit::fmgd::{
    backward, backward_with_entropy, forward, loss_parts, random_search, relax, train, DiffProgram, FmgdRunResult,
    HyperDistribution, HyperParams, Logits,
};
use synthkit::ir::{bind_examples, lower, Example, Graph, GraphBuilder, IOExamples, InstanceGraph, Operand, ROOT};
use synthkit::random::{random_instance, RandomSpec};
use synthkit::zoo::{find_task, model_text};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// `|a - b| / max(|a|, |b|, 1e-6)`: relative error with a floor so that
/// coordinates whose true gradient is ~0 are compared absolutely.
fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

fn bind(g: Graph, examples: Vec<Example>) -> InstanceGraph {
    bind_examples(Arc::new(g), &IOExamples::new(examples)).unwrap()
}

fn example(inputs: &[(usize, u32)], outputs: &[(usize, u32)]) -> Example {
    Example { inputs: inputs.iter().copied().collect(), outputs: outputs.iter().copied().collect() }
}

/// `out = p` for one Param of domain 2, observed `out = 1`.
fn copy_model() -> InstanceGraph {
    let mut b = GraphBuilder::new("copy");
    let p = b.scalar("p", VarKind::Param, 2);
    let out = b.scalar("out", VarKind::Output, 2);
    b.copy(ROOT, p, out);
    bind(b.finish(), vec![example(&[], &[(out, 1)])])
}

fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

#[test]
fn table_marginal_sums_over_matching_tuples() {
    let mut b = GraphBuilder::new("xor");
    let p = b.scalar("p", VarKind::Param, 2);
    let x = b.scalar("x", VarKind::Input, 2);
    let y = b.scalar("y", VarKind::Output, 2);
    let t = b.table("xor", vec![2, 2], 2, vec![0, 1, 1, 0]);
    b.apply(ROOT, t, vec![Operand::Var(p), Operand::Var(x)], y);
    let ig = bind(b.finish(), vec![example(&[(x, 0)], &[(y, 1)])]);
    let dp = relax(&ig);
    let (loss, m) = forward(&dp, &Logits::zeros(&dp));
    let mu = m.marginal(&dp, 0, y).unwrap();
    assert!(close(mu[0], 0.5, 1e-12) && close(mu[1], 0.5, 1e-12), "{mu:?}");
    assert!(close(loss, std::f64::consts::LN_2, 1e-12));
}

#[test]
fn gate_marginal_mixes_branches() {
    let mut b = GraphBuilder::new("gate");
    let c = b.scalar("c", VarKind::Param, 2);
    let y = b.scalar("y", VarKind::Output, 2);
    let (_, branches) = b.gate(ROOT, c, 0);
    b.constant(branches[0], 0, y);
    b.constant(branches[1], 1, y);
    let ig = bind(b.finish(), vec![example(&[], &[(y, 1)])]);
    let dp = relax(&ig);
    let theta = Logits(vec![0.3f64.ln(), 0.7f64.ln()]);
    let (loss, m) = forward(&dp, &theta);
    let mu = m.marginal(&dp, 0, y).unwrap();
    assert!(close(mu[0], 0.3, 1e-12) && close(mu[1], 0.7, 1e-12), "{mu:?}");
    assert!(close(loss, -(0.7f64.ln()), 1e-12));
}

#[test]
fn observation_loss_is_negative_log_marginal() {
    let ig = copy_model();
    let dp = relax(&ig);
    let (loss, _) = forward(&dp, &Logits(vec![0.25f64.ln(), 0.75f64.ln()]));
    assert!(close(loss, 0.28768, 1e-5), "{loss}");
    assert!(close(loss, -(0.75f64.ln()), 1e-12));
}

fn automaton_xor() -> (InstanceGraph, Logits) {
    let typed = compile(&ModelSource::new("automaton", model_text("automaton.tpt").unwrap())).unwrap();
    let g = Arc::new(lower(&typed).unwrap());
    let xor = ParamAssignment::from_named(&g, &[("ruleTable", vec![0, 1, 1, 0])]).unwrap();
    let input = g.decl("initial_tape").unwrap().first_var;
    let examples = [(0, 0), (0, 1), (1, 0), (1, 1)]
        .iter()
        .map(|&(a, b)| {
            let inputs = BTreeMap::from([(input, a), (input + 1, b)]);
            let (outputs, _) = execute(&g, &xor, &inputs);
            Example { inputs, outputs }
        })
        .collect();
    let ig = bind_examples(g, &IOExamples::new(examples)).unwrap();
    let dp = relax(&ig);
    let mut theta = vec![0.0; dp.num_logits()];
    for (var, offset, len) in dp.param_layout() {
        for k in 0..len {
            theta[offset + k] = if xor.get(var) == Some(k as u32) { 20.0 } else { -20.0 };
        }
    }
    (ig, Logits(theta))
}

#[test]
fn saturated_consistent_logits_have_near_zero_loss_and_gradient() {
    let (ig, theta) = automaton_xor();
    let dp = relax(&ig);
    let (loss, _) = forward(&dp, &theta);
    assert!(loss < 1e-6, "{loss}");
    let g = backward(&dp, &theta);
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(norm < 1e-6, "{norm}");
}

#[test]
fn uniform_parity_costs_ln2_per_observation() {
    let task = find_task("parity-chain").unwrap().load(&[("K".to_string(), 2)]).unwrap();
    let g = task.graph.clone();
    let out = g.decl("parity").unwrap().first_var;
    let ig = bind_examples(g, &IOExamples::new(vec![example(&[], &[(out, 1)])])).unwrap();
    let dp = relax(&ig);
    let (loss, m) = forward(&dp, &Logits::zeros(&dp));
    assert_eq!(m.marginal(&dp, 0, out).unwrap(), [0.5, 0.5]);
    assert!(close(loss, std::f64::consts::LN_2, 1e-12));
}

#[test]
fn constant_model_loss_is_zero_or_infinite() {
    let mut b = GraphBuilder::new("const");
    let out = b.scalar("out", VarKind::Output, 2);
    b.constant(ROOT, 1, out);
    let g = b.finish();
    let matching = relax(&bind(g.clone(), vec![example(&[], &[(out, 1)])]));
    assert_eq!(forward(&matching, &Logits::zeros(&matching)).0, 0.0);
    let contradicting = relax(&bind(g, vec![example(&[], &[(out, 0)])]));
    assert_eq!(forward(&contradicting, &Logits::zeros(&contradicting)).0, f64::INFINITY);
}

#[test]
fn copy_gradient_is_softmax_minus_onehot() {
    let dp = relax(&copy_model());
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let theta: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let g = backward(&dp, &Logits(theta.clone()));
        let s = softmax(&theta);
        assert!(close(g[0], s[0], 1e-12) && close(g[1], s[1] - 1.0, 1e-12), "{g:?} vs {s:?}");
        let h = 1e-4;
        for k in 0..2 {
            let (mut up, mut down) = (theta.clone(), theta.clone());
            up[k] += h;
            down[k] -= h;
            let fd = (forward(&dp, &Logits(up)).0 - forward(&dp, &Logits(down)).0) / (2.0 * h);
            assert!(rel_err(g[k], fd) < 1e-4);
        }
    }
}

#[test]
fn entropy_gradient_vanishes_at_uniform_logits() {
    let (ig, _) = automaton_xor();
    let dp = relax(&ig);
    let zeros = Logits::zeros(&dp);
    let data = backward(&dp, &zeros);
    let (parts, with_entropy) = backward_with_entropy(&dp, &zeros, 1.0);
    assert!(close(parts.entropy, 4.0 * std::f64::consts::LN_2, 1e-12));
    for (a, b) in data.iter().zip(&with_entropy) {
        assert!(close(*a, *b, 1e-12));
    }
}

fn finite_difference_check(dp: &DiffProgram, theta: &[f64], lambda: f64) -> f64 {
    let (_, g) = backward_with_entropy(dp, &Logits(theta.to_vec()), lambda);
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for k in 0..theta.len() {
        let (mut up, mut down) = (theta.to_vec(), theta.to_vec());
        up[k] += h;
        down[k] -= h;
        let fd = (loss_parts(dp, &Logits(up), lambda).total - loss_parts(dp, &Logits(down), lambda).total) / (2.0 * h);
        worst = worst.max(rel_err(g[k], fd));
    }
    worst
}

#[test]
fn gradients_match_finite_differences_on_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let spec = RandomSpec::default();
    for case in 0..60 {
        let r = random_instance(&mut rng, &spec);
        assert!(r.graph().vars.len() <= 6 && !r.graph().gates.is_empty());
        let dp = relax(&r.instance);
        let theta: Vec<f64> = (0..dp.num_logits()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let lambda = if case % 2 == 0 { 0.0 } else { 0.1 };
        let worst = finite_difference_check(&dp, &theta, lambda);
        assert!(worst < 1e-4, "case {case}: relative error {worst:e}\n{}", r.graph().dump());
    }
}

#[test]
fn marginals_are_normalized() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let r = random_instance(&mut rng, &RandomSpec::default());
        let dp = relax(&r.instance);
        let scale = rng.gen_range(0.1..10.0);
        let theta: Vec<f64> = (0..dp.num_logits()).map(|_| scale * rng.gen_range(-1.0..1.0)).collect();
        let (_, m) = forward(&dp, &Logits(theta));
        for v in m.all_slots(&dp) {
            assert!(close(v.iter().sum::<f64>(), 1.0, 1e-6), "{v:?}");
            assert!(v.iter().all(|x| *x >= 0.0));
        }
    }
}

#[test]
fn point_masses_reproduce_the_executor() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = RandomSpec { max_cells: 8, max_params: 3, ..RandomSpec::default() };
    for _ in 0..100 {
        let r = random_instance(&mut rng, &spec);
        let g = r.graph().clone();
        let dense: Vec<u32> = g.param_vars().iter().map(|&v| rng.gen_range(0..g.vars[v].domain)).collect();
        let p = ParamAssignment::from_dense(&g, &dense).unwrap();
        let dp = relax(&r.instance);
        let (_, m) = forward(&dp, &Logits::point_mass(&dp, &p));
        for (e, ex) in r.instance.examples.iter().enumerate() {
            let (_, trace) = execute(&g, &p, &ex.inputs);
            for v in 0..g.vars.len() {
                let (Some(mu), Some(value)) = (m.marginal(&dp, e, v), trace.values[v]) else { continue };
                for (k, x) in mu.iter().enumerate() {
                    assert_eq!(*x, if k as u32 == value { 1.0 } else { 0.0 }, "{} in example {e}", g.vars[v].label());
                }
            }
        }
    }
}

#[test]
fn loss_is_zero_exactly_at_consistent_point_masses() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let r = random_instance(&mut rng, &RandomSpec::default());
        let dp = relax(&r.instance);
        assert_eq!(forward(&dp, &Logits::point_mass(&dp, &r.hidden)).0, 0.0);
        let theta: Vec<f64> = (0..dp.num_logits()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (loss, m) = forward(&dp, &Logits(theta));
        assert!(loss >= 0.0);
        let all_certain = r.instance.examples.iter().enumerate().all(|(e, ex)| {
            ex.outputs.iter().all(|(&v, &x)| m.marginal(&dp, e, v).is_none_or(|mu| mu[x as usize] == 1.0))
        });
        assert_eq!(loss == 0.0, all_certain);
    }
}

fn same_run(a: &FmgdRunResult, b: &FmgdRunResult) -> bool {
    a.restarts == b.restarts && a.best == b.best && a.success_fraction == b.success_fraction
}

#[test]
fn training_is_deterministic() {
    let task = find_task("parity-chain").unwrap().load(&[]).unwrap();
    let dp = relax(&task.instance(3).unwrap());
    let h = HyperParams { epochs: 100, restarts: 6, seed: 9, ..HyperParams::default() };
    assert!(same_run(&train(&dp, &h), &train(&dp, &h)));
    let other = train(&dp, &HyperParams { seed: 10, ..h.clone() });
    assert_ne!(other.restarts, train(&dp, &h).restarts);
}

#[test]
fn copy_model_converges_quickly_from_any_start() {
    let dp = relax(&copy_model());
    for h in [
        HyperParams { epochs: 200, restarts: 20, seed: 4, ..HyperParams::default() },
        HyperParams { epochs: 200, restarts: 20, seed: 4, init_scale: 2.0, ..HyperParams::vanilla(0.5) },
    ] {
        let run = train(&dp, &h);
        assert_eq!(run.success_fraction, 1.0);
        assert!(run.restarts.iter().all(|r| r.success && r.epochs <= 200));
        assert!(run.best.is_some());
    }
}

#[test]
fn invalid_hypers_are_rejected() {
    assert!(HyperParams::vanilla(0.0).validate().is_err());
    assert!(HyperParams { epochs: 0, ..HyperParams::default() }.validate().is_err());
    assert!(HyperParams { restarts: 0, ..HyperParams::default() }.validate().is_err());
    assert!(HyperParams { noise_eta: -1.0, ..HyperParams::default() }.validate().is_err());
    HyperParams::default().validate().unwrap();
    assert!(HyperDistribution::from_json("{}").is_err());
}

#[test]
fn one_by_one_search_is_a_single_training_run() {
    let task = find_task("parity-chain").unwrap().load(&[]).unwrap();
    let dp = relax(&task.instance(1).unwrap());
    let dist = HyperDistribution { epochs: 200, ..HyperDistribution::default() };
    let search = random_search(&dp, &dist, 1, 1, 21);
    assert_eq!(search.sets.len(), 1);
    assert_eq!(search.best, 0);
    let (h, run) = &search.sets[0];
    assert_eq!((h.restarts, h.seed), (1, 21));
    assert!(same_run(run, &train(&dp, h)));
    assert_eq!(search.average_success, run.success_fraction);
}

#[test]
fn search_average_never_exceeds_best() {
    let task = find_task("parity-chain").unwrap().load(&[("K".to_string(), 6)]).unwrap();
    let dp = relax(&task.instance(2).unwrap());
    let dist = HyperDistribution { epochs: 150, ..HyperDistribution::default() };
    let search = random_search(&dp, &dist, 6, 4, 8);
    assert_eq!(search.sets.len(), 6);
    assert!(search.average_success <= search.best_success());
    let best = search.best_success();
    assert!(search.sets.iter().all(|(_, r)| r.success_fraction <= best));
}
