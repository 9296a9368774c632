//! The exhaustive enumerator is the reference: on small random models the
//! solver backends must reach the same verdict, and every program they
//! return must reproduce the examples.

mod common;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use synthkit::executor::{check_consistency, enumerate, EnumBudget, Status};
use synthkit::ilp::{self, emit_ilp, lp_bound_report, IlpMode};
use synthkit::random::{random_instance, RandomInstance, RandomSpec};
use synthkit::smt;

const MODELS: usize = 50;

fn models() -> Vec<RandomInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    (0..MODELS)
        .map(|k| {
            let spec = RandomSpec {
                max_cells: 9,
                max_params: 1 + k % 6,
                max_domain: 4,
                max_examples: 4,
                max_depth: 2,
                corrupt: if k % 3 == 2 { 0.5 } else { 0.0 },
            };
            random_instance(&mut rng, &spec)
        })
        .collect()
}

#[derive(Debug, PartialEq, Eq)]
enum Verdict {
    Found,
    None,
}

fn verdict(backend: &str, s: &Status) -> Verdict {
    match s {
        Status::Success(_) => Verdict::Found,
        Status::Exhausted => Verdict::None,
        other => panic!("{backend} gave no verdict: {other:?}"),
    }
}

#[test]
fn enumeration_is_sound_on_random_models() {
    let mut found = 0;
    for (k, m) in models().iter().enumerate() {
        assert!(m.instance.graph.param_space_size() <= 4096u32.into());
        let r = enumerate(&m.instance, EnumBudget::unlimited());
        let consistent_hidden = check_consistency(m.graph(), &m.hidden, &m.examples());
        match r.status() {
            Status::Success(p) => {
                assert!(check_consistency(m.graph(), p, &m.examples()), "model {k}");
                found += 1;
            }
            Status::Exhausted => assert!(!consistent_hidden, "model {k}: hidden program missed"),
            other => panic!("model {k}: {other:?}"),
        }
    }
    // The corrupted third should leave some models unsatisfiable.
    assert!(found > MODELS / 2 && found < MODELS, "{found} satisfiable");
}

#[test]
fn smt_agrees_with_enumeration() {
    let Some(cfg) = common::smt_solver(Duration::from_secs(30)) else { return common::skip("SMT") };
    for (k, m) in models().iter().enumerate() {
        let reference = verdict("enum", enumerate(&m.instance, EnumBudget::unlimited()).status());
        let r = smt::synthesize(&m.instance, &cfg);
        assert_eq!(verdict("smt", r.status()), reference, "model {k}:\n{}", m.graph().dump());
    }
}

#[test]
fn ilp_agrees_with_enumeration() {
    let Some(cfg) = common::ilp_solver(Duration::from_secs(30)) else { return common::skip("ILP") };
    for (k, m) in models().iter().enumerate() {
        let reference = verdict("enum", enumerate(&m.instance, EnumBudget::unlimited()).status());
        let r = ilp::synthesize(&m.instance, &cfg);
        assert_eq!(verdict("ilp", r.status()), reference, "model {k}:\n{}", m.graph().dump());
        // Relaxing integrality can only enlarge the feasible set.
        let lp = lp_bound_report(&emit_ilp(&m.instance, IlpMode::Relaxed), &cfg).unwrap();
        if reference == Verdict::Found {
            assert!(lp.feasible, "model {k}: ILP feasible but LP not");
        }
    }
}
