mod common;

use common::random_constraints;
use par::circuit::random_circuit;
use par::constraints::ConstraintSet;
use par::refine::{refine, repair_causality, sparsify, RefineConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Case {
    cs: ConstraintSet,
    factual: Vec<usize>,
    decoded: Vec<usize>,
    weights: Vec<Vec<f64>>,
}

/// Random constraints, a feasible decoded candidate, and an additive score table.
fn case(seed: u64) -> Case {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.gen_range(2..=6);
    let cards: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=4)).collect();
    let cs = random_constraints(&cards, &mut rng);
    let factual: Vec<usize> = cards.iter().map(|&c| rng.gen_range(0..c)).collect();
    let logits: Vec<Vec<f64>> = cards.iter().map(|&c| (0..c).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let decoded = cs.decode(&logits, &factual).unwrap();
    let weights = cards.iter().map(|&c| (0..c).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    Case { cs, factual, decoded, weights }
}

fn scorer(weights: &[Vec<f64>]) -> impl Fn(&[usize]) -> f64 + '_ {
    move |x: &[usize]| {
        let s: f64 = x.iter().enumerate().map(|(j, &a)| weights[j][a]).sum();
        1.0 / (1.0 + (-s).exp())
    }
}

#[test]
fn ten_thousand_refines_stay_feasible_and_within_budget() {
    let mut violations = 0;
    for seed in 0..10_000u64 {
        let c = case(seed);
        let f = scorer(&c.weights);
        let budget = c.cs.mutable_distance(&c.decoded, &c.factual);
        let out = refine(&c.decoded, &c.factual, &c.cs, &f, None, &RefineConfig { threshold: 0.5, delta_max: None });
        if !(c.cs.feasible(&out.assignment, &c.factual) && c.cs.within_budget(&out.assignment, &c.factual, budget)) {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn a_reachable_single_move_implies_valid_output(seed in any::<u64>()) {
        let c = case(seed);
        let f = scorer(&c.weights);
        let cfg = RefineConfig { threshold: 0.5, delta_max: None };
        let budget = c.cs.mutable_distance(&c.decoded, &c.factual);
        let out = refine(&c.decoded, &c.factual, &c.cs, &f, None, &cfg);

        // oracle: the start point after clamping and repair, then every single move
        let mut start = c.decoded.clone();
        for j in c.cs.immutable() {
            start[j] = c.factual[j];
        }
        let start = repair_causality(&start, &c.factual, c.cs.rules());
        let ok = |x: &[usize]| c.cs.feasible(x, &c.factual) && c.cs.within_budget(x, &c.factual, budget);
        let start = if ok(&start) { start } else { c.factual.clone() };
        let mut reachable = f(&start) >= 0.5;
        for j in c.cs.mutable() {
            for v in 0..c.cs.cardinalities()[j] {
                let mut t = start.clone();
                t[j] = v;
                let t = repair_causality(&t, &c.factual, c.cs.rules());
                reachable |= ok(&t) && f(&t) >= 0.5;
            }
        }
        prop_assert_eq!(out.score >= 0.5, reachable);
        prop_assert!((out.score - f(&out.assignment)).abs() < 1e-15);
    }

    #[test]
    fn sparsify_keeps_validity_and_never_adds_changes(seed in any::<u64>()) {
        let c = case(seed);
        let f = scorer(&c.weights);
        let budget = c.cs.mutable_distance(&c.decoded, &c.factual);
        let threshold = f(&c.decoded).min(0.99);
        let cfg = RefineConfig { threshold, delta_max: None };
        let out = sparsify(&c.decoded, &c.factual, &c.cs, &f, None, budget, &cfg);
        prop_assert!(f(&out) >= threshold);
        prop_assert!(c.cs.feasible(&out, &c.factual));
        prop_assert!(c.cs.mutable_distance(&out, &c.factual) <= budget);
        // every remaining change is individually needed
        for j in c.cs.mutable().into_iter().filter(|&j| out[j] != c.factual[j]) {
            let mut t = out.clone();
            t[j] = c.factual[j];
            let t = repair_causality(&t, &c.factual, c.cs.rules());
            prop_assert!(!(c.cs.feasible(&t, &c.factual) && f(&t) >= threshold));
        }
    }

    #[test]
    fn plausibility_guard_never_lowers_loglik(seed in any::<u64>()) {
        let c = case(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_circuit(c.cs.cardinalities(), 4, &mut rng);
        let f = scorer(&c.weights);
        let budget = c.cs.mutable_distance(&c.decoded, &c.factual);
        let cfg = RefineConfig { threshold: f(&c.decoded).min(0.99), delta_max: Some(0.0) };
        let out = sparsify(&c.decoded, &c.factual, &c.cs, &f, Some(&p), budget, &cfg);
        prop_assert!(p.log_likelihood(&out).unwrap() >= p.log_likelihood(&c.decoded).unwrap() - 1e-12);
    }

    #[test]
    fn repair_is_idempotent_and_restores_every_rule(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = case(seed);
        let x: Vec<usize> = c.cs.cardinalities().iter().map(|&k| rng.gen_range(0..k)).collect();
        let once = repair_causality(&x, &c.factual, c.cs.rules());
        prop_assert!(c.cs.rules().iter().all(|r| r.holds(&once, &c.factual)));
        prop_assert_eq!(repair_causality(&once, &c.factual, c.cs.rules()), once.clone());
        if c.cs.rules().iter().all(|r| r.holds(&x, &c.factual)) {
            prop_assert_eq!(once, x);
        }
    }
}
