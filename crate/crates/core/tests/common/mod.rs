#![allow(dead_code)]

use par::circuit::{random_circuit, Circuit};
use par::constraints::{CausalRule, ConstraintSet};
use par::data::one_hot;
use par::neural::{train_classifier, ClassifierConfig, MlpModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two random class-conditional circuits and a classifier trained to tell
/// their samples apart.
pub struct World {
    pub cards: Vec<usize>,
    pub p_plus: Circuit,
    pub p_minus: Circuit,
    pub classifier: MlpModel,
}

pub fn synthetic_world(cards: &[usize], seed: u64) -> World {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p_plus = random_circuit(cards, 4, &mut rng);
    let p_minus = random_circuit(cards, 4, &mut rng);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..1200 {
        let (c, label) = if i % 2 == 0 { (&p_plus, 1) } else { (&p_minus, 0) };
        x.push(one_hot(&c.sample(&mut rng), cards).unwrap());
        y.push(label);
    }
    let cfg = ClassifierConfig { epochs: 30, seed, ..ClassifierConfig::default() };
    let classifier = train_classifier(&x, &y, &cfg).unwrap();
    World { cards: cards.to_vec(), p_plus, p_minus, classifier }
}

/// Random constraint configuration over all-ordered features.
pub fn random_constraints(cards: &[usize], rng: &mut ChaCha8Rng) -> ConstraintSet {
    let d = cards.len();
    let immutable: Vec<usize> = (0..d).filter(|_| rng.gen_bool(0.2)).collect();
    let monotone: Vec<usize> = (0..d).filter(|j| !immutable.contains(j) && rng.gen_bool(0.3)).collect();
    let mut rules = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let effect = rng.gen_range(0..d);
        let cause = rng.gen_range(0..d);
        if effect != cause {
            rules.push(CausalRule { effect, cause });
        }
    }
    ConstraintSet::new(cards.to_vec(), &vec![true; d], &immutable, &monotone, rules).unwrap()
}
