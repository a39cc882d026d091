mod common;

use common::{random_constraints, synthetic_world};
use par::circuit::random_circuit;
use par::constraints::ConstraintSet;
use par::data::one_hot;
use par::neural::{Activation, MlpModel};
use par::recourse::{
    compute_losses, generator_output_dim, loss_and_logit_grad, train_generator, EnabledTerms, FrozenModels,
    GeneratorConfig, LossWeights, RecourseModel, SoftRecourse,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(b.iter().map(|x| x * x).sum::<f64>().sqrt());
    if den < 1e-8 {
        num
    } else {
        num / den
    }
}

fn single_term(which: usize) -> EnabledTerms {
    let mut e = EnabledTerms::none();
    e.ppt_block = true;
    match which {
        0 => e.validity = true,
        1 => e.proximity = true,
        2 => e.plaus_pos = true,
        3 => e.plaus_neg = true,
        4 => e.sparsity = true,
        _ => e.entropy = true,
    }
    e
}

#[test]
fn composite_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let h = 1e-5;
    for config in 0..20 {
        let d = rng.gen_range(2..=5);
        let cards: Vec<usize> = (0..d).map(|_| rng.gen_range(2..=4)).collect();
        let cs = random_constraints(&cards, &mut rng);
        let p_plus = random_circuit(&cards, 4, &mut rng);
        let p_minus = random_circuit(&cards, 4, &mut rng);
        let dim: usize = cards.iter().sum();
        let classifier = MlpModel::random(&[dim, 6, 1], Activation::Sigmoid, Activation::Sigmoid, &mut rng);
        let models = FrozenModels { classifier: &classifier, p_plus: &p_plus, p_minus: &p_minus };
        let factual: Vec<usize> = cards.iter().map(|&c| rng.gen_range(0..c)).collect();
        let logits: Vec<f64> = (0..generator_output_dim(&cs)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        // a small budget keeps the proximity hinge active
        let base = LossWeights { budget: 0.2, neg_grad_clip: None, ..LossWeights::default() };

        let mut variants: Vec<LossWeights> = (0..6).map(|t| LossWeights { enabled: single_term(t), ..base.clone() }).collect();
        variants.push(base.clone());
        for w in variants {
            let (_, analytic) = loss_and_logit_grad(&logits, &factual, &cs, &models, &w).unwrap();
            let fd: Vec<f64> = (0..logits.len())
                .map(|i| {
                    let f = |s: f64| {
                        let mut l = logits.clone();
                        l[i] += s;
                        loss_and_logit_grad(&l, &factual, &cs, &models, &w).unwrap().0.total
                    };
                    (f(h) - f(-h)) / (2.0 * h)
                })
                .collect();
            let err = rel_err(&analytic, &fd);
            assert!(err < 1e-4, "config {config}, terms {:?}: relative error {err}", w.enabled);
        }
    }
}

fn plain(cards: &[usize]) -> ConstraintSet {
    ConstraintSet::new(cards.to_vec(), &vec![true; cards.len()], &[], &[], vec![]).unwrap()
}

#[test]
fn loss_term_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let cards = vec![3, 4, 2];
    let cs = plain(&cards);
    let p_plus = random_circuit(&cards, 3, &mut rng);
    let p_minus = random_circuit(&cards, 3, &mut rng);
    let classifier = MlpModel::random(&[9, 4, 1], Activation::Relu, Activation::Sigmoid, &mut rng);
    let models = FrozenModels { classifier: &classifier, p_plus: &p_plus, p_minus: &p_minus };
    let x = [1, 2, 0];

    // logits 1000 apart put exactly all mass on the factual
    let mut logits = vec![0.0; 9];
    let offsets = [0, 3, 7];
    for (j, &o) in offsets.iter().enumerate() {
        logits[o + x[j]] = 1000.0;
    }
    let soft = SoftRecourse::from_logits(&logits, &x, &cs).unwrap();
    let eval = compute_losses(&soft, &x, &cs, &models, &LossWeights::default()).unwrap();
    assert_eq!(eval.terms.proximity, 0.0);
    assert_eq!(eval.terms.sparsity, 0.0);
    assert_eq!(eval.terms.entropy, 0.0);
    let expected_plus = -p_plus.log_likelihood(&x).unwrap();
    assert!((eval.terms.plaus_pos - expected_plus).abs() < 1e-12);

    // uniform blocks: entropy averages log C_j, Σπ = 2/3 + 3/4 + 1/2
    let soft = SoftRecourse::from_logits(&[0.0; 9], &x, &cs).unwrap();
    let eval = compute_losses(&soft, &x, &cs, &models, &LossWeights::default()).unwrap();
    let mean_log_c = (3f64.ln() + 4f64.ln() + 2f64.ln()) / 3.0;
    assert!((eval.terms.entropy - mean_log_c).abs() < 1e-12);
    let pi: f64 = 2.0 / 3.0 + 0.75 + 0.5;
    let w = LossWeights { budget: pi - 2.0, ..LossWeights::default() };
    let eval = compute_losses(&soft, &x, &cs, &models, &w).unwrap();
    assert!((eval.terms.proximity - 4.0).abs() < 1e-12);
}

fn small_config(seed: u64) -> GeneratorConfig {
    GeneratorConfig {
        hidden: vec![32, 32],
        epochs: 8,
        steps_per_epoch: 10,
        batch_size: 16,
        pool_size: 100,
        seed,
        ..GeneratorConfig::default()
    }
}

#[test]
fn sparsity_alone_keeps_the_factual() {
    let world = synthetic_world(&[3, 4, 3, 2, 3], 40);
    let models = FrozenModels { classifier: &world.classifier, p_plus: &world.p_plus, p_minus: &world.p_minus };
    let cs = plain(&world.cards);
    let mut enabled = EnabledTerms::none();
    enabled.sparsity = true;
    let w = LossWeights { enabled, sparsity: 1.0, ..LossWeights::default() };
    let cfg = GeneratorConfig { epochs: 40, lr: 3e-3, ..small_config(1) };
    let (model, _) = train_generator(&models, 0.5, &cs, &w, &cfg).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let held_out: Vec<Vec<usize>> = std::iter::repeat_with(|| world.p_minus.sample(&mut rng))
        .filter(|x| world.classifier.score(&one_hot(x, &world.cards).unwrap()).unwrap() < 0.5)
        .take(200)
        .collect();
    let mean_pi: f64 = held_out
        .iter()
        .map(|x| model.soft(x, &world.p_plus).unwrap().change_probs.iter().sum::<f64>())
        .sum::<f64>()
        / held_out.len() as f64;
    assert!(mean_pi < 0.1, "mean expected changes {mean_pi}");
}

#[test]
fn disabled_objective_leaves_parameters_untouched() {
    let world = synthetic_world(&[3, 3, 2, 4], 41);
    let models = FrozenModels { classifier: &world.classifier, p_plus: &world.p_plus, p_minus: &world.p_minus };
    let cs = plain(&world.cards);
    let w = LossWeights { enabled: EnabledTerms::none(), ..LossWeights::default() };
    let trained = train_generator(&models, 0.5, &cs, &w, &small_config(2)).unwrap().0;
    let untrained = train_generator(&models, 0.5, &cs, &w, &GeneratorConfig { epochs: 0, ..small_config(2) }).unwrap().0;
    assert_eq!(trained, untrained);
}

#[test]
fn training_is_seeded_and_models_round_trip() {
    let world = synthetic_world(&[2, 3, 3], 42);
    let models = FrozenModels { classifier: &world.classifier, p_plus: &world.p_plus, p_minus: &world.p_minus };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cs = random_constraints(&world.cards, &mut rng);
    let cfg = GeneratorConfig { epochs: 2, ..small_config(3) };
    let (a, log) = train_generator(&models, 0.5, &cs, &LossWeights::default(), &cfg).unwrap();
    let (b, _) = train_generator(&models, 0.5, &cs, &LossWeights::default(), &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(log.epochs.len(), 2);

    let dir = tempfile::tempdir().unwrap();
    a.save(dir.path()).unwrap();
    let back = RecourseModel::load(dir.path()).unwrap();
    assert_eq!(back, a);

    for _ in 0..50 {
        let x = world.p_minus.sample(&mut rng);
        let soft = a.soft(&x, &world.p_plus).unwrap();
        for j in cs.immutable() {
            assert_eq!(soft.q[j][x[j]], 1.0);
        }
        assert!(cs.feasible(&a.generate(&x, &world.p_plus).unwrap(), &x));
    }
}
