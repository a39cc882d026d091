use std::path::PathBuf;

use par::bench::synthetic::{adult_like_schema, adult_like_table};
use par::bench::{
    cross_model_yhat, generate_records, run_experiment_on, validity, ExperimentConfig, FoldContext, FoldPlan,
    MadWeights, MeanStd, RecourseRecord,
};
use par::data::{Dataset, Schema};
use par::refine::Scorer;
use proptest::prelude::*;

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig { folds: 2, max_denied: 60, ..ExperimentConfig::default() };
    cfg.classifier.epochs = 20;
    cfg.generator.epochs = 6;
    cfg.generator.pool_size = 200;
    cfg
}

fn synthetic() -> (Schema, Dataset) {
    let schema = adult_like_schema();
    let data = Dataset::from_table(&adult_like_table(1500, 17), &schema).unwrap();
    (schema, data)
}

fn without_timing(mut records: Vec<RecourseRecord>) -> Vec<RecourseRecord> {
    for r in &mut records {
        r.generate_seconds = 0.0;
        r.refine_seconds = 0.0;
    }
    records
}

#[test]
fn shipped_schemas_and_configs_load() {
    for path in ["data/credit/credit.toml", "data/adult/adult.toml", "data/gmsc/gmsc.toml"] {
        Schema::load(root().join(path)).unwrap_or_else(|e| panic!("{path}: {e}"));
    }
    for path in ["../../configs/credit.toml", "../../configs/credit_quick.toml"] {
        let cfg = ExperimentConfig::load(root().join(path)).unwrap();
        assert!(cfg.data.exists() && cfg.schema.exists());
    }
}

#[test]
fn seeded_runs_reproduce_and_refinement_only_removes_changes() {
    let (schema, data) = synthetic();
    let cfg = small_config();
    let a = run_experiment_on(&schema, &data, &cfg, None).unwrap();
    let b = run_experiment_on(&schema, &data, &cfg, None).unwrap();
    assert!(!a.records.is_empty());
    assert_eq!(without_timing(a.records.clone()), without_timing(b.records));

    for r in &a.records {
        assert!(r.sparsity_refined.unwrap() <= r.sparsity_decoded);
        assert!(r.generate_seconds >= 0.0 && r.refine_seconds >= 0.0);
    }
    for fold in &a.report.folds {
        let (pre, post) = (fold.pre.as_ref().unwrap(), fold.post.as_ref().unwrap());
        assert!(post.validity >= pre.validity);
        assert_eq!((pre.actionability, post.actionability), (100.0, 100.0));
        assert_eq!((pre.causality, post.causality), (Some(100.0), Some(100.0)));
        assert_eq!(post.count, fold.denied);
        assert!(post.nll.mean.is_finite());
    }
}

#[test]
fn cross_model_scores() {
    let (schema, data) = synthetic();
    let cfg = small_config();
    let plan = FoldPlan::new(data.len(), cfg.folds, cfg.seed).unwrap();
    let ctx = FoldContext::build(&data, &schema, &plan.folds[0], 0, &cfg).unwrap();
    let (model, _) = ctx.train_generator(&cfg.loss, &cfg.generator_config(0)).unwrap();
    let denied = ctx.denied(cfg.max_denied);
    let records = generate_records(&ctx, &model, &denied, true, &cfg.refine_config(ctx.threshold())).unwrap();

    // identity: scoring with the primary classifier reproduces the mean score
    let primary = records.iter().map(|r| r.score_refined.unwrap()).sum::<f64>() / records.len() as f64;
    assert!((cross_model_yhat(&records, &ctx.scorer()) - primary).abs() < 1e-12);

    // near-boundary baseline: greedy single-feature flips, finishing with
    // the flip that clears tau by the smallest margin
    let f = ctx.scorer();
    let cs = &ctx.prepared.constraints;
    let tau = ctx.threshold();
    let mut boundary = Vec::new();
    for r in &records {
        let x = &r.factual;
        let mut c = x.clone();
        for _ in 0..cs.mutable().len() {
            let moves: Vec<(f64, Vec<usize>)> = cs
                .mutable()
                .into_iter()
                .flat_map(|j| (0..ctx.cards[j]).map(move |v| (j, v)))
                .filter(|&(j, v)| v != c[j])
                .map(|(j, v)| {
                    let mut n = c.clone();
                    n[j] = v;
                    (f.score(&n), n)
                })
                .filter(|(_, n)| cs.feasible(n, x))
                .collect();
            let clearing = moves.iter().filter(|(s, _)| *s >= tau).min_by(|a, b| a.0.total_cmp(&b.0));
            if let Some((_, n)) = clearing {
                boundary.push(RecourseRecord { refined: Some(n.clone()), ..r.clone() });
                break;
            }
            match moves.into_iter().max_by(|a, b| a.0.total_cmp(&b.0)) {
                Some((_, n)) => c = n,
                None => break,
            }
        }
    }
    assert!(boundary.len() >= 10, "too few near-boundary recourses: {}", boundary.len());
    let alt = par::refine::OneHotClassifier { model: &ctx.alt_classifier, cards: &ctx.cards };
    let par_alt = cross_model_yhat(&records, &alt);
    let boundary_alt = cross_model_yhat(&boundary, &alt);
    assert!(par_alt > boundary_alt, "PAR {par_alt:.3} vs near-boundary {boundary_alt:.3}");
}

proptest! {
    #[test]
    fn similarity_is_a_nonnegative_symmetric_distance(
        rows in proptest::collection::vec(proptest::collection::vec(0usize..6, 4), 2..40),
        a in proptest::collection::vec(0usize..6, 4),
        b in proptest::collection::vec(0usize..6, 4),
        ordered in proptest::collection::vec(any::<bool>(), 4),
    ) {
        let mad = MadWeights::fit(&rows, &ordered);
        prop_assert!(mad.mad.iter().all(|&m| m >= 1.0));
        let s = mad.similarity(&a, &b);
        prop_assert!(s >= 0.0);
        prop_assert_eq!(s, mad.similarity(&b, &a));
        prop_assert_eq!(s == 0.0, a == b);
    }

    #[test]
    fn validity_is_a_percentage(scores in proptest::collection::vec(0.0f64..1.0, 1..100), tau in 0.0f64..1.0) {
        let v = validity(&scores, tau).unwrap();
        prop_assert!((0.0..=100.0).contains(&v));
        let count = scores.iter().filter(|&&s| s >= tau).count();
        prop_assert!((v - 100.0 * count as f64 / scores.len() as f64).abs() < 1e-9);
    }

    #[test]
    fn mean_std_matches_two_pass_formula(values in proptest::collection::vec(-1e3f64..1e3, 2..50)) {
        let ms = MeanStd::of(&values);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        prop_assert!((ms.mean - mean).abs() < 1e-9);
        prop_assert!((ms.std - var.sqrt()).abs() < 1e-7);
    }
}
