use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, MadWeights, MeanStd, MetricInputs, MetricsReport};
use crate::circuit::{learn_structure, Circuit, LearnConfig};
use crate::constraints::ConstraintSet;
use crate::data::{bin_diagnostics, one_hot, BinDiagnostics, Dataset, Discretizer, Schema, DEFAULT_BINS};
use crate::error::{io_err, Error, Result};
use crate::neural::{
    fit_bce, select_threshold_youden, ClassifierConfig, ClassifierManifest, MlpModel, Activation,
};
use crate::recourse::{train_generator, FrozenModels, GeneratorConfig, LossWeights, RecourseModel, TrainingLog};
use crate::refine::{refine, OneHotClassifier, RefineConfig, Scorer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdPolicy {
    #[default]
    Fixed,
    Youden,
}

/// Everything a fold-based run needs. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub data: PathBuf,
    pub schema: PathBuf,
    pub folds: usize,
    pub seed: u64,
    pub bins: usize,
    pub threshold_policy: ThresholdPolicy,
    /// Decision threshold under the fixed policy.
    pub threshold: f64,
    /// Cap on denied test factuals per fold.
    pub max_denied: usize,
    pub local_search: bool,
    pub delta_max: Option<f64>,
    /// Seed of the second classifier used for the cross-model check.
    pub alt_classifier_seed: u64,
    pub classifier: ClassifierConfig,
    pub circuit: LearnConfig,
    pub generator: GeneratorConfig,
    pub loss: LossWeights,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            data: PathBuf::new(),
            schema: PathBuf::new(),
            folds: 5,
            seed: 0,
            bins: DEFAULT_BINS,
            threshold_policy: ThresholdPolicy::Fixed,
            threshold: 0.5,
            max_denied: 500,
            local_search: true,
            delta_max: None,
            alt_classifier_seed: 1,
            classifier: ClassifierConfig::default(),
            circuit: LearnConfig::default(),
            generator: GeneratorConfig::default(),
            loss: LossWeights::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.data = base.join(&cfg.data);
        cfg.schema = base.join(&cfg.schema);
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn check(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Precondition(format!("need at least 2 folds, got {}", self.folds)));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::Precondition(format!("threshold {} outside [0, 1]", self.threshold)));
        }
        self.loss.check()
    }

    pub fn refine_config(&self, threshold: f64) -> RefineConfig {
        RefineConfig { threshold, delta_max: self.delta_max }
    }

    fn fold_seed(&self, fold: usize, stream: u64) -> u64 {
        self.seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((fold as u64) << 8)
            .wrapping_add(stream)
    }

    pub fn circuit_seed(&self, fold: usize) -> u64 {
        self.fold_seed(fold, 1)
    }

    pub fn classifier_config(&self, fold: usize) -> ClassifierConfig {
        ClassifierConfig { seed: self.fold_seed(fold, 2) ^ self.classifier.seed, ..self.classifier.clone() }
    }

    pub fn alt_classifier_config(&self, fold: usize) -> ClassifierConfig {
        let primary = self.classifier_config(fold);
        ClassifierConfig { seed: primary.seed ^ self.alt_classifier_seed.wrapping_add(1), ..primary }
    }

    pub fn generator_config(&self, fold: usize) -> GeneratorConfig {
        GeneratorConfig { seed: self.fold_seed(fold, 3) ^ self.generator.seed, ..self.generator.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded k-fold partition of `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub seed: u64,
    pub folds: Vec<Fold>,
}

impl FoldPlan {
    pub fn new(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k < 2 || n < k {
            return Err(Error::Precondition(format!("cannot split {n} rows into {k} folds")));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let folds = (0..k)
            .map(|i| {
                let (lo, hi) = (i * n / k, (i + 1) * n / k);
                let mut test = order[lo..hi].to_vec();
                test.sort_unstable();
                let mut train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
                train.sort_unstable();
                Fold { train, test }
            })
            .collect();
        Ok(FoldPlan { seed, folds })
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }
}

/// Discretized train and test splits of one fold.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub disc: Discretizer,
    pub constraints: ConstraintSet,
    pub train_codes: Vec<Vec<usize>>,
    pub train_labels: Vec<u8>,
    pub test_codes: Vec<Vec<usize>>,
    pub test_labels: Vec<u8>,
    pub diagnostics: BinDiagnostics,
}

impl Prepared {
    pub fn cardinalities(&self) -> Vec<usize> {
        self.disc.cardinalities()
    }
}

pub fn prepare(train: &Dataset, test: &Dataset, schema: &Schema, bins: usize) -> Result<Prepared> {
    prepare_with(Discretizer::fit(&train.features, schema, bins)?, train, test, schema)
}

/// Encodes both splits with an already fitted discretizer.
pub fn prepare_with(disc: Discretizer, train: &Dataset, test: &Dataset, schema: &Schema) -> Result<Prepared> {
    let constraints = ConstraintSet::from_schema(schema, &disc)?;
    Ok(Prepared {
        train_codes: disc.transform_codes(&train.features)?,
        test_codes: disc.transform_codes(&test.features)?,
        diagnostics: bin_diagnostics(&disc, &test.features)?,
        train_labels: train.labels.clone(),
        test_labels: test.labels.clone(),
        constraints,
        disc,
    })
}

/// Learns `p⁺` and `p⁻` on the ground-truth class splits.
pub fn train_circuits(
    codes: &[Vec<usize>],
    labels: &[u8],
    cards: &[usize],
    cfg: &LearnConfig,
    seed: u64,
) -> Result<(Circuit, Circuit)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let split = |class: u8| -> Vec<Vec<usize>> {
        codes.iter().zip(labels).filter(|(_, &y)| y == class).map(|(x, _)| x.clone()).collect()
    };
    let p_plus = learn_structure(&split(1), cards, cfg, &mut rng)?;
    let p_minus = learn_structure(&split(0), cards, cfg, &mut rng)?;
    Ok((p_plus, p_minus))
}

pub fn encode_all(codes: &[Vec<usize>], cards: &[usize]) -> Result<Vec<Vec<f64>>> {
    codes.iter().map(|x| one_hot(x, cards)).collect()
}

/// Trains the classifier on one-hot codes. Under the Youden policy the
/// threshold is chosen on a held-out 20% of the training rows and the model
/// fitted on the remaining 80% is kept.
pub fn train_fold_classifier(
    codes: &[Vec<usize>],
    labels: &[u8],
    cards: &[usize],
    cfg: &ClassifierConfig,
    policy: ThresholdPolicy,
    fixed_threshold: f64,
) -> Result<(MlpModel, ClassifierManifest)> {
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    let x = encode_all(codes, cards)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dims = vec![x[0].len()];
    dims.extend(&cfg.hidden);
    dims.push(1);
    let mut model = MlpModel::random(&dims, Activation::Relu, Activation::Sigmoid, &mut rng);
    let threshold = match policy {
        ThresholdPolicy::Fixed => {
            fit_bce(&mut model, &x, labels, cfg, &mut rng)?;
            fixed_threshold
        }
        ThresholdPolicy::Youden => {
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.shuffle(&mut rng);
            let cut = (x.len() * 4 / 5).clamp(1, x.len() - 1);
            let pick = |ids: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
                (ids.iter().map(|&i| x[i].clone()).collect(), ids.iter().map(|&i| labels[i]).collect())
            };
            let (xt, yt) = pick(&idx[..cut]);
            let (xv, yv) = pick(&idx[cut..]);
            fit_bce(&mut model, &xt, &yt, cfg, &mut rng)?;
            let scores = xv.iter().map(|r| model.score(r)).collect::<Result<Vec<_>>>()?;
            select_threshold_youden(&scores, &yv)?
        }
    };
    let manifest = ClassifierManifest {
        threshold,
        youden: policy == ThresholdPolicy::Youden,
        seed: cfg.seed,
        epochs: cfg.epochs,
        input_dim: dims[0],
    };
    Ok((model, manifest))
}

/// Frozen pretraining artifacts of one fold.
pub struct FoldContext {
    pub fold: usize,
    pub prepared: Prepared,
    pub cards: Vec<usize>,
    pub classifier: MlpModel,
    pub manifest: ClassifierManifest,
    pub alt_classifier: MlpModel,
    pub p_plus: Circuit,
    pub p_minus: Circuit,
    pub mad: MadWeights,
}

impl FoldContext {
    pub fn build(data: &Dataset, schema: &Schema, split: &Fold, fold: usize, cfg: &ExperimentConfig) -> Result<Self> {
        let prepared = prepare(&data.select(&split.train), &data.select(&split.test), schema, cfg.bins)?;
        let cards = prepared.cardinalities();
        let (p_plus, p_minus) = train_circuits(
            &prepared.train_codes,
            &prepared.train_labels,
            &cards,
            &cfg.circuit,
            cfg.circuit_seed(fold),
        )?;
        let (classifier, manifest) = train_fold_classifier(
            &prepared.train_codes,
            &prepared.train_labels,
            &cards,
            &cfg.classifier_config(fold),
            cfg.threshold_policy,
            cfg.threshold,
        )?;
        let (alt_classifier, _) = train_fold_classifier(
            &prepared.train_codes,
            &prepared.train_labels,
            &cards,
            &cfg.alt_classifier_config(fold),
            ThresholdPolicy::Fixed,
            cfg.threshold,
        )?;
        let mad = MadWeights::fit(&prepared.train_codes, &prepared.disc.ordered_flags());
        Ok(FoldContext { fold, prepared, cards, classifier, manifest, alt_classifier, p_plus, p_minus, mad })
    }

    /// Reloads the artifacts written by [`FoldContext::save`].
    pub fn load(dir: impl AsRef<Path>, data: &Dataset, schema: &Schema, split: &Fold, fold: usize) -> Result<Self> {
        let dir = dir.as_ref();
        let disc = Discretizer::load(dir.join("discretizer.json"))?;
        let prepared = prepare_with(disc, &data.select(&split.train), &data.select(&split.test), schema)?;
        let cards = prepared.cardinalities();
        let mad = MadWeights::fit(&prepared.train_codes, &prepared.disc.ordered_flags());
        Ok(FoldContext {
            fold,
            cards,
            classifier: MlpModel::load(dir.join("classifier.txt"))?,
            manifest: read_json(dir.join("classifier.json"))?,
            alt_classifier: MlpModel::load(dir.join("classifier_alt.txt"))?,
            p_plus: Circuit::load(dir.join("p_plus.txt"))?,
            p_minus: Circuit::load(dir.join("p_minus.txt"))?,
            prepared,
            mad,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.manifest.threshold
    }

    pub fn models(&self) -> FrozenModels<'_> {
        FrozenModels { classifier: &self.classifier, p_plus: &self.p_plus, p_minus: &self.p_minus }
    }

    pub fn scorer(&self) -> OneHotClassifier<'_> {
        OneHotClassifier { model: &self.classifier, cards: &self.cards }
    }

    /// Test rows the classifier denies, in fold order, at most `max`.
    pub fn denied(&self, max: usize) -> Vec<usize> {
        let f = self.scorer();
        let tau = self.threshold();
        self.prepared
            .test_codes
            .iter()
            .enumerate()
            .filter(|(_, x)| f.score(x) < tau)
            .map(|(i, _)| i)
            .take(max)
            .collect()
    }

    pub fn train_generator(&self, weights: &LossWeights, cfg: &GeneratorConfig) -> Result<(RecourseModel, TrainingLog)> {
        train_generator(&self.models(), self.threshold(), &self.prepared.constraints, weights, cfg)
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        self.prepared.disc.save(dir.join("discretizer.json"))?;
        self.classifier.save(dir.join("classifier.txt"))?;
        self.alt_classifier.save(dir.join("classifier_alt.txt"))?;
        self.p_plus.save(dir.join("p_plus.txt"))?;
        self.p_minus.save(dir.join("p_minus.txt"))?;
        write_json(dir.join("classifier.json"), &self.manifest)?;
        write_json(dir.join("diagnostics.json"), &self.prepared.diagnostics)
    }
}

/// One denied factual with its decoded and refined recourses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecourseRecord {
    pub fold: usize,
    pub test_index: usize,
    pub factual: Vec<usize>,
    pub decoded: Vec<usize>,
    pub refined: Option<Vec<usize>>,
    pub score_decoded: f64,
    pub score_refined: Option<f64>,
    pub nll_decoded: f64,
    pub nll_refined: Option<f64>,
    pub sparsity_decoded: usize,
    pub sparsity_refined: Option<usize>,
    pub similarity_decoded: f64,
    pub similarity_refined: Option<f64>,
    pub generate_seconds: f64,
    pub refine_seconds: f64,
}

impl RecourseRecord {
    pub fn final_recourse(&self) -> &[usize] {
        self.refined.as_deref().unwrap_or(&self.decoded)
    }
}

/// Decodes (and optionally refines) a recourse for each listed test row.
pub fn generate_records(
    ctx: &FoldContext,
    model: &RecourseModel,
    test_rows: &[usize],
    local_search: bool,
    refine_cfg: &RefineConfig,
) -> Result<Vec<RecourseRecord>> {
    let f = ctx.scorer();
    let cs = &ctx.prepared.constraints;
    test_rows
        .iter()
        .map(|&i| {
            let factual = ctx.prepared.test_codes[i].clone();
            let start = Instant::now();
            let decoded = model.generate(&factual, &ctx.p_plus)?;
            let generate_seconds = start.elapsed().as_secs_f64();
            let (refined, refine_seconds) = if local_search {
                let start = Instant::now();
                let c = refine(&decoded, &factual, cs, &f, Some(&ctx.p_plus), refine_cfg);
                (Some(c.assignment), start.elapsed().as_secs_f64())
            } else {
                (None, 0.0)
            };
            let nll = |x: &[usize]| ctx.p_plus.log_likelihood(x).map(|ll| -ll);
            Ok(RecourseRecord {
                fold: ctx.fold,
                test_index: i,
                score_decoded: f.score(&decoded),
                score_refined: refined.as_deref().map(|x| f.score(x)),
                nll_decoded: nll(&decoded)?,
                nll_refined: refined.as_deref().map(nll).transpose()?,
                sparsity_decoded: cs.mutable_distance(&decoded, &factual),
                sparsity_refined: refined.as_deref().map(|x| cs.mutable_distance(x, &factual)),
                similarity_decoded: ctx.mad.similarity(&factual, &decoded),
                similarity_refined: refined.as_deref().map(|x| ctx.mad.similarity(&factual, x)),
                generate_seconds,
                refine_seconds,
                factual,
                decoded,
                refined,
            })
        })
        .collect()
}

/// Mean acceptance score of the final recourses under another scorer.
pub fn cross_model_yhat(records: &[RecourseRecord], f_alt: &impl Scorer) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    records.iter().map(|r| f_alt.score(r.final_recourse())).sum::<f64>() / records.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub threshold: f64,
    pub denied: usize,
    pub diagnostics: BinDiagnostics,
    pub training: Option<TrainingLog>,
    /// Set when the fold was skipped.
    pub skipped: Option<String>,
    pub pre: Option<MetricsReport>,
    pub post: Option<MetricsReport>,
    pub cross_model_yhat: Option<f64>,
}

impl FoldReport {
    pub fn new(ctx: &FoldContext, denied: usize) -> Self {
        FoldReport {
            fold: ctx.fold,
            threshold: ctx.threshold(),
            denied,
            diagnostics: ctx.prepared.diagnostics.clone(),
            training: None,
            skipped: (denied == 0).then(|| "no denied test factuals".to_string()),
            pre: None,
            post: None,
            cross_model_yhat: None,
        }
    }
}

/// Metrics of decoded (pre) and refined (post) recourses.
pub fn evaluate_records(
    ctx: &FoldContext,
    records: &[RecourseRecord],
) -> Result<(MetricsReport, Option<MetricsReport>)> {
    let cs = &ctx.prepared.constraints;
    let tau = ctx.threshold();
    let factuals: Vec<Vec<usize>> = records.iter().map(|r| r.factual.clone()).collect();
    let decoded: Vec<Vec<usize>> = records.iter().map(|r| r.decoded.clone()).collect();
    let scores: Vec<f64> = records.iter().map(|r| r.score_decoded).collect();
    let gen_t: Vec<f64> = records.iter().map(|r| r.generate_seconds).collect();
    let pre = evaluate(
        &MetricInputs { factuals: &factuals, recourses: &decoded, scores: &scores, seconds: &gen_t },
        tau,
        cs,
        &ctx.p_plus,
        &ctx.mad,
    )?;
    if records.iter().any(|r| r.refined.is_none()) {
        return Ok((pre, None));
    }
    let refined: Vec<Vec<usize>> = records.iter().map(|r| r.final_recourse().to_vec()).collect();
    let scores: Vec<f64> = records.iter().filter_map(|r| r.score_refined).collect();
    let total_t: Vec<f64> = records.iter().map(|r| r.generate_seconds + r.refine_seconds).collect();
    let post = evaluate(
        &MetricInputs { factuals: &factuals, recourses: &refined, scores: &scores, seconds: &total_t },
        tau,
        cs,
        &ctx.p_plus,
        &ctx.mad,
    )?;
    Ok((pre, Some(post)))
}

/// Fold means summarized as mean ± sample std across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub folds: usize,
    pub validity: MeanStd,
    pub actionability: MeanStd,
    pub causality: Option<MeanStd>,
    pub nll: MeanStd,
    pub similarity: MeanStd,
    pub sparsity: MeanStd,
    pub median_time: MeanStd,
    pub mean_yhat: MeanStd,
}

pub fn aggregate(reports: &[&MetricsReport]) -> Option<AggregateReport> {
    if reports.is_empty() {
        return None;
    }
    let of = |f: fn(&MetricsReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
    let causal: Option<Vec<f64>> = reports.iter().map(|r| r.causality).collect();
    Some(AggregateReport {
        folds: reports.len(),
        validity: of(|r| r.validity),
        actionability: of(|r| r.actionability),
        causality: causal.map(|c| MeanStd::of(&c)),
        nll: of(|r| r.nll.mean),
        similarity: of(|r| r.similarity.mean),
        sparsity: of(|r| r.sparsity.mean),
        median_time: of(|r| r.median_time),
        mean_yhat: of(|r| r.mean_yhat),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub dataset: String,
    pub config: ExperimentConfig,
    pub folds: Vec<FoldReport>,
    pub pre: Option<AggregateReport>,
    pub post: Option<AggregateReport>,
    pub cross_model_yhat: Option<MeanStd>,
}

impl ExperimentReport {
    pub fn from_folds(dataset: String, config: ExperimentConfig, folds: Vec<FoldReport>) -> Self {
        let pre: Vec<&MetricsReport> = folds.iter().filter_map(|f| f.pre.as_ref()).collect();
        let post: Vec<&MetricsReport> = folds.iter().filter_map(|f| f.post.as_ref()).collect();
        let cross: Vec<f64> = folds.iter().filter_map(|f| f.cross_model_yhat).collect();
        ExperimentReport {
            dataset,
            pre: aggregate(&pre),
            post: aggregate(&post),
            cross_model_yhat: (!cross.is_empty()).then(|| MeanStd::of(&cross)),
            config,
            folds,
        }
    }
}

/// Outcome of a full run: the report plus every per-record row.
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub records: Vec<RecourseRecord>,
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<(Schema, Dataset)> {
    let schema = Schema::load(&cfg.schema)?;
    let data = Dataset::load(&cfg.data, &schema)?;
    Ok((schema, data))
}

/// Runs one fold end to end; models are written under `out` when given.
pub fn run_fold(
    data: &Dataset,
    schema: &Schema,
    split: &Fold,
    fold: usize,
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<(FoldReport, Vec<RecourseRecord>)> {
    let ctx = FoldContext::build(data, schema, split, fold, cfg)?;
    let denied = ctx.denied(cfg.max_denied);
    let mut report = FoldReport::new(&ctx, denied.len());
    if denied.is_empty() {
        return Ok((report, Vec::new()));
    }
    let gen_cfg = cfg.generator_config(fold);
    let (model, log) = ctx.train_generator(&cfg.loss, &gen_cfg)?;
    if let Some(dir) = out {
        let dir = dir.join(format!("fold{fold}"));
        ctx.save(&dir)?;
        model.save(dir.join("generator"))?;
    }
    let records = generate_records(&ctx, &model, &denied, cfg.local_search, &cfg.refine_config(ctx.threshold()))?;
    report.training = Some(log);
    score_fold(&ctx, &records, &mut report)?;
    Ok((report, records))
}

/// Fills the pre/post metrics and the cross-model score of a fold report.
pub fn score_fold(ctx: &FoldContext, records: &[RecourseRecord], report: &mut FoldReport) -> Result<()> {
    let (pre, post) = evaluate_records(ctx, records)?;
    report.pre = Some(pre);
    report.post = post;
    report.cross_model_yhat = Some(cross_model_yhat(
        records,
        &OneHotClassifier { model: &ctx.alt_classifier, cards: &ctx.cards },
    ));
    Ok(())
}

pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentRun> {
    cfg.check()?;
    let (schema, data) = load_inputs(cfg)?;
    run_experiment_on(&schema, &data, cfg, out)
}

/// Same as [`run_experiment`] on an already loaded dataset.
pub fn run_experiment_on(
    schema: &Schema,
    data: &Dataset,
    cfg: &ExperimentConfig,
    out: Option<&Path>,
) -> Result<ExperimentRun> {
    let plan = FoldPlan::new(data.len(), cfg.folds, cfg.seed)?;
    let mut folds = Vec::with_capacity(plan.len());
    let mut records = Vec::new();
    for (i, split) in plan.folds.iter().enumerate() {
        let (report, recs) = run_fold(data, schema, split, i, cfg, out)?;
        folds.push(report);
        records.extend(recs);
    }
    let report = ExperimentReport::from_folds(schema.name.clone(), cfg.clone(), folds);
    if let Some(dir) = out {
        write_json(dir.join("report.json"), &report)?;
        write_records_csv(dir.join("records.csv"), &records)?;
    }
    Ok(ExperimentRun { report, records })
}

/// One row of the ablation matrix: which of `p⁺`, `p⁻` and validity are on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationVariant {
    pub name: String,
    pub plaus_pos: bool,
    pub plaus_neg: bool,
    pub validity: bool,
}

impl AblationVariant {
    pub fn new(name: &str, plaus_pos: bool, plaus_neg: bool, validity: bool) -> Self {
        AblationVariant { name: name.into(), plaus_pos, plaus_neg, validity }
    }

    pub fn apply(&self, weights: &LossWeights) -> LossWeights {
        let mut w = weights.clone();
        w.enabled.plaus_pos &= self.plaus_pos;
        w.enabled.plaus_neg &= self.plaus_neg;
        w.enabled.validity &= self.validity;
        w
    }
}

pub fn ablation_matrix() -> Vec<AblationVariant> {
    vec![
        AblationVariant::new("full", true, true, true),
        AblationVariant::new("val_only", false, false, true),
        AblationVariant::new("plaus_only", true, true, false),
        AblationVariant::new("val_plus", true, false, true),
        AblationVariant::new("none", false, false, false),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: AblationVariant,
    /// Validity as a fraction per fold.
    pub fold_validity: Vec<f64>,
    pub validity: MeanStd,
    pub nll: MeanStd,
    pub sparsity: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub dataset: String,
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, name: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.variant.name == name)
    }
}

/// Trains one generator per variant and fold and scores decoded recourses
/// without local search. Pretraining is shared across variants.
pub fn run_ablation_on(
    schema: &Schema,
    data: &Dataset,
    cfg: &ExperimentConfig,
    variants: &[AblationVariant],
) -> Result<AblationReport> {
    let plan = FoldPlan::new(data.len(), cfg.folds, cfg.seed)?;
    let mut per_variant: Vec<Vec<MetricsReport>> = vec![Vec::new(); variants.len()];
    for (i, split) in plan.folds.iter().enumerate() {
        let ctx = FoldContext::build(data, schema, split, i, cfg)?;
        let denied = ctx.denied(cfg.max_denied);
        if denied.is_empty() {
            continue;
        }
        let gen_cfg = cfg.generator_config(i);
        for (v, variant) in variants.iter().enumerate() {
            let (model, _) = ctx.train_generator(&variant.apply(&cfg.loss), &gen_cfg)?;
            let records = generate_records(&ctx, &model, &denied, false, &cfg.refine_config(ctx.threshold()))?;
            per_variant[v].push(evaluate_records(&ctx, &records)?.0);
        }
    }
    let rows = variants
        .iter()
        .zip(per_variant)
        .map(|(variant, reports)| {
            let fold_validity: Vec<f64> = reports.iter().map(|r| r.validity / 100.0).collect();
            AblationRow {
                variant: variant.clone(),
                validity: MeanStd::of(&fold_validity),
                nll: MeanStd::of(&reports.iter().map(|r| r.nll.mean).collect::<Vec<_>>()),
                sparsity: MeanStd::of(&reports.iter().map(|r| r.sparsity.mean).collect::<Vec<_>>()),
                fold_validity,
            }
        })
        .collect();
    Ok(AblationReport { dataset: schema.name.clone(), rows })
}

pub fn write_json(path: impl AsRef<Path>, value: &impl Serialize) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    Ok(serde_json::from_str(&std::fs::read_to_string(path).map_err(io_err(path))?)?)
}

fn join(x: &[usize]) -> String {
    x.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_records<W: std::io::Write>(writer: W, records: &[RecourseRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "fold",
        "test_index",
        "factual",
        "decoded",
        "refined",
        "score_decoded",
        "score_refined",
        "nll_decoded",
        "nll_refined",
        "sparsity_decoded",
        "sparsity_refined",
        "similarity_decoded",
        "similarity_refined",
        "generate_seconds",
        "refine_seconds",
    ])?;
    for r in records {
        w.write_record([
            r.fold.to_string(),
            r.test_index.to_string(),
            join(&r.factual),
            join(&r.decoded),
            r.refined.as_deref().map(join).unwrap_or_default(),
            r.score_decoded.to_string(),
            opt(r.score_refined),
            r.nll_decoded.to_string(),
            opt(r.nll_refined),
            r.sparsity_decoded.to_string(),
            opt(r.sparsity_refined),
            r.similarity_decoded.to_string(),
            opt(r.similarity_refined),
            r.generate_seconds.to_string(),
            r.refine_seconds.to_string(),
        ])?;
    }
    w.flush().map_err(io_err("<records writer>"))?;
    Ok(())
}

pub fn write_records_csv(path: impl AsRef<Path>, records: &[RecourseRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    write_records(file, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_partition_rows() {
        let plan = FoldPlan::new(103, 5, 7).unwrap();
        let mut seen: Vec<usize> = plan.folds.iter().flat_map(|f| f.test.clone()).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..103).collect::<Vec<_>>());
        for f in &plan.folds {
            assert_eq!(f.train.len() + f.test.len(), 103);
            assert!(f.test.iter().all(|i| f.train.binary_search(i).is_err()));
        }
        assert_eq!(plan, FoldPlan::new(103, 5, 7).unwrap());
        assert!(FoldPlan::new(3, 5, 0).is_err());
    }

    #[test]
    fn constant_classifier_cross_yhat() {
        let rec = RecourseRecord {
            fold: 0,
            test_index: 0,
            factual: vec![0],
            decoded: vec![1],
            refined: None,
            score_decoded: 0.9,
            score_refined: None,
            nll_decoded: 1.0,
            nll_refined: None,
            sparsity_decoded: 1,
            sparsity_refined: None,
            similarity_decoded: 1.0,
            similarity_refined: None,
            generate_seconds: 0.0,
            refine_seconds: 0.0,
        };
        let constant = |_: &[usize]| 0.37;
        assert_eq!(cross_model_yhat(&[rec.clone(), rec], &constant), 0.37);
    }

    #[test]
    fn ablation_variants_only_switch_off() {
        let mut base = LossWeights::default();
        base.enabled.plaus_neg = false;
        let w = AblationVariant::new("full", true, true, true).apply(&base);
        assert!(!w.enabled.plaus_neg);
        let w = AblationVariant::new("none", false, false, false).apply(&LossWeights::default());
        assert!(!w.enabled.validity && !w.enabled.plaus_pos && !w.enabled.plaus_neg);
        assert!(w.enabled.proximity);
    }

    #[test]
    fn config_paths_resolve_against_base() {
        let cfg = ExperimentConfig::from_toml_str(
            "data = \"d.csv\"\nschema = \"s.toml\"\nfolds = 3\n[generator]\nepochs = 2\n",
            Path::new("/tmp/x"),
        )
        .unwrap();
        assert_eq!(cfg.data, PathBuf::from("/tmp/x/d.csv"));
        assert_eq!(cfg.folds, 3);
        assert_eq!(cfg.generator.epochs, 2);
        assert_eq!(cfg.generator.k, GeneratorConfig::default().k);
    }
}
