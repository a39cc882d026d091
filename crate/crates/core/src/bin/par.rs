use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use par::bench::{
    ablation_matrix, generate_records, load_inputs, prepare, prepare_with, read_json, run_ablation_on,
    run_experiment_on, score_fold, train_circuits, train_fold_classifier, write_json, write_records_csv,
    AblationReport, AggregateReport, ExperimentConfig, ExperimentReport, FoldContext, FoldPlan, FoldReport,
    RecourseRecord, ThresholdPolicy,
};
use par::data::{Dataset, Discretizer, Schema};
use par::recourse::RecourseModel;

#[derive(Parser)]
#[command(name = "par", about = "Plausible recourse with probabilistic circuits")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(short, long, global = true, default_value = "configs/credit.toml")]
    config: PathBuf,
    /// Output directory for models and reports.
    #[arg(short, long, global = true, default_value = "out")]
    out: PathBuf,
    /// Restrict a stage to one fold.
    #[arg(long, global = true)]
    fold: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the discretizer per fold and print bin diagnostics.
    Prepare,
    /// Learn p⁺ and p⁻ on the class splits of each training fold.
    TrainPc,
    /// Train the classifier and pick its decision threshold.
    TrainClf {
        /// Choose the threshold by Youden's J instead of the configured value.
        #[arg(long)]
        youden: bool,
    },
    /// Train the neighborhood encoder and recourse generator.
    TrainGen,
    /// Generate recourses for denied test factuals.
    Generate {
        #[arg(long, value_enum, default_value = "on")]
        local_search: Switch,
    },
    /// Score generated recourses and write report.json.
    Evaluate,
    /// Run the objective ablation matrix without local search.
    Ablate {
        /// Override generator epochs for the ablation runs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Print a report.json as a table.
    Report {
        /// Report to print; defaults to <out>/report.json.
        path: Option<PathBuf>,
    },
    /// All stages end to end.
    Run,
}

struct Inputs {
    cfg: ExperimentConfig,
    schema: Schema,
    data: Dataset,
    plan: FoldPlan,
}

impl Inputs {
    fn load(config: &Path) -> Result<Self> {
        let cfg = ExperimentConfig::load(config).with_context(|| format!("loading {}", config.display()))?;
        let (schema, data) = load_inputs(&cfg).context("loading dataset")?;
        let plan = FoldPlan::new(data.len(), cfg.folds, cfg.seed)?;
        Ok(Inputs { cfg, schema, data, plan })
    }

    fn folds(&self, only: Option<usize>) -> Result<Vec<usize>> {
        match only {
            Some(f) if f >= self.plan.len() => bail!("fold {f} out of range (have {})", self.plan.len()),
            Some(f) => Ok(vec![f]),
            None => Ok((0..self.plan.len()).collect()),
        }
    }

    fn splits(&self, fold: usize) -> (Dataset, Dataset) {
        let split = &self.plan.folds[fold];
        (self.data.select(&split.train), self.data.select(&split.test))
    }

    fn context(&self, out: &Path, fold: usize) -> Result<FoldContext> {
        let dir = fold_dir(out, fold);
        FoldContext::load(&dir, &self.data, &self.schema, &self.plan.folds[fold], fold)
            .with_context(|| format!("loading fold artifacts from {}; run the earlier stages first", dir.display()))
    }
}

fn fold_dir(out: &Path, fold: usize) -> PathBuf {
    out.join(format!("fold{fold}"))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Command::Report { path } = &cli.command {
        let path = path.clone().unwrap_or_else(|| cli.out.join("report.json"));
        return print_report(&path);
    }
    let inputs = Inputs::load(&cli.config)?;
    let folds = inputs.folds(cli.fold)?;
    let cfg = &inputs.cfg;
    let out = &cli.out;

    match cli.command {
        Command::Prepare => {
            for &f in &folds {
                let (train, test) = inputs.splits(f);
                let prepared = prepare(&train, &test, &inputs.schema, cfg.bins)?;
                let dir = fold_dir(out, f);
                std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                prepared.disc.save(dir.join("discretizer.json"))?;
                write_json(dir.join("diagnostics.json"), &prepared.diagnostics)?;
                write_json(dir.join("split.json"), &inputs.plan.folds[f])?;
                let d = &prepared.diagnostics;
                println!(
                    "fold {f}: {} features, cards {:?}, coverage {:.4}, fidelity {:.4}",
                    prepared.disc.num_features(),
                    prepared.cardinalities(),
                    d.coverage,
                    d.fidelity
                );
            }
        }
        Command::TrainPc => {
            for &f in &folds {
                let (train, test) = inputs.splits(f);
                let dir = fold_dir(out, f);
                let disc = Discretizer::load(dir.join("discretizer.json")).context("run `prepare` first")?;
                let p = prepare_with(disc, &train, &test, &inputs.schema)?;
                let (p_plus, p_minus) =
                    train_circuits(&p.train_codes, &p.train_labels, &p.cardinalities(), &cfg.circuit, cfg.circuit_seed(f))?;
                p_plus.save(dir.join("p_plus.txt"))?;
                p_minus.save(dir.join("p_minus.txt"))?;
                println!("fold {f}: p+ {} nodes, p- {} nodes", p_plus.len(), p_minus.len());
            }
        }
        Command::TrainClf { youden } => {
            let policy = if youden { ThresholdPolicy::Youden } else { cfg.threshold_policy };
            for &f in &folds {
                let (train, test) = inputs.splits(f);
                let dir = fold_dir(out, f);
                let disc = Discretizer::load(dir.join("discretizer.json")).context("run `prepare` first")?;
                let p = prepare_with(disc, &train, &test, &inputs.schema)?;
                let cards = p.cardinalities();
                let (clf, manifest) = train_fold_classifier(
                    &p.train_codes,
                    &p.train_labels,
                    &cards,
                    &cfg.classifier_config(f),
                    policy,
                    cfg.threshold,
                )?;
                let (alt, _) = train_fold_classifier(
                    &p.train_codes,
                    &p.train_labels,
                    &cards,
                    &cfg.alt_classifier_config(f),
                    ThresholdPolicy::Fixed,
                    cfg.threshold,
                )?;
                clf.save(dir.join("classifier.txt"))?;
                alt.save(dir.join("classifier_alt.txt"))?;
                write_json(dir.join("classifier.json"), &manifest)?;
                println!("fold {f}: threshold {:.2} ({})", manifest.threshold, if manifest.youden { "youden" } else { "fixed" });
            }
        }
        Command::TrainGen => {
            for &f in &folds {
                let ctx = inputs.context(out, f)?;
                let (model, log) = ctx.train_generator(&cfg.loss, &cfg.generator_config(f))?;
                let dir = fold_dir(out, f);
                model.save(dir.join("generator"))?;
                write_json(dir.join("training.json"), &log)?;
                let last = log.epochs.last().map_or(f64::NAN, |e| e.total);
                println!("fold {f}: pool {} members, final loss {last:.4}", log.pool_size);
            }
        }
        Command::Generate { local_search } => {
            let mut all = Vec::new();
            for &f in &folds {
                let ctx = inputs.context(out, f)?;
                let dir = fold_dir(out, f);
                let model = RecourseModel::load(dir.join("generator")).context("run `train-gen` first")?;
                let denied = ctx.denied(cfg.max_denied);
                let records = generate_records(
                    &ctx,
                    &model,
                    &denied,
                    matches!(local_search, Switch::On),
                    &cfg.refine_config(ctx.threshold()),
                )?;
                write_json(dir.join("records.json"), &records)?;
                println!("fold {f}: {} recourses", records.len());
                all.extend(records);
            }
            write_records_csv(out.join("records.csv"), &all)?;
        }
        Command::Evaluate => {
            let mut reports = Vec::new();
            for f in inputs.folds(None)? {
                let dir = fold_dir(out, f);
                if !folds.contains(&f) || !dir.join("records.json").exists() {
                    continue;
                }
                let ctx = inputs.context(out, f)?;
                let records: Vec<RecourseRecord> = read_json(dir.join("records.json"))?;
                let mut report = FoldReport::new(&ctx, records.len());
                report.training = read_json(dir.join("training.json")).ok();
                if !records.is_empty() {
                    score_fold(&ctx, &records, &mut report)?;
                }
                reports.push(report);
            }
            if reports.is_empty() {
                bail!("no records found under {}; run `generate` first", out.display());
            }
            let report = ExperimentReport::from_folds(inputs.schema.name.clone(), cfg.clone(), reports);
            write_json(out.join("report.json"), &report)?;
            print_experiment(&report);
        }
        Command::Ablate { epochs } => {
            let mut cfg = cfg.clone();
            if let Some(e) = epochs {
                cfg.generator.epochs = e;
            }
            let report = run_ablation_on(&inputs.schema, &inputs.data, &cfg, &ablation_matrix())?;
            write_json(out.join("ablation.json"), &report)?;
            print_ablation(&report);
        }
        Command::Run => {
            let run = run_experiment_on(&inputs.schema, &inputs.data, cfg, Some(out))?;
            print_experiment(&run.report);
        }
        Command::Report { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn print_report(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(report) = serde_json::from_str::<ExperimentReport>(&text) {
        print_experiment(&report);
    } else {
        let report: AblationReport = serde_json::from_str(&text).context("neither an experiment nor an ablation report")?;
        print_ablation(&report);
    }
    Ok(())
}

fn print_experiment(report: &ExperimentReport) {
    println!("dataset: {}", report.dataset);
    println!(
        "{:<8} {:>17} {:>17} {:>17} {:>17} {:>17} {:>17} {:>10} {:>17}",
        "", "validity", "actionability", "causality", "nll", "similarity", "sparsity", "time (s)", "mean yhat"
    );
    let row = |name: &str, a: &AggregateReport| {
        println!(
            "{:<8} {:>17} {:>17} {:>17} {:>17} {:>17} {:>17} {:>10.4} {:>17}",
            name,
            a.validity.to_string(),
            a.actionability.to_string(),
            a.causality.map_or("--".to_string(), |c| c.to_string()),
            a.nll.to_string(),
            a.similarity.to_string(),
            a.sparsity.to_string(),
            a.median_time.mean,
            a.mean_yhat.to_string(),
        )
    };
    if let Some(pre) = &report.pre {
        row("PAR", pre);
    }
    if let Some(post) = &report.post {
        row("PAR+LS", post);
    }
    if let Some(c) = &report.cross_model_yhat {
        println!("mean yhat under the alternative classifier: {c}");
    }
    for f in &report.folds {
        if let Some(reason) = &f.skipped {
            println!("fold {} skipped: {reason}", f.fold);
        }
    }
}

fn print_ablation(report: &AblationReport) {
    let mark = |b: bool| if b { "on" } else { "off" };
    println!("{:<12} {:>4} {:>4} {:>4} {:>17} {:>17}", "variant", "p+", "p-", "val", "validity", "nll");
    for r in &report.rows {
        let v = &r.variant;
        println!(
            "{:<12} {:>4} {:>4} {:>4} {:>17} {:>17}",
            v.name,
            mark(v.plaus_pos),
            mark(v.plaus_neg),
            mark(v.validity),
            r.validity.to_string(),
            r.nll.to_string()
        );
    }
}
