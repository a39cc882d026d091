//! Evaluation metrics, fold-based experiments, ablations and synthetic data.

mod experiment;
mod metrics;
pub mod synthetic;

pub use experiment::{
    ablation_matrix, aggregate, cross_model_yhat, encode_all, evaluate_records, generate_records, load_inputs,
    prepare, prepare_with, read_json, run_ablation_on, run_experiment, run_experiment_on, run_fold, score_fold, train_circuits, train_fold_classifier,
    write_json, write_records, write_records_csv, AblationReport, AblationRow, AblationVariant, AggregateReport,
    ExperimentConfig, ExperimentReport, ExperimentRun, Fold, FoldContext, FoldPlan, FoldReport, Prepared,
    RecourseRecord, ThresholdPolicy,
};
pub use metrics::{
    actionability_causality, evaluate, median, nll, validity, MadWeights, MeanStd, MetricInputs, MetricsReport,
};
