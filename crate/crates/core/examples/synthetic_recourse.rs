//! End-to-end run on the synthetic census-style table, with and without
//! local search.
//!
//! `cargo run --release --example synthetic_recourse [rows]`

use par::bench::synthetic::{adult_like_schema, adult_like_table};
use par::bench::{run_experiment_on, ExperimentConfig};
use par::data::Dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = std::env::args().nth(1).map(|n| n.parse()).transpose()?.unwrap_or(2000);
    let schema = adult_like_schema();
    let data = Dataset::from_table(&adult_like_table(rows, 5), &schema)?;
    let mut cfg = ExperimentConfig { folds: 3, max_denied: 150, ..ExperimentConfig::default() };
    cfg.classifier.epochs = 40;
    cfg.generator.epochs = 15;

    let run = run_experiment_on(&schema, &data, &cfg, None)?;
    let (pre, post) = (run.report.pre.expect("denied factuals"), run.report.post.expect("local search on"));
    for fold in &run.report.folds {
        println!("fold {}: coverage {:.4}, fidelity {:.4}, {} denied", fold.fold, fold.diagnostics.coverage, fold.diagnostics.fidelity, fold.denied);
    }
    println!("{:<8} {:>17} {:>17} {:>17} {:>17}", "", "validity", "nll", "sparsity", "similarity");
    for (name, a) in [("PAR", &pre), ("PAR+LS", &post)] {
        println!(
            "{name:<8} {:>17} {:>17} {:>17} {:>17}",
            a.validity.to_string(),
            a.nll.to_string(),
            a.sparsity.to_string(),
            a.similarity.to_string()
        );
    }
    println!("actionability {}  causality {}", post.actionability, post.causality.map_or("--".into(), |c| c.to_string()));
    Ok(())
}
