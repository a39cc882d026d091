//! Fit the discretizer on German Credit and check held-out bin coverage.
//!
//! `cargo run --example discretize`

use par::bench::FoldPlan;
use par::data::{bin_diagnostics, Dataset, Discretizer, Schema, DEFAULT_BINS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let schema = Schema::load(root.join("data/credit/credit.toml"))?;
    let data = Dataset::load(root.join("data/credit/german_credit.csv"), &schema)?;
    let plan = FoldPlan::new(data.len(), 5, 0)?;
    let fold = &plan.folds[0];
    let train = data.select(&fold.train);
    let test = data.select(&fold.test);

    let disc = Discretizer::fit(&train.features, &schema, DEFAULT_BINS)?;
    for (name, card) in disc.names().iter().zip(disc.cardinalities()) {
        println!("{name:<22} {card:>2} categories");
    }
    let codes = disc.transform_codes(&test.features)?;
    println!("first test row: {:?}", disc.describe(&codes[0]));

    let diag = bin_diagnostics(&disc, &test.features)?;
    println!("coverage {:.4}  fidelity {:.4}", diag.coverage, diag.fidelity);
    Ok(())
}
