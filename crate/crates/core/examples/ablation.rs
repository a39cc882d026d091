//! Objective ablations on German Credit without local search.
//!
//! `cargo run --release --example ablation [config.toml] [epochs]`

use std::path::PathBuf;

use par::bench::{ablation_matrix, load_inputs, run_ablation_on, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| root.join("../../configs/credit.toml"));
    let mut cfg = ExperimentConfig::load(&config)?;
    cfg.generator.epochs = args.next().map(|e| e.parse()).transpose()?.unwrap_or(10);
    let (schema, data) = load_inputs(&cfg)?;
    let report = run_ablation_on(&schema, &data, &cfg, &ablation_matrix())?;
    println!("{:<12} {:>4} {:>4} {:>4}  {:>15}  {:>15}", "variant", "p+", "p-", "val", "validity", "nll");
    let mark = |b: bool| if b { "on" } else { "off" };
    for row in &report.rows {
        let v = &row.variant;
        println!(
            "{:<12} {:>4} {:>4} {:>4}  {:>15}  {:>15}",
            v.name,
            mark(v.plaus_pos),
            mark(v.plaus_neg),
            mark(v.validity),
            row.validity.to_string(),
            row.nll.to_string()
        );
    }
    Ok(())
}
