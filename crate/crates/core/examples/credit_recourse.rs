//! Five-fold German Credit run with local search.
//!
//! `cargo run --release --example credit_recourse [config.toml] [out_dir]`

use std::path::PathBuf;

use par::bench::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| root.join("../../configs/credit.toml"));
    let out = args.next().map(PathBuf::from);
    let cfg = ExperimentConfig::load(&config)?;
    let run = run_experiment(&cfg, out.as_deref())?;
    for fold in &run.report.folds {
        let (Some(pre), Some(post)) = (&fold.pre, &fold.post) else {
            println!("fold {}: skipped ({:?})", fold.fold, fold.skipped);
            continue;
        };
        println!(
            "fold {}: denied {:3}  validity {:6.2} -> {:6.2}  nll {:6.2} -> {:6.2}  sparsity {:.2} -> {:.2}",
            fold.fold, fold.denied, pre.validity, post.validity, pre.nll.mean, post.nll.mean, pre.sparsity.mean, post.sparsity.mean
        );
    }
    if let Some(post) = &run.report.post {
        println!("PAR+LS validity {}  nll {}  sparsity {}  similarity {}", post.validity, post.nll, post.sparsity, post.similarity);
        println!("actionability {}  causality {}  median time {}", post.actionability, post.causality.map_or("--".into(), |c| c.to_string()), post.median_time);
    }
    if let Some(pre) = &run.report.pre {
        println!("PAR     validity {}  nll {}  sparsity {}", pre.validity, pre.nll, pre.sparsity);
    }
    Ok(())
}
