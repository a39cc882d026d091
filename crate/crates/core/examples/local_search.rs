//! Repair and sparsify a decoded candidate against a toy scorer.
//!
//! `cargo run --example local_search`

use par::constraints::{CausalRule, ConstraintSet};
use par::refine::{refine, repair_causality, RefineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cs = ConstraintSet::new(
        vec![3, 3, 3, 2],
        &[true, true, true, false],
        &[3],
        &[],
        vec![CausalRule { effect: 1, cause: 0 }],
    )?;
    // accepted when feature 2 reaches its top category
    let f = |x: &[usize]| if x[2] == 2 { 0.9 } else { 0.1 };
    let factual = [0, 0, 0, 1];
    let decoded = [1, 2, 1, 1];

    println!("repair_causality: {:?}", repair_causality(&decoded, &factual, cs.rules()));
    let out = refine(&decoded, &factual, &cs, &f, None, &RefineConfig { threshold: 0.5, delta_max: None });
    println!(
        "decoded {decoded:?} (changes {}) -> refined {:?} (changes {}, score {:.2})",
        cs.mutable_distance(&decoded, &factual),
        out.assignment,
        out.hamming,
        out.score
    );
    Ok(())
}
