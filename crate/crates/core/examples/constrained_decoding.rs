//! Mask generator logits under immutability, monotonicity and causal rules.
//!
//! `cargo run --example constrained_decoding`

use par::constraints::{CausalRule, ConstraintSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // features: age (ordered, monotone), education (ordered), sex (immutable)
    let cs = ConstraintSet::new(
        vec![4, 3, 2],
        &[true, true, false],
        &[2],
        &[0],
        vec![CausalRule { effect: 1, cause: 0 }],
    )?;
    let factual = [2, 0, 1];
    let logits = vec![vec![3.0, 0.0, 0.0, 0.5], vec![0.0, 0.2, 2.0], vec![5.0, 0.0]];

    let allowed = cs.allowed(&factual)?;
    println!("allowed categories: {allowed:?}");
    let soft = cs.masked_softmax(&logits, &factual)?;
    for (j, q) in soft.q.iter().enumerate() {
        println!("q[{j}] = {:?}", q.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>());
    }
    let decoded = cs.decode(&logits, &factual)?;
    println!("factual {factual:?} -> decoded {decoded:?}, feasible: {}", cs.feasible(&decoded, &factual));
    Ok(())
}
