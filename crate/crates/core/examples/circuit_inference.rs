//! Learn a circuit from samples and query hard and soft likelihoods.
//!
//! `cargo run --example circuit_inference`

use par::circuit::{learn_structure, random_circuit, LearnConfig, SoftInstance};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cards = vec![3, 4, 2, 3, 2];
    let teacher = random_circuit(&cards, 4, &mut rng);
    let data: Vec<Vec<usize>> = (0..4000).map(|_| teacher.sample(&mut rng)).collect();

    let learned = learn_structure(&data, &cards, &LearnConfig::default(), &mut rng)?;
    println!("teacher {} nodes, learned {} nodes, valid: {}", teacher.len(), learned.len(), learned.validate().is_valid());

    let mean_ll = |c: &par::circuit::Circuit| -> f64 {
        data.iter().map(|x| c.log_likelihood(x).unwrap()).sum::<f64>() / data.len() as f64
    };
    println!("mean log-likelihood: teacher {:.4}, learned {:.4}", mean_ll(&teacher), mean_ll(&learned));

    let x = &data[0];
    let vertex = SoftInstance::one_hot(x, &cards)?;
    println!("log p({x:?}) = {:.4} (soft at vertex {:.4})", learned.log_likelihood(x)?, learned.soft_value(&vertex)?);

    let uniform = SoftInstance::uniform(&cards);
    let grad = learned.soft_gradient(&uniform)?;
    println!("d log v / dq at uniform, feature 0: {:?}", grad[0]);
    Ok(())
}
