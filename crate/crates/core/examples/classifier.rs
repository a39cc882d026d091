//! Train the MLP classifier and pick a Youden threshold on skewed scores.
//!
//! `cargo run --release --example classifier`

use par::bench::synthetic::{adult_like_schema, adult_like_table, skewed_scores};
use par::bench::encode_all;
use par::data::{Dataset, Discretizer, DEFAULT_BINS};
use par::neural::{confusion_at, select_threshold_youden, train_classifier, ClassifierConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schema = adult_like_schema();
    let data = Dataset::from_table(&adult_like_table(3000, 1), &schema)?;
    let disc = Discretizer::fit(&data.features, &schema, DEFAULT_BINS)?;
    let x = encode_all(&disc.transform_codes(&data.features)?, &disc.cardinalities())?;

    let cfg = ClassifierConfig { epochs: 30, ..ClassifierConfig::default() };
    let model = train_classifier(&x, &data.labels, &cfg)?;
    let scores: Vec<f64> = x.iter().map(|r| model.score(r)).collect::<Result<_, _>>()?;
    let acc = scores.iter().zip(&data.labels).filter(|(s, &y)| (**s >= 0.5) == (y == 1)).count() as f64 / x.len() as f64;
    println!("training accuracy at 0.5: {acc:.3}");
    let tau = select_threshold_youden(&scores, &data.labels)?;
    println!("youden threshold {tau:.2}, J = {:.3}", confusion_at(&scores, &data.labels, tau).youden_j());

    let (skewed, labels) = skewed_scores(5000, 0.07, 2);
    let tau = select_threshold_youden(&skewed, &labels)?;
    println!("rare-positive scores: youden threshold {tau:.2}, J = {:.3}", confusion_at(&skewed, &labels, tau).youden_j());
    Ok(())
}
