//! Seeded synthetic tables for examples and tests.

use rand::distributions::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{Beta, Normal};

use crate::data::{CausalPair, FeatureKind, FeatureSpec, RawTable, Schema};
use crate::neural::sigmoid;

pub const EDUCATION: [&str; 8] = ["preschool", "primary", "middle", "hs_grad", "some_college", "bachelors", "masters", "doctorate"];
const WORKCLASS: [&str; 4] = ["private", "self_employed", "government", "other"];
const OCCUPATION: [&str; 6] = ["clerical", "craft", "sales", "service", "professional", "managerial"];
const MARITAL: [&str; 3] = ["married", "never_married", "divorced"];
const RACE: [&str; 3] = ["group_a", "group_b", "group_c"];
const SEX: [&str; 2] = ["female", "male"];

/// Schema of the census-style synthetic table: race and sex immutable, age
/// and education monotone, and education may only rise together with age.
pub fn adult_like_schema() -> Schema {
    Schema {
        name: "synthetic_adult".into(),
        label: "income".into(),
        positive: ">50K".into(),
        discrete_threshold: 25,
        features: vec![
            FeatureSpec::new("age", FeatureKind::Numeric).monotone(),
            FeatureSpec::new("education", FeatureKind::OrderedCategorical).ordered(&EDUCATION).monotone(),
            FeatureSpec::new("hours_per_week", FeatureKind::Numeric),
            FeatureSpec::new("capital_gain", FeatureKind::Numeric),
            FeatureSpec::new("workclass", FeatureKind::UnorderedCategorical),
            FeatureSpec::new("occupation", FeatureKind::UnorderedCategorical),
            FeatureSpec::new("marital_status", FeatureKind::UnorderedCategorical),
            FeatureSpec::new("race", FeatureKind::UnorderedCategorical).immutable(),
            FeatureSpec::new("sex", FeatureKind::UnorderedCategorical).immutable(),
        ],
        causal: vec![CausalPair { effect: "education".into(), cause: "age".into() }],
    }
}

/// `n` rows of the census-style table with an `income` label column.
pub fn adult_like_table(n: usize, seed: u64) -> RawTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let age = (17.0 + 60.0 * Beta::new(2.0, 4.0).expect("valid beta").sample(&mut rng)).round();
        let edu_mean = 3.0 + 0.03 * (age - 17.0).min(30.0);
        let edu = (edu_mean + 1.4 * noise.sample(&mut rng)).round().clamp(0.0, 7.0) as usize;
        let hours = (40.0 + 10.0 * noise.sample(&mut rng)).round().clamp(1.0, 99.0);
        let gain = if rng.gen_bool(0.12) { (rng.gen_range(500.0..20000.0_f64)).round() } else { 0.0 };
        let workclass = rng.gen_range(0..WORKCLASS.len());
        let occupation = (edu / 2 + rng.gen_range(0..3)).min(OCCUPATION.len() - 1);
        let marital = if age > 28.0 && rng.gen_bool(0.6) { 0 } else { rng.gen_range(1..MARITAL.len()) };
        let race = rng.gen_range(0..RACE.len());
        let sex = usize::from(rng.gen_bool(0.6));

        let logit = -6.4
            + 0.55 * edu as f64
            + 0.035 * (age - 17.0).min(45.0)
            + 0.05 * (hours - 40.0)
            + 1.3 * f64::from(u8::from(gain > 0.0))
            + 0.35 * occupation as f64
            + 1.1 * f64::from(u8::from(marital == 0))
            + 0.3 * sex as f64;
        let positive = rng.gen_bool(sigmoid(logit));

        rows.push(vec![
            age.to_string(),
            EDUCATION[edu].to_string(),
            hours.to_string(),
            gain.to_string(),
            WORKCLASS[workclass].to_string(),
            OCCUPATION[occupation].to_string(),
            MARITAL[marital].to_string(),
            RACE[race].to_string(),
            SEX[sex].to_string(),
            if positive { ">50K" } else { "<=50K" }.to_string(),
        ]);
    }
    let mut header: Vec<String> = adult_like_schema().names().iter().map(|s| s.to_string()).collect();
    header.push("income".into());
    RawTable::new(header, rows).expect("rows match the header")
}

/// Scores and labels resembling a rare-positive credit-default table: both
/// classes concentrate near zero and positives sit only slightly higher.
pub fn skewed_scores(n: usize, positive_rate: f64, seed: u64) -> (Vec<f64>, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let neg = Beta::new(1.0, 30.0).expect("valid beta");
    let pos = Beta::new(2.0, 12.0).expect("valid beta");
    (0..n)
        .map(|_| {
            if rng.gen_bool(positive_rate) {
                (pos.sample(&mut rng), 1)
            } else {
                (neg.sample(&mut rng), 0)
            }
        })
        .unzip()
}
