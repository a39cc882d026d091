use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{softplus, sigmoid, Activation, AdamState, Gradients, MlpModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        ClassifierConfig { hidden: vec![20, 10], epochs: 100, batch_size: 64, lr: 1e-3, seed: 0 }
    }
}

/// Sidecar metadata stored next to a serialized classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierManifest {
    pub threshold: f64,
    pub youden: bool,
    pub seed: u64,
    pub epochs: usize,
    pub input_dim: usize,
}

/// Mean binary cross-entropy of the model's first output.
pub fn bce_loss(model: &MlpModel, x: &[Vec<f64>], y: &[u8]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Empty("training rows"));
    }
    let mut total = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let (_, tape) = model.forward(row)?;
        let z = tape.logits()[0];
        total += if label == 1 { softplus(-z) } else { softplus(z) };
    }
    Ok(total / x.len() as f64)
}

/// Trains `d → hidden… → 1` with a sigmoid output on binary labels.
pub fn train_classifier(x: &[Vec<f64>], y: &[u8], cfg: &ClassifierConfig) -> Result<MlpModel> {
    if x.is_empty() {
        return Err(Error::Empty("training rows"));
    }
    if x.len() != y.len() {
        return Err(Error::Dimension { expected: x.len(), got: y.len() });
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(Error::SingleClass);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut dims = vec![x[0].len()];
    dims.extend(&cfg.hidden);
    dims.push(1);
    let mut model = MlpModel::random(&dims, Activation::Relu, Activation::Sigmoid, &mut rng);
    fit_bce(&mut model, x, y, cfg, &mut rng)?;
    Ok(model)
}

/// Runs the shuffled mini-batch BCE loop on an existing single-output model
/// and returns the mean training loss of each epoch.
pub fn fit_bce(
    model: &mut MlpModel,
    x: &[Vec<f64>],
    y: &[u8],
    cfg: &ClassifierConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    if model.output_dim() != 1 {
        return Err(Error::Dimension { expected: 1, got: model.output_dim() });
    }
    if y.iter().any(|&l| l > 1) {
        return Err(Error::OutOfRange("labels must be 0 or 1".into()));
    }
    let mut adam = AdamState::new(model, cfg.lr);
    let mut order: Vec<usize> = (0..x.len()).collect();
    let batch = cfg.batch_size.max(1);
    let mut history = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grads = Gradients::zeros_like(model);
            for &i in chunk {
                let (_, tape) = model.forward(&x[i])?;
                let z = tape.logits()[0];
                let label = f64::from(y[i]);
                epoch_loss += if y[i] == 1 { softplus(-z) } else { softplus(z) };
                let (g, _) = model.backward_from_logits(&tape, &[sigmoid(z) - label])?;
                grads.add_assign(&g);
            }
            grads.scale(1.0 / chunk.len() as f64);
            adam.step(model, &grads);
        }
        history.push(epoch_loss / x.len() as f64);
    }
    Ok(history)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn youden_j(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64 - self.fp as f64 / (self.fp + self.tn) as f64
    }
}

/// Confusion counts with "positive" meaning `score ≥ threshold`.
pub fn confusion_at(scores: &[f64], labels: &[u8], threshold: f64) -> Confusion {
    let mut c = Confusion { tp: 0, fp: 0, tn: 0, fn_: 0 };
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

/// Grid point in `{0.01, …, 0.99}` maximizing TPR − FPR; ties go to the
/// smallest threshold.
pub fn select_threshold_youden(scores: &[f64], labels: &[u8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Dimension { expected: scores.len(), got: labels.len() });
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass);
    }
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 1..100 {
        let tau = i as f64 / 100.0;
        let j = confusion_at(scores, labels, tau).youden_j();
        if j > best.0 {
            best = (j, tau);
        }
    }
    Ok(best.1)
}
