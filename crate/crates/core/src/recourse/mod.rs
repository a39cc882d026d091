//! Amortized recourse generation: a neighborhood encoder and a generator
//! network map a denied factual to per-feature categorical distributions
//! over its mutable features, trained against the frozen classifier and the
//! class-conditional circuits.

mod loss;
mod pool;
mod train;

use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, SoftInstance};
use crate::constraints::{ConstraintSet, MaskedSoftmax};
use crate::error::{Error, Result};
use crate::neural::{GradientTape, MlpModel};

pub use loss::{compute_losses, EnabledTerms, LossEval, LossTerms, LossWeights};
pub use pool::{EncoderTape, NeighborhoodEncoder, NeighborhoodPool};
pub use train::{train_generator, EpochLog, GeneratorConfig, RecourseModel, TrainingLog};

/// Phase-I artifacts the generator is trained against; nothing else about
/// the training data is visible to it.
#[derive(Debug, Clone, Copy)]
pub struct FrozenModels<'a> {
    pub classifier: &'a MlpModel,
    pub p_plus: &'a Circuit,
    pub p_minus: &'a Circuit,
}

/// Which factual features the generator sees as one-hot input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactualView {
    /// Only the immutable features.
    Immutable,
    /// Immutable features followed by the mutable ones.
    #[default]
    Full,
}

impl FactualView {
    fn features(self, cs: &ConstraintSet) -> Vec<usize> {
        match self {
            FactualView::Immutable => cs.immutable(),
            FactualView::Full => cs.immutable().into_iter().chain(cs.mutable()).collect(),
        }
    }
}

/// `z = [one-hot of the viewed factual values, log p⁺(x⁻), h]`.
pub fn generator_input(
    factual: &[usize],
    cs: &ConstraintSet,
    view: FactualView,
    log_p_plus: f64,
    h: &[f64],
) -> Vec<f64> {
    let cards = cs.cardinalities();
    let mut z = Vec::new();
    for j in view.features(cs) {
        z.extend((0..cards[j]).map(|a| if a == factual[j] { 1.0 } else { 0.0 }));
    }
    z.push(log_p_plus);
    z.extend_from_slice(h);
    z
}

pub fn generator_input_dim(cs: &ConstraintSet, view: FactualView, embed_dim: usize) -> usize {
    view.features(cs).iter().map(|&j| cs.cardinalities()[j]).sum::<usize>() + 1 + embed_dim
}

/// Number of generator outputs: one logit per category of every mutable feature.
pub fn generator_output_dim(cs: &ConstraintSet) -> usize {
    cs.mutable().iter().map(|&j| cs.cardinalities()[j]).sum()
}

/// Constrained per-feature distributions for one factual.
#[derive(Debug, Clone)]
pub struct SoftRecourse {
    pub q: Vec<Vec<f64>>,
    /// `π_j = 1 − q_j(x⁻_j)`; zero for immutable features.
    pub change_probs: Vec<f64>,
    softmax: MaskedSoftmax,
}

impl SoftRecourse {
    /// Builds the distributions from the generator's concatenated mutable
    /// logits; immutable blocks are clamped to the factual.
    pub fn from_logits(mutable_logits: &[f64], factual: &[usize], cs: &ConstraintSet) -> Result<Self> {
        let expected = generator_output_dim(cs);
        if mutable_logits.len() != expected {
            return Err(Error::Dimension { expected, got: mutable_logits.len() });
        }
        let cards = cs.cardinalities();
        let mut logits: Vec<Vec<f64>> = cards.iter().map(|&c| vec![0.0; c]).collect();
        let mut offset = 0;
        for j in cs.mutable() {
            logits[j].copy_from_slice(&mutable_logits[offset..offset + cards[j]]);
            offset += cards[j];
        }
        let softmax = cs.masked_softmax(&logits, factual)?;
        let q = softmax.q.clone();
        let change_probs = (0..cards.len())
            .map(|j| if cs.is_immutable(j) { 0.0 } else { 1.0 - q[j][factual[j]] })
            .collect();
        Ok(SoftRecourse { q, change_probs, softmax })
    }

    pub fn instance(&self) -> Result<SoftInstance> {
        SoftInstance::new(self.q.clone())
    }

    /// Per-feature argmax, joint argmax inside causal groups.
    pub fn decode(&self) -> Vec<usize> {
        self.softmax.decode()
    }

    /// Chains `∂L/∂q` through the masked softmax to the concatenated
    /// mutable logits.
    pub fn logit_gradient(&self, grad_q: &[Vec<f64>], cs: &ConstraintSet) -> Vec<f64> {
        let per_feature = self.softmax.backward(grad_q);
        cs.mutable().into_iter().flat_map(|j| per_feature[j].clone()).collect()
    }
}

/// Runs the generator on `z` and applies the constraints.
pub fn generate_soft(
    generator: &MlpModel,
    z: &[f64],
    factual: &[usize],
    cs: &ConstraintSet,
) -> Result<(SoftRecourse, GradientTape)> {
    let (logits, tape) = generator.forward(z)?;
    Ok((SoftRecourse::from_logits(&logits, factual, cs)?, tape))
}

/// Objective and its gradient with respect to the concatenated mutable logits.
pub fn loss_and_logit_grad(
    mutable_logits: &[f64],
    factual: &[usize],
    cs: &ConstraintSet,
    models: &FrozenModels,
    w: &LossWeights,
) -> Result<(LossEval, Vec<f64>)> {
    let soft = SoftRecourse::from_logits(mutable_logits, factual, cs)?;
    let eval = compute_losses(&soft, factual, cs, models, w)?;
    let grad = soft.logit_gradient(&eval.grad_q, cs);
    Ok((eval, grad))
}
