use serde::{Deserialize, Serialize};

use super::{SoftRecourse, FrozenModels};
use crate::constraints::ConstraintSet;
use crate::error::{Error, Result};
use crate::neural::{sigmoid, softplus};

/// Switches for individual objective terms, used by ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnabledTerms {
    pub validity: bool,
    pub proximity: bool,
    pub plaus_pos: bool,
    pub plaus_neg: bool,
    pub sparsity: bool,
    pub entropy: bool,
    /// Gates the whole proximity/plausibility group.
    pub ppt_block: bool,
}

impl Default for EnabledTerms {
    fn default() -> Self {
        EnabledTerms::all()
    }
}

impl EnabledTerms {
    pub fn all() -> Self {
        EnabledTerms {
            validity: true,
            proximity: true,
            plaus_pos: true,
            plaus_neg: true,
            sparsity: true,
            entropy: true,
            ppt_block: true,
        }
    }

    pub fn none() -> Self {
        EnabledTerms {
            validity: false,
            proximity: false,
            plaus_pos: false,
            plaus_neg: false,
            sparsity: false,
            entropy: false,
            ppt_block: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub validity: f64,
    pub ppt: f64,
    /// Share of the proximity term inside the proximity/plausibility group.
    pub alpha: f64,
    pub plus: f64,
    pub minus: f64,
    pub sparsity: f64,
    pub entropy: f64,
    /// Bound on the expected number of changed mutable features.
    pub budget: f64,
    /// Per-instance norm cap on the `log p⁻` gradient.
    pub neg_grad_clip: Option<f64>,
    pub enabled: EnabledTerms,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            validity: 1.0,
            ppt: 1.0,
            alpha: 0.5,
            plus: 1.0,
            minus: 0.1,
            sparsity: 0.1,
            entropy: 0.05,
            budget: 4.0,
            neg_grad_clip: Some(10.0),
            enabled: EnabledTerms::all(),
        }
    }
}

impl LossWeights {
    pub fn check(&self) -> Result<()> {
        let lambdas = [self.validity, self.ppt, self.plus, self.minus, self.sparsity, self.entropy, self.budget];
        if lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return Err(Error::Precondition("loss weights and budget must be finite and non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Precondition(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }

    /// Effective multipliers of (validity, proximity, L₊, L₋, sparsity, entropy).
    fn effective(&self) -> [f64; 6] {
        let e = &self.enabled;
        let on = |b: bool| if b { 1.0 } else { 0.0 };
        let gate = on(e.ppt_block) * self.ppt;
        [
            on(e.validity) * self.validity,
            gate * self.alpha * on(e.proximity),
            gate * (1.0 - self.alpha) * self.plus * on(e.plaus_pos),
            gate * (1.0 - self.alpha) * self.minus * on(e.plaus_neg),
            on(e.sparsity) * self.sparsity,
            on(e.entropy) * self.entropy,
        ]
    }
}

/// Unweighted values of each objective term; disabled terms are not
/// evaluated and stay at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTerms {
    pub validity: f64,
    pub proximity: f64,
    pub plaus_pos: f64,
    pub plaus_neg: f64,
    pub sparsity: f64,
    pub entropy: f64,
}

impl LossTerms {
    pub fn add_assign(&mut self, o: &LossTerms) {
        self.validity += o.validity;
        self.proximity += o.proximity;
        self.plaus_pos += o.plaus_pos;
        self.plaus_neg += o.plaus_neg;
        self.sparsity += o.sparsity;
        self.entropy += o.entropy;
    }

    pub fn scale(&mut self, s: f64) {
        for v in [
            &mut self.validity,
            &mut self.proximity,
            &mut self.plaus_pos,
            &mut self.plaus_neg,
            &mut self.sparsity,
            &mut self.entropy,
        ] {
            *v *= s;
        }
    }
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub total: f64,
    pub terms: LossTerms,
    /// `∂L/∂q` for every block, immutable ones included.
    pub grad_q: Vec<Vec<f64>>,
}

/// Weighted objective of a soft recourse and its gradient in `q`.
pub fn compute_losses(
    soft: &SoftRecourse,
    factual: &[usize],
    cs: &ConstraintSet,
    models: &FrozenModels,
    w: &LossWeights,
) -> Result<LossEval> {
    let q = &soft.q;
    let [w_val, w_prox, w_plus, w_minus, w_sparse, w_ent] = w.effective();
    let mut grad: Vec<Vec<f64>> = q.iter().map(|b| vec![0.0; b.len()]).collect();
    let mut terms = LossTerms::default();
    let mutable = cs.mutable();
    let m = mutable.len().max(1) as f64;

    if w_val > 0.0 {
        let flat: Vec<f64> = q.iter().flatten().copied().collect();
        let (_, tape) = models.classifier.forward(&flat)?;
        let z = tape.logits()[0];
        terms.validity = softplus(-z);
        let (_, dx) = models.classifier.backward_from_logits(&tape, &[w_val * (sigmoid(z) - 1.0)])?;
        let mut it = dx.into_iter();
        grad.iter_mut().flatten().for_each(|g| *g += it.next().unwrap_or(0.0));
    }
    if w_prox > 0.0 {
        let expected: f64 = soft.change_probs.iter().sum();
        let hinge = (expected - w.budget).max(0.0);
        terms.proximity = hinge * hinge;
        for &j in &mutable {
            grad[j][factual[j]] -= w_prox * 2.0 * hinge;
        }
    }
    if w_plus > 0.0 {
        let (lv, g) = models.p_plus.soft_value_and_gradient_raw(q);
        if lv == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability("p⁺(q) = 0".into()));
        }
        terms.plaus_pos = -lv;
        add_scaled(&mut grad, &g, -w_plus);
    }
    if w_minus > 0.0 {
        let (lv, g) = models.p_minus.soft_value_and_gradient_raw(q);
        if lv == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability("p⁻(q) = 0".into()));
        }
        terms.plaus_neg = lv;
        let norm = g.iter().flatten().map(|v| v * v).sum::<f64>().sqrt();
        let scale = match w.neg_grad_clip {
            Some(cap) if norm > cap => cap / norm,
            _ => 1.0,
        };
        add_scaled(&mut grad, &g, w_minus * scale);
    }
    if w_sparse > 0.0 {
        for &j in &mutable {
            let p = q[j][factual[j]].max(f64::MIN_POSITIVE);
            terms.sparsity -= p.ln() / m;
            grad[j][factual[j]] -= w_sparse / (m * p);
        }
    }
    if w_ent > 0.0 {
        for &j in &mutable {
            for (a, &p) in q[j].iter().enumerate() {
                if p > 0.0 {
                    terms.entropy -= p * p.ln() / m;
                    grad[j][a] -= w_ent * (p.ln() + 1.0) / m;
                }
            }
        }
    }
    let total = w_val * terms.validity
        + w_prox * terms.proximity
        + w_plus * terms.plaus_pos
        + w_minus * terms.plaus_neg
        + w_sparse * terms.sparsity
        + w_ent * terms.entropy;
    Ok(LossEval { total, terms, grad_q: grad })
}

fn add_scaled(acc: &mut [Vec<f64>], g: &[Vec<f64>], s: f64) {
    for (a, b) in acc.iter_mut().zip(g) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += s * y;
        }
    }
}
