//! Local search on decoded candidates: causal repair, budgeted
//! single-feature exploration to restore validity, and validity-preserving
//! reversion of superfluous changes.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::constraints::{CausalRule, ConstraintSet};
use crate::data::one_hot;
use crate::neural::MlpModel;

/// Acceptance score of a discrete instance.
pub trait Scorer {
    fn score(&self, x: &[usize]) -> f64;
}

impl<F: Fn(&[usize]) -> f64> Scorer for F {
    fn score(&self, x: &[usize]) -> f64 {
        self(x)
    }
}

/// A trained classifier applied to the one-hot encoding.
pub struct OneHotClassifier<'a> {
    pub model: &'a MlpModel,
    pub cards: &'a [usize],
}

impl Scorer for OneHotClassifier<'_> {
    fn score(&self, x: &[usize]) -> f64 {
        let input = one_hot(x, self.cards).expect("instance matches the cardinalities");
        self.model.score(&input).expect("classifier input dimension matches")
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub threshold: f64,
    /// Largest allowed drop of `log p⁺` per accepted reversion, in nats.
    pub delta_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub assignment: Vec<usize>,
    pub score: f64,
    pub hamming: usize,
    pub loglik: Option<f64>,
}

impl Candidate {
    fn new(
        assignment: Vec<usize>,
        factual: &[usize],
        cs: &ConstraintSet,
        f: &impl Scorer,
        p_plus: Option<&Circuit>,
    ) -> Self {
        Candidate {
            score: f.score(&assignment),
            hamming: cs.mutable_distance(&assignment, factual),
            loglik: p_plus.map(|p| p.log_likelihood(&assignment).expect("assignment within cardinalities")),
            assignment,
        }
    }

    fn ll(&self) -> f64 {
        self.loglik.unwrap_or(0.0)
    }
}

/// Clamps every effect back to its factual value while its cause has not
/// increased, until all causal implications hold.
pub fn repair_causality(candidate: &[usize], factual: &[usize], rules: &[CausalRule]) -> Vec<usize> {
    let mut c = candidate.to_vec();
    loop {
        let mut changed = false;
        for r in rules {
            if c[r.cause] <= factual[r.cause] && c[r.effect] > factual[r.effect] {
                c[r.effect] = factual[r.effect];
                changed = true;
            }
        }
        if !changed {
            return c;
        }
    }
}

/// Reverts changed features one at a time while the candidate stays valid,
/// feasible, within `budget` and, if configured, plausible.
pub fn sparsify(
    candidate: &[usize],
    factual: &[usize],
    cs: &ConstraintSet,
    f: &impl Scorer,
    p_plus: Option<&Circuit>,
    budget: usize,
    cfg: &RefineConfig,
) -> Vec<usize> {
    let mut c = candidate.to_vec();
    let ordered = cs.ordered_flags();
    let loglik = |x: &[usize]| p_plus.map(|p| p.log_likelihood(x).expect("assignment within cardinalities"));
    let mut reference = loglik(&c);
    loop {
        let mut changed: Vec<usize> = cs.mutable().into_iter().filter(|&j| c[j] != factual[j]).collect();
        changed.sort_by_key(|&j| {
            let dist = if ordered[j] { c[j].abs_diff(factual[j]) } else { 1 };
            (dist, ordered[j], j)
        });
        let mut accepted = false;
        for j in changed {
            let mut trial = c.clone();
            trial[j] = factual[j];
            let trial = repair_causality(&trial, factual, cs.rules());
            if !(cs.within_budget(&trial, factual, budget) && cs.feasible(&trial, factual)) {
                continue;
            }
            if f.score(&trial) < cfg.threshold {
                continue;
            }
            let ll = loglik(&trial);
            if let (Some(dmax), Some(now), Some(reference)) = (cfg.delta_max, ll, reference) {
                if now < reference - dmax {
                    continue;
                }
            }
            c = trial;
            reference = ll;
            accepted = true;
            break;
        }
        if !accepted {
            return c;
        }
    }
}

/// Valid candidates compare by (−ŷ, Hamming, −log p⁺); smaller wins.
fn valid_key_cmp(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.hamming.cmp(&b.hamming))
        .then(b.ll().total_cmp(&a.ll()))
}

/// Two-phase local search starting from a decoded candidate. The budget is
/// the decoded candidate's mutable Hamming distance; the result is always
/// feasible and within that budget.
pub fn refine(
    decoded: &[usize],
    factual: &[usize],
    cs: &ConstraintSet,
    f: &impl Scorer,
    p_plus: Option<&Circuit>,
    cfg: &RefineConfig,
) -> Candidate {
    let budget = cs.mutable_distance(decoded, factual);
    let mut c = decoded.to_vec();
    for j in cs.immutable() {
        c[j] = factual[j];
    }
    let mut c = repair_causality(&c, factual, cs.rules());
    if !(cs.feasible(&c, factual) && cs.within_budget(&c, factual, budget)) {
        c = factual.to_vec();
    }
    let finish = |x: Vec<usize>| {
        let x = sparsify(&x, factual, cs, f, p_plus, budget, cfg);
        Candidate::new(x, factual, cs, f, p_plus)
    };
    if f.score(&c) >= cfg.threshold {
        return finish(c);
    }

    let cards = cs.cardinalities();
    let mut best_valid: Option<Candidate> = None;
    let mut fallback: Option<Candidate> = None;
    for j in cs.mutable() {
        for v in (0..cards[j]).filter(|&v| v != c[j]) {
            let mut trial = c.clone();
            trial[j] = v;
            let trial = repair_causality(&trial, factual, cs.rules());
            if !(cs.within_budget(&trial, factual, budget) && cs.feasible(&trial, factual)) {
                continue;
            }
            let cand = Candidate::new(trial, factual, cs, f, p_plus);
            if cand.score >= cfg.threshold {
                if best_valid.as_ref().is_none_or(|b| valid_key_cmp(&cand, b) == Ordering::Less) {
                    best_valid = Some(cand);
                }
            } else if fallback
                .as_ref()
                .is_none_or(|b| cand.score > b.score || (cand.score == b.score && cand.ll() > b.ll()))
            {
                fallback = Some(cand);
            }
        }
    }
    match (best_valid, fallback) {
        (Some(v), _) => finish(v.assignment),
        (None, Some(fb)) => fb,
        (None, None) => Candidate::new(c, factual, cs, f, p_plus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> Vec<CausalRule> {
        vec![CausalRule { effect: 1, cause: 0 }, CausalRule { effect: 2, cause: 1 }]
    }

    #[test]
    fn repair_examples() {
        let x = [1, 1, 1];
        assert_eq!(repair_causality(&[1, 2, 1], &x, &rules()), vec![1, 1, 1]);
        assert_eq!(repair_causality(&[2, 2, 1], &x, &rules()), vec![2, 2, 1]);
        assert_eq!(repair_causality(&[1, 2, 2], &x, &[]), vec![1, 2, 2]);
        // chained: clamping the middle feature disables the second rule's guard
        assert_eq!(repair_causality(&[1, 2, 2], &x, &rules()), vec![1, 1, 1]);
    }

    fn free(cards: Vec<usize>) -> ConstraintSet {
        let d = cards.len();
        ConstraintSet::new(cards, &vec![true; d], &[], &[], vec![]).unwrap()
    }

    #[test]
    fn superfluous_change_is_reverted() {
        let cs = free(vec![3, 3, 3]);
        // accepts whenever feature 0 is 2; features 1 and 2 are ignored
        let f = |x: &[usize]| if x[0] == 2 { 0.9 } else { 0.1 };
        let cfg = RefineConfig { threshold: 0.5, delta_max: None };
        let out = sparsify(&[2, 1, 0], &[0, 0, 0], &cs, &f, None, 3, &cfg);
        assert_eq!(out, vec![2, 0, 0]);
        let needs_all = |x: &[usize]| if x == [2, 1, 1] { 0.9 } else { 0.1 };
        assert_eq!(sparsify(&[2, 1, 1], &[0, 0, 0], &cs, &needs_all, None, 3, &cfg), vec![2, 1, 1]);
        assert_eq!(sparsify(&[0, 0, 0], &[0, 0, 0], &cs, &f, None, 3, &cfg), vec![0, 0, 0]);
    }

    #[test]
    fn one_feature_fix_is_found() {
        let cs = free(vec![3, 3]);
        let f = |x: &[usize]| if x[1] == 2 { 0.8 } else { 0.2 };
        let cfg = RefineConfig { threshold: 0.5, delta_max: None };
        // moving feature 1 fixes validity; the change to feature 0 is then reverted
        let out = refine(&[1, 1], &[0, 0], &cs, &f, None, &cfg);
        assert!(out.score >= 0.5);
        assert_eq!(out.assignment, vec![0, 2]);
        assert_eq!(out.hamming, 1);
    }

    #[test]
    fn unreachable_threshold_returns_feasible_fallback() {
        let cs = ConstraintSet::new(vec![3, 3], &[true; 2], &[], &[0], vec![]).unwrap();
        let f = |x: &[usize]| 0.1 + 0.1 * x[0] as f64 + 0.05 * x[1] as f64;
        let cfg = RefineConfig { threshold: 0.99, delta_max: None };
        let out = refine(&[1, 1], &[1, 0], &cs, &f, None, &cfg);
        assert!(out.score < 0.99);
        assert!(cs.feasible(&out.assignment, &[1, 0]));
        assert_eq!(out.assignment, vec![1, 2]);
    }
}
