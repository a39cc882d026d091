//! Hard actionability constraints: immutability, monotonicity and causal
//! implications, enforced by logit masking when decoding and by discrete
//! predicates during search.

use serde::{Deserialize, Serialize};

use crate::data::{Discretizer, Schema};
use crate::error::{Error, Result};

/// Logit sentinel for masked categories.
pub const NEG: f64 = -1e9;

/// `effect` may only increase if `cause` increases too.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalRule {
    pub effect: usize,
    pub cause: usize,
}

impl CausalRule {
    /// Whether `candidate` respects the rule relative to `factual`.
    pub fn holds(&self, candidate: &[usize], factual: &[usize]) -> bool {
        candidate[self.effect] <= factual[self.effect] || candidate[self.cause] > factual[self.cause]
    }
}

/// Sets every category below the factual one to [`NEG`].
pub fn apply_monotone_mask(logits: &mut [f64], factual: usize) -> Result<()> {
    if factual >= logits.len() {
        return Err(Error::OutOfRange(format!("factual category {factual} of {}", logits.len())));
    }
    logits[..factual].iter_mut().for_each(|l| *l = NEG);
    Ok(())
}

/// Sets every category above the factual one to [`NEG`].
pub fn apply_causal_clamp(logits: &mut [f64], factual: usize) {
    logits.iter_mut().skip(factual + 1).for_each(|l| *l = NEG);
}

/// Joint distribution of one (cause, effect) pair after masking.
#[derive(Debug, Clone, PartialEq)]
pub struct PairJoint {
    /// `C_cause × C_effect` masked joint logits.
    pub logits: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
    pub cause_marginal: Vec<f64>,
    pub effect_marginal: Vec<f64>,
    /// `(cause, effect)` categories of the joint argmax.
    pub argmax: (usize, usize),
}

/// Pairwise joint masking for a rule whose effect and cause are both mutable.
pub fn apply_causal_joint(
    logits_effect: &[f64],
    logits_cause: &[f64],
    factual_effect: usize,
    factual_cause: usize,
) -> PairJoint {
    let legal = |ac: usize, ae: usize| ae <= factual_effect || ac > factual_cause;
    let logits: Vec<Vec<f64>> = logits_cause
        .iter()
        .enumerate()
        .map(|(ac, lc)| {
            logits_effect
                .iter()
                .enumerate()
                .map(|(ae, le)| if legal(ac, ae) { lc + le } else { NEG })
                .collect()
        })
        .collect();
    let mut argmax = (factual_cause, factual_effect);
    let mut best = f64::NEG_INFINITY;
    for (ac, row) in logits.iter().enumerate() {
        for (ae, &s) in row.iter().enumerate() {
            if legal(ac, ae) && s > best {
                best = s;
                argmax = (ac, ae);
            }
        }
    }
    assert!(best > f64::NEG_INFINITY, "factual pair is always legal");
    let probs: Vec<Vec<f64>> = logits
        .iter()
        .enumerate()
        .map(|(ac, row)| {
            row.iter()
                .enumerate()
                .map(|(ae, &s)| if legal(ac, ae) { (s - best).exp() } else { 0.0 })
                .collect()
        })
        .collect();
    let total: f64 = probs.iter().flatten().sum();
    let probs: Vec<Vec<f64>> = probs.into_iter().map(|r| r.into_iter().map(|p| p / total).collect()).collect();
    let cause_marginal = probs.iter().map(|r| r.iter().sum()).collect();
    let effect_marginal = (0..logits_effect.len()).map(|ae| probs.iter().map(|r| r[ae]).sum()).collect();
    PairJoint { logits, probs, cause_marginal, effect_marginal, argmax }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    cards: Vec<usize>,
    ordered: Vec<bool>,
    immutable: Vec<bool>,
    monotone: Vec<bool>,
    rules: Vec<CausalRule>,
}

/// Features tied together by causal rules between mutable features; their
/// categories are decoded jointly.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalGroup {
    pub features: Vec<usize>,
    pub rules: Vec<CausalRule>,
}

impl ConstraintSet {
    pub fn new(
        cards: Vec<usize>,
        ordered: &[bool],
        immutable: &[usize],
        monotone: &[usize],
        rules: Vec<CausalRule>,
    ) -> Result<Self> {
        let d = cards.len();
        if ordered.len() != d {
            return Err(Error::Dimension { expected: d, got: ordered.len() });
        }
        let check = |j: usize| {
            if j >= d {
                Err(Error::OutOfRange(format!("feature index {j} with {d} features")))
            } else {
                Ok(())
            }
        };
        let needs_order = |j: usize, what: &str| {
            if ordered[j] {
                Ok(())
            } else {
                Err(Error::Ordering { feature: format!("#{j}"), reason: format!("{what} feature has an unordered domain") })
            }
        };
        let mut imm = vec![false; d];
        for &j in immutable {
            check(j)?;
            imm[j] = true;
        }
        let mut mono = vec![false; d];
        for &j in monotone {
            check(j)?;
            needs_order(j, "monotone")?;
            mono[j] = true;
        }
        for r in &rules {
            check(r.effect)?;
            check(r.cause)?;
            if r.effect == r.cause {
                return Err(Error::Precondition(format!("feature {} cannot cause itself", r.effect)));
            }
            needs_order(r.effect, "causal")?;
            needs_order(r.cause, "causal")?;
        }
        Ok(ConstraintSet { cards, ordered: ordered.to_vec(), immutable: imm, monotone: mono, rules })
    }

    /// Reads immutability, monotonicity and causal rules from the schema;
    /// feature indices follow the discretizer.
    pub fn from_schema(schema: &Schema, disc: &Discretizer) -> Result<Self> {
        let names = disc.names();
        let index = |name: &str| {
            names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| Error::Schema(format!("unknown feature `{name}` in constraints")))
        };
        let mut immutable = Vec::new();
        let mut monotone = Vec::new();
        for f in &schema.features {
            if f.immutable {
                immutable.push(index(&f.name)?);
            }
            if f.monotone {
                monotone.push(index(&f.name)?);
            }
        }
        let rules = schema
            .causal
            .iter()
            .map(|c| Ok(CausalRule { effect: index(&c.effect)?, cause: index(&c.cause)? }))
            .collect::<Result<Vec<_>>>()?;
        let ordered = disc.ordered_flags();
        let order_bound = monotone.iter().chain(rules.iter().flat_map(|r| [&r.effect, &r.cause]));
        if let Some(&j) = order_bound.into_iter().find(|&&j| !ordered[j]) {
            return Err(Error::Ordering {
                feature: names[j].to_string(),
                reason: "constrained feature has an unordered domain".into(),
            });
        }
        Self::new(disc.cardinalities(), &ordered, &immutable, &monotone, rules)
    }

    /// Same constraints with a different immutable set.
    pub fn with_immutable(&self, immutable: &[usize]) -> Result<Self> {
        let mut next = self.clone();
        next.immutable = vec![false; self.cards.len()];
        for &j in immutable {
            if j >= self.cards.len() {
                return Err(Error::OutOfRange(format!("feature index {j}")));
            }
            next.immutable[j] = true;
        }
        Ok(next)
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_features(&self) -> usize {
        self.cards.len()
    }

    /// Whether each feature's categories carry a meaningful order.
    pub fn ordered_flags(&self) -> &[bool] {
        &self.ordered
    }

    pub fn is_immutable(&self, j: usize) -> bool {
        self.immutable[j]
    }

    pub fn is_monotone(&self, j: usize) -> bool {
        self.monotone[j]
    }

    pub fn rules(&self) -> &[CausalRule] {
        &self.rules
    }

    pub fn mutable(&self) -> Vec<usize> {
        (0..self.cards.len()).filter(|&j| !self.immutable[j]).collect()
    }

    pub fn immutable(&self) -> Vec<usize> {
        (0..self.cards.len()).filter(|&j| self.immutable[j]).collect()
    }

    /// Connected components of the rules whose effect and cause are both
    /// mutable, in order of their smallest feature.
    pub fn groups(&self) -> Vec<CausalGroup> {
        let joint: Vec<CausalRule> = self
            .rules
            .iter()
            .copied()
            .filter(|r| !self.immutable[r.effect] && !self.immutable[r.cause])
            .collect();
        let mut parent: Vec<usize> = (0..self.cards.len()).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for r in &joint {
            let (a, b) = (find(&mut parent, r.effect), find(&mut parent, r.cause));
            parent[a.max(b)] = a.min(b);
        }
        let mut groups: Vec<CausalGroup> = Vec::new();
        for j in 0..self.cards.len() {
            if !joint.iter().any(|r| r.effect == j || r.cause == j) {
                continue;
            }
            let root = find(&mut parent, j);
            match groups.iter_mut().find(|g| find(&mut parent, g.features[0]) == root) {
                Some(g) => g.features.push(j),
                None => groups.push(CausalGroup { features: vec![j], rules: Vec::new() }),
            }
        }
        for g in &mut groups {
            g.rules = joint.iter().copied().filter(|r| g.features.contains(&r.effect)).collect();
        }
        groups
    }

    /// Per-feature legal categories before joint masking: immutables keep
    /// the factual value, monotone features cannot decrease, and an effect
    /// whose cause is immutable cannot increase.
    pub fn allowed(&self, factual: &[usize]) -> Result<Vec<Vec<bool>>> {
        self.check_instance(factual)?;
        let mut allowed: Vec<Vec<bool>> = self.cards.iter().map(|&c| vec![true; c]).collect();
        for (j, a) in allowed.iter_mut().enumerate() {
            let x = factual[j];
            if self.immutable[j] {
                a.iter_mut().enumerate().for_each(|(k, v)| *v = k == x);
            } else if self.monotone[j] {
                a[..x].iter_mut().for_each(|v| *v = false);
            }
        }
        for r in &self.rules {
            if !self.immutable[r.effect] && self.immutable[r.cause] {
                allowed[r.effect][factual[r.effect] + 1..].iter_mut().for_each(|v| *v = false);
            }
        }
        Ok(allowed)
    }

    /// Per-feature logits with illegal categories set to [`NEG`].
    pub fn mask_logits(&self, logits: &[Vec<f64>], factual: &[usize]) -> Result<Vec<Vec<f64>>> {
        let allowed = self.allowed(factual)?;
        self.check_logits(logits)?;
        Ok(logits
            .iter()
            .zip(&allowed)
            .map(|(l, a)| l.iter().zip(a).map(|(&v, &ok)| if ok { v } else { NEG }).collect())
            .collect())
    }

    /// Immutables unchanged, monotone features not decreased, every causal
    /// implication satisfied.
    pub fn feasible(&self, candidate: &[usize], factual: &[usize]) -> bool {
        candidate.len() == factual.len()
            && (0..factual.len()).all(|j| {
                !(self.immutable[j] && candidate[j] != factual[j]) && !(self.monotone[j] && candidate[j] < factual[j])
            })
            && self.rules.iter().all(|r| r.holds(candidate, factual))
    }

    /// Hamming distance over mutable features.
    pub fn mutable_distance(&self, candidate: &[usize], factual: &[usize]) -> usize {
        candidate
            .iter()
            .zip(factual)
            .enumerate()
            .filter(|&(j, (a, b))| !self.immutable[j] && a != b)
            .count()
    }

    pub fn within_budget(&self, candidate: &[usize], factual: &[usize], budget: usize) -> bool {
        self.mutable_distance(candidate, factual) <= budget
    }

    /// Constrained softmax of per-feature logits: independent features get a
    /// masked softmax, causal groups a masked softmax over their legal joint
    /// assignments followed by marginalization.
    pub fn masked_softmax(&self, logits: &[Vec<f64>], factual: &[usize]) -> Result<MaskedSoftmax> {
        let allowed = self.allowed(factual)?;
        self.check_logits(logits)?;
        let groups = self.groups();
        let mut in_group = vec![false; self.cards.len()];
        groups.iter().flat_map(|g| &g.features).for_each(|&j| in_group[j] = true);

        let mut q: Vec<Vec<f64>> = self.cards.iter().map(|&c| vec![0.0; c]).collect();
        let mut blocks = Vec::new();
        for j in (0..self.cards.len()).filter(|&j| !in_group[j]) {
            let scores: Vec<Option<f64>> =
                logits[j].iter().zip(&allowed[j]).map(|(&l, &ok)| ok.then_some(l)).collect();
            q[j] = softmax_partial(&scores);
            blocks.push(Block::Single { feature: j });
        }
        for g in groups {
            let tuples = legal_tuples(&g, &allowed, factual);
            let scores: Vec<Option<f64>> = tuples
                .iter()
                .map(|t| Some(g.features.iter().zip(t).map(|(&j, &a)| logits[j][a]).sum()))
                .collect();
            let probs = softmax_partial(&scores);
            for (t, p) in tuples.iter().zip(&probs) {
                for (&j, &a) in g.features.iter().zip(t) {
                    q[j][a] += p;
                }
            }
            blocks.push(Block::Group { features: g.features, tuples, probs });
        }
        Ok(MaskedSoftmax { q, blocks, allowed })
    }

    /// Hard decode: per-feature argmax over legal categories and joint argmax
    /// inside each causal group. Ties go to the lowest category.
    pub fn decode(&self, logits: &[Vec<f64>], factual: &[usize]) -> Result<Vec<usize>> {
        let allowed = self.allowed(factual)?;
        self.check_logits(logits)?;
        let mut out = factual.to_vec();
        let groups = self.groups();
        for j in 0..self.cards.len() {
            if groups.iter().any(|g| g.features.contains(&j)) {
                continue;
            }
            out[j] = best_index(logits[j].iter().zip(&allowed[j]).map(|(&l, &ok)| ok.then_some(l)))
                .expect("the factual category is always legal");
        }
        for g in groups {
            let tuples = legal_tuples(&g, &allowed, factual);
            let best = best_index(tuples.iter().map(|t| Some(g.features.iter().zip(t).map(|(&j, &a)| logits[j][a]).sum())))
                .expect("the factual assignment is always legal");
            for (&j, &a) in g.features.iter().zip(&tuples[best]) {
                out[j] = a;
            }
        }
        Ok(out)
    }

    fn check_instance(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.cards.len() {
            return Err(Error::Dimension { expected: self.cards.len(), got: x.len() });
        }
        for (j, (&v, &c)) in x.iter().zip(&self.cards).enumerate() {
            if v >= c {
                return Err(Error::OutOfRange(format!("feature {j}: category {v} of {c}")));
            }
        }
        Ok(())
    }

    fn check_logits(&self, logits: &[Vec<f64>]) -> Result<()> {
        if logits.len() != self.cards.len() {
            return Err(Error::Dimension { expected: self.cards.len(), got: logits.len() });
        }
        for (l, &c) in logits.iter().zip(&self.cards) {
            if l.len() != c {
                return Err(Error::Dimension { expected: c, got: l.len() });
            }
        }
        Ok(())
    }
}

fn best_index(scores: impl Iterator<Item = Option<f64>>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        if let Some(s) = s {
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Softmax over the `Some` entries; `None` entries get exactly zero mass.
fn softmax_partial(scores: &[Option<f64>]) -> Vec<f64> {
    let max = scores.iter().flatten().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let exps: Vec<f64> = scores.iter().map(|s| s.map_or(0.0, |v| (v - max).exp())).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Assignments of the group's features that respect per-feature masks and
/// every rule in the group, in lexicographic order.
fn legal_tuples(g: &CausalGroup, allowed: &[Vec<bool>], factual: &[usize]) -> Vec<Vec<usize>> {
    let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
    for &j in &g.features {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                allowed[j].iter().enumerate().filter(|(_, ok)| **ok).map(move |(a, _)| {
                    let mut n = t.clone();
                    n.push(a);
                    n
                })
            })
            .collect();
    }
    let pos = |j: usize| g.features.iter().position(|&f| f == j).unwrap();
    tuples.retain(|t| {
        g.rules.iter().all(|r| t[pos(r.effect)] <= factual[r.effect] || t[pos(r.cause)] > factual[r.cause])
    });
    tuples
}

#[derive(Debug, Clone)]
enum Block {
    Single { feature: usize },
    Group { features: Vec<usize>, tuples: Vec<Vec<usize>>, probs: Vec<f64> },
}

/// Output of [`ConstraintSet::masked_softmax`], kept for the backward pass.
#[derive(Debug, Clone)]
pub struct MaskedSoftmax {
    pub q: Vec<Vec<f64>>,
    blocks: Vec<Block>,
    allowed: Vec<Vec<bool>>,
}

impl MaskedSoftmax {
    pub fn allowed(&self) -> &[Vec<bool>] {
        &self.allowed
    }

    /// Hard decode from the distributions: per-feature argmax, joint argmax
    /// inside causal groups, lowest category on ties.
    pub fn decode(&self) -> Vec<usize> {
        let mut out = vec![0; self.q.len()];
        for block in &self.blocks {
            match block {
                Block::Single { feature } => {
                    let scores = self.q[*feature].iter().zip(&self.allowed[*feature]).map(|(&p, &ok)| ok.then_some(p));
                    out[*feature] = best_index(scores).expect("the factual category is always legal");
                }
                Block::Group { features, tuples, probs } => {
                    let best = best_index(probs.iter().map(|&p| Some(p))).expect("the factual assignment is always legal");
                    for (&j, &a) in features.iter().zip(&tuples[best]) {
                        out[j] = a;
                    }
                }
            }
        }
        out
    }

    /// Maps `∂L/∂q` to `∂L/∂logits`. Masked categories receive zero gradient.
    pub fn backward(&self, dq: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut dl: Vec<Vec<f64>> = self.q.iter().map(|b| vec![0.0; b.len()]).collect();
        for block in &self.blocks {
            match block {
                Block::Single { feature } => {
                    let (q, g) = (&self.q[*feature], &dq[*feature]);
                    let mean: f64 = q.iter().zip(g).map(|(p, d)| p * d).sum();
                    for (k, out) in dl[*feature].iter_mut().enumerate() {
                        *out = q[k] * (g[k] - mean);
                    }
                }
                Block::Group { features, tuples, probs } => {
                    let per_tuple: Vec<f64> = tuples
                        .iter()
                        .map(|t| features.iter().zip(t).map(|(&j, &a)| dq[j][a]).sum())
                        .collect();
                    let mean: f64 = probs.iter().zip(&per_tuple).map(|(p, g)| p * g).sum();
                    for ((t, p), g) in tuples.iter().zip(probs).zip(&per_tuple) {
                        let ds = p * (g - mean);
                        for (&j, &a) in features.iter().zip(t) {
                            dl[j][a] += ds;
                        }
                    }
                }
            }
        }
        dl
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_mask_examples() {
        let mut l = vec![1.0, 2.0, 3.0, 4.0];
        apply_monotone_mask(&mut l, 2).unwrap();
        assert_eq!(l, vec![NEG, NEG, 3.0, 4.0]);
        let mut l = vec![1.0, 2.0];
        apply_monotone_mask(&mut l, 0).unwrap();
        assert_eq!(l, vec![1.0, 2.0]);
        let mut l = vec![5.0, 1.0, 0.0];
        apply_monotone_mask(&mut l, 2).unwrap();
        assert_eq!(l, vec![NEG, NEG, 0.0]);
        assert!(apply_monotone_mask(&mut l, 3).is_err());
    }

    #[test]
    fn causal_clamp_examples() {
        let mut l = vec![5.0, 1.0, 9.0];
        apply_causal_clamp(&mut l, 1);
        assert_eq!(l, vec![5.0, 1.0, NEG]);
        let mut l = vec![5.0, 1.0, 9.0];
        apply_causal_clamp(&mut l, 2);
        assert_eq!(l, vec![5.0, 1.0, 9.0]);
    }

    #[test]
    fn joint_mask_examples() {
        let j = apply_causal_joint(&[0.0; 3], &[0.0; 3], 1, 1);
        let masked: Vec<(usize, usize)> = (0..3)
            .flat_map(|ac| (0..3).map(move |ae| (ac, ae)))
            .filter(|&(ac, ae)| j.logits[ac][ae] == NEG)
            .collect();
        assert_eq!(masked, vec![(0, 2), (1, 2)]);
        for (ac, row) in j.probs.iter().enumerate() {
            for (ae, &p) in row.iter().enumerate() {
                if masked.contains(&(ac, ae)) {
                    assert!(p < 1e-300);
                } else {
                    assert!((p - 1.0 / 7.0).abs() < 1e-15);
                }
            }
        }
        assert!((j.cause_marginal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((j.effect_marginal.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn toy() -> ConstraintSet {
        // 0 immutable, 1 monotone, rule 2 ⇐ 1 (both mutable), rule 3 ⇐ 0 (cause immutable)
        ConstraintSet::new(
            vec![2, 3, 3, 3],
            &[true; 4],
            &[0],
            &[1],
            vec![CausalRule { effect: 2, cause: 1 }, CausalRule { effect: 3, cause: 0 }],
        )
        .unwrap()
    }

    #[test]
    fn feasibility_and_budget_examples() {
        let cs = toy();
        let x = [0, 1, 1, 1];
        assert!(cs.feasible(&x, &x));
        assert!(!cs.feasible(&[1, 1, 1, 1], &x));
        assert!(!cs.feasible(&[0, 1, 2, 1], &x));
        assert!(cs.feasible(&[0, 2, 2, 1], &x));
        assert!(!cs.feasible(&[0, 0, 1, 1], &x));
        assert!(!cs.feasible(&[0, 1, 1, 2], &x));

        let free = ConstraintSet::new(vec![3; 4], &[true; 4], &[], &[], vec![]).unwrap();
        let f = [0, 0, 0, 0];
        assert!(free.within_budget(&f, &f, 0));
        assert!(!free.within_budget(&[1, 1, 1, 0], &f, 2));
        assert!(free.within_budget(&[1, 1, 1, 0], &f, 3));
    }

    #[test]
    fn unordered_features_cannot_carry_order_constraints() {
        let r = ConstraintSet::new(vec![3, 3], &[true, false], &[], &[1], vec![]);
        assert!(matches!(r, Err(Error::Ordering { .. })));
        let r = ConstraintSet::new(vec![3, 3], &[true, false], &[], &[], vec![CausalRule { effect: 0, cause: 1 }]);
        assert!(matches!(r, Err(Error::Ordering { .. })));
    }

    #[test]
    fn group_softmax_matches_pairwise_joint() {
        let cs = ConstraintSet::new(vec![3, 3], &[true; 2], &[], &[], vec![CausalRule { effect: 0, cause: 1 }]).unwrap();
        let le = vec![0.3, -1.0, 2.0];
        let lc = vec![1.5, 0.2, -0.4];
        let x = [1, 1];
        let sm = cs.masked_softmax(&[le.clone(), lc.clone()], &x).unwrap();
        let pair = apply_causal_joint(&le, &lc, 1, 1);
        for k in 0..3 {
            assert!((sm.q[0][k] - pair.effect_marginal[k]).abs() < 1e-15);
            assert!((sm.q[1][k] - pair.cause_marginal[k]).abs() < 1e-15);
        }
        let decoded = cs.decode(&[le, lc], &x).unwrap();
        assert_eq!((decoded[1], decoded[0]), pair.argmax);
    }

    #[test]
    fn immutable_feature_decodes_to_factual() {
        let cs = toy();
        let x = [1, 0, 0, 2];
        let logits = vec![vec![9.0, -9.0], vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]];
        let sm = cs.masked_softmax(&logits, &x).unwrap();
        assert_eq!(sm.q[0], vec![0.0, 1.0]);
        assert_eq!(cs.decode(&logits, &x).unwrap()[0], 1);
    }
}
