//! Smooth, decomposable probabilistic circuits over categorical variables.
//!
//! Nodes live in an arena in topological order (every child id is smaller
//! than its parent's id). All evaluation happens in log-space. Soft inputs
//! replace the one-hot indicator at each leaf by a probability vector, which
//! makes the circuit value multilinear in each feature block.

mod io;
mod learn;
mod random;

use std::collections::BTreeSet;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};

pub use learn::{learn_structure, LearnConfig};
pub use random::random_circuit;

pub type NodeId = usize;

/// Tolerance used when checking that weights and leaf parameters sum to one.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { feature: usize, probs: Vec<f64> },
    Sum { children: Vec<NodeId>, weights: Vec<f64> },
    Product { children: Vec<NodeId> },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Leaf { .. } => &[],
            Node::Sum { children, .. } | Node::Product { children } => children,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Node::Leaf { .. } => "leaf",
            Node::Sum { .. } => "sum",
            Node::Product { .. } => "product",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Structure,
    Cycle,
    Smoothness,
    Decomposability,
    WeightNormalization,
    LeafNormalization,
    RootScope,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub node: NodeId,
    pub kind: ViolationKind,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }

    fn into_result(self) -> Result<()> {
        match self.violations.into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::InvalidCircuit {
                node: v.node,
                reason: format!("{:?}: {}", v.kind, v.detail),
            }),
        }
    }
}

/// Per-feature probability vectors `q_j` on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftInstance(Vec<Vec<f64>>);

impl SoftInstance {
    pub fn new(blocks: Vec<Vec<f64>>) -> Result<Self> {
        for (j, q) in blocks.iter().enumerate() {
            if q.is_empty() {
                return Err(Error::Simplex { feature: j, reason: "empty block".into() });
            }
            if let Some(bad) = q.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                return Err(Error::Simplex { feature: j, reason: format!("entry {bad} is not a probability") });
            }
            let s: f64 = q.iter().sum();
            if (s - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::Simplex { feature: j, reason: format!("block sums to {s}") });
            }
        }
        Ok(Self(blocks))
    }

    /// The simplex vertex at a discrete instance.
    pub fn one_hot(x: &[usize], cards: &[usize]) -> Result<Self> {
        if x.len() != cards.len() {
            return Err(Error::Dimension { expected: cards.len(), got: x.len() });
        }
        let blocks = x
            .iter()
            .zip(cards)
            .enumerate()
            .map(|(j, (&v, &c))| {
                if v >= c {
                    return Err(Error::OutOfRange(format!("feature {j}: code {v} >= {c}")));
                }
                let mut b = vec![0.0; c];
                b[v] = 1.0;
                Ok(b)
            })
            .collect::<Result<_>>()?;
        Ok(Self(blocks))
    }

    pub fn uniform(cards: &[usize]) -> Self {
        Self(cards.iter().map(|&c| vec![1.0 / c as f64; c]).collect())
    }

    pub fn blocks(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn into_blocks(self) -> Vec<Vec<f64>> {
        self.0
    }

    /// Copy with block `j` replaced by the vertex `e_c`.
    pub fn with_vertex(&self, j: usize, c: usize) -> Self {
        let mut blocks = self.0.clone();
        blocks[j].iter_mut().for_each(|v| *v = 0.0);
        blocks[j][c] = 1.0;
        Self(blocks)
    }
}

/// A sum-product network with categorical leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    nodes: Vec<Node>,
    root: NodeId,
    cards: Vec<usize>,
}

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

impl Circuit {
    /// Builds a circuit and rejects it unless every structural check passes.
    pub fn new(nodes: Vec<Node>, root: NodeId, cards: Vec<usize>) -> Result<Self> {
        let c = Self::from_nodes_unchecked(nodes, root, cards);
        c.validate().into_result()?;
        Ok(c)
    }

    /// Builds without validation; use [`Circuit::validate`] before inference.
    pub fn from_nodes_unchecked(nodes: Vec<Node>, root: NodeId, cards: Vec<usize>) -> Self {
        Self { nodes, root, cards }
    }

    /// Single-leaf circuit over one feature.
    pub fn leaf(probs: Vec<f64>) -> Result<Self> {
        let card = probs.len();
        Self::new(vec![Node::Leaf { feature: 0, probs }], 0, vec![card])
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_features(&self) -> usize {
        self.cards.len()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Feature scope of every node; `None` past a structural error.
    pub fn scopes(&self) -> Vec<BTreeSet<usize>> {
        let mut scopes: Vec<BTreeSet<usize>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let s = match node {
                Node::Leaf { feature, .. } => BTreeSet::from([*feature]),
                _ => node
                    .children()
                    .iter()
                    .filter(|&&c| c < scopes.len())
                    .flat_map(|&c| scopes[c].iter().copied())
                    .collect(),
            };
            scopes.push(s);
        }
        scopes
    }

    /// Checks structure, acyclicity, smoothness, decomposability and normalization.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let mut push = |node, kind, detail: String| violations.push(Violation { node, kind, detail });

        if self.root >= self.nodes.len() {
            push(self.root, ViolationKind::Structure, "root id out of range".into());
            return ValidationReport { violations };
        }
        let mut structural_ok = true;
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in node.children() {
                if c >= self.nodes.len() {
                    push(id, ViolationKind::Structure, format!("child {c} does not exist"));
                    structural_ok = false;
                } else if c >= id {
                    // arena order is topological; a back- or self-reference can close a cycle
                    push(id, ViolationKind::Cycle, format!("child {c} is not before its parent"));
                    structural_ok = false;
                }
            }
            match node {
                Node::Leaf { feature, probs } => {
                    if *feature >= self.cards.len() {
                        push(id, ViolationKind::Structure, format!("leaf feature {feature} out of range"));
                        structural_ok = false;
                        continue;
                    }
                    if probs.len() != self.cards[*feature] {
                        push(
                            id,
                            ViolationKind::Structure,
                            format!("leaf has {} parameters for cardinality {}", probs.len(), self.cards[*feature]),
                        );
                        structural_ok = false;
                    }
                    let s: f64 = probs.iter().sum();
                    if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (s - 1.0).abs() > NORMALIZATION_TOL {
                        push(id, ViolationKind::LeafNormalization, format!("leaf parameters sum to {s}"));
                    }
                }
                Node::Sum { children, weights } => {
                    if children.is_empty() || children.len() != weights.len() {
                        push(id, ViolationKind::Structure, "sum node needs one weight per child".into());
                        structural_ok = false;
                        continue;
                    }
                    let s: f64 = weights.iter().sum();
                    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0 && *w <= 1.0))
                        || (s - 1.0).abs() > NORMALIZATION_TOL
                    {
                        push(id, ViolationKind::WeightNormalization, format!("weights {weights:?} sum to {s}"));
                    }
                }
                Node::Product { children } => {
                    if children.is_empty() {
                        push(id, ViolationKind::Structure, "product node without children".into());
                        structural_ok = false;
                    }
                }
            }
        }
        if !structural_ok {
            return ValidationReport { violations };
        }

        let scopes = self.scopes();
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Sum { children, .. } => {
                    if let Some(&bad) = children.iter().find(|&&c| scopes[c] != scopes[id]) {
                        push(id, ViolationKind::Smoothness, format!("child {bad} has a different scope"));
                    }
                }
                Node::Product { children } => {
                    let total: usize = children.iter().map(|&c| scopes[c].len()).sum();
                    if total != scopes[id].len() {
                        push(id, ViolationKind::Decomposability, "children scopes overlap".into());
                    }
                }
                Node::Leaf { .. } => {}
            }
        }
        let all: BTreeSet<usize> = (0..self.cards.len()).collect();
        if scopes[self.root] != all {
            push(self.root, ViolationKind::RootScope, "root scope is not the full feature set".into());
        }
        ValidationReport { violations }
    }

    fn check_instance(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.cards.len() {
            return Err(Error::Dimension { expected: self.cards.len(), got: x.len() });
        }
        for (j, (&v, &c)) in x.iter().zip(&self.cards).enumerate() {
            if v >= c {
                return Err(Error::OutOfRange(format!("feature {j}: code {v} >= cardinality {c}")));
            }
        }
        Ok(())
    }

    /// Bottom-up log-values given per-leaf log-values.
    fn propagate(&self, mut leaf: impl FnMut(usize, &[f64]) -> f64) -> Vec<f64> {
        let mut lv = vec![f64::NEG_INFINITY; self.root + 1];
        for id in 0..=self.root {
            lv[id] = match &self.nodes[id] {
                Node::Leaf { feature, probs } => leaf(*feature, probs),
                Node::Product { children } => children.iter().map(|&c| lv[c]).sum(),
                Node::Sum { children, weights } => {
                    log_sum_exp(children.iter().zip(weights).map(|(&c, w)| w.ln() + lv[c]))
                }
            };
        }
        lv
    }

    /// Exact `log p(x)`; `-inf` when some leaf on every path assigns zero.
    pub fn log_likelihood(&self, x: &[usize]) -> Result<f64> {
        self.check_instance(x)?;
        Ok(self.log_likelihood_unchecked(x))
    }

    pub(crate) fn log_likelihood_unchecked(&self, x: &[usize]) -> f64 {
        self.propagate(|j, probs| probs[x[j]].ln())[self.root]
    }

    fn soft_log_values(&self, q: &[Vec<f64>]) -> Vec<f64> {
        self.propagate(|j, probs| probs.iter().zip(&q[j]).map(|(t, w)| t * w).sum::<f64>().ln())
    }

    fn check_soft(&self, q: &SoftInstance) -> Result<()> {
        let blocks = q.blocks();
        if blocks.len() != self.cards.len() {
            return Err(Error::Dimension { expected: self.cards.len(), got: blocks.len() });
        }
        for (j, (b, &c)) in blocks.iter().zip(&self.cards).enumerate() {
            if b.len() != c {
                return Err(Error::Simplex { feature: j, reason: format!("block has {} entries for cardinality {c}", b.len()) });
            }
        }
        Ok(())
    }

    /// `log v(q)` where each leaf evaluates `Σ_c q_{j,c} θ_{j,c}`.
    pub fn soft_value(&self, q: &SoftInstance) -> Result<f64> {
        self.check_soft(q)?;
        Ok(self.soft_log_values(q.blocks())[self.root])
    }

    /// `∂ log v(q) / ∂ q_{j,c}` by a single reverse pass over the DAG.
    pub fn soft_gradient(&self, q: &SoftInstance) -> Result<Vec<Vec<f64>>> {
        self.check_soft(q)?;
        let (log_v, grad) = self.soft_value_and_gradient_raw(q.blocks());
        if log_v == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability("soft circuit value is zero".into()));
        }
        Ok(grad)
    }

    /// Unvalidated value-and-gradient used on the training hot path.
    pub(crate) fn soft_value_and_gradient_raw(&self, q: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let lv = self.soft_log_values(q);
        let log_v = lv[self.root];
        let mut grad: Vec<Vec<f64>> = self.cards.iter().map(|&c| vec![0.0; c]).collect();
        if log_v == f64::NEG_INFINITY {
            return (log_v, grad);
        }
        // log of (∂v_root/∂v_n) / v_root
        let mut adj = vec![f64::NEG_INFINITY; self.root + 1];
        adj[self.root] = -log_v;
        for id in (0..=self.root).rev() {
            let a = adj[id];
            if a == f64::NEG_INFINITY {
                continue;
            }
            match &self.nodes[id] {
                Node::Sum { children, weights } => {
                    for (&c, w) in children.iter().zip(weights) {
                        adj[c] = log_add(adj[c], a + w.ln());
                    }
                }
                Node::Product { children } => {
                    for (k, &c) in children.iter().enumerate() {
                        let others: f64 = children
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != k)
                            .map(|(_, &o)| lv[o])
                            .sum();
                        adj[c] = log_add(adj[c], a + others);
                    }
                }
                Node::Leaf { feature, probs } => {
                    let scale = a.exp();
                    for (g, t) in grad[*feature].iter_mut().zip(probs) {
                        *g += scale * t;
                    }
                }
            }
        }
        (log_v, grad)
    }

    /// Same partials as [`Circuit::soft_gradient`], computed with `C_j`
    /// bottom-up evaluations per feature: `∂v/∂q_{j,c} = v(q_{j←e_c})`.
    pub fn soft_gradient_by_evaluation(&self, q: &SoftInstance) -> Result<Vec<Vec<f64>>> {
        self.check_soft(q)?;
        let log_v = self.soft_log_values(q.blocks())[self.root];
        if log_v == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability("soft circuit value is zero".into()));
        }
        Ok((0..self.cards.len())
            .map(|j| {
                (0..self.cards[j])
                    .map(|c| {
                        let replaced = q.with_vertex(j, c);
                        (self.soft_log_values(replaced.blocks())[self.root] - log_v).exp()
                    })
                    .collect()
            })
            .collect())
    }

    /// Ancestral sample of a complete assignment.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut x = vec![0usize; self.cards.len()];
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf { feature, probs } => x[*feature] = draw(probs, rng),
                Node::Sum { children, weights } => stack.push(children[draw(weights, rng)]),
                Node::Product { children } => stack.extend(children.iter().copied()),
            }
        }
        x
    }
}

fn draw<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * probs.iter().sum::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u past the last positive entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
