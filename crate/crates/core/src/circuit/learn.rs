//! LearnSPN-style structure learning for categorical data.
//!
//! Columns are split into independent groups with pairwise G-tests (product
//! nodes); otherwise rows are clustered with 2-means on one-hot encodings
//! (sum nodes). Small slices are fully factorized into smoothed leaves.

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{Circuit, Node, NodeId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnConfig {
    /// Slices with fewer rows are factorized.
    pub min_rows: usize,
    /// Slices with fewer columns are factorized.
    pub min_cols: usize,
    /// Additive smoothing for leaf parameters.
    pub alpha: f64,
    /// G-test p-values above this mark a pair as independent.
    pub significance: f64,
    pub kmeans_restarts: usize,
    pub kmeans_max_iters: usize,
    pub weight_floor: f64,
}

impl Default for LearnConfig {
    fn default() -> Self {
        Self {
            min_rows: 200,
            min_cols: 3,
            alpha: 0.1,
            significance: 0.05,
            kmeans_restarts: 10,
            kmeans_max_iters: 50,
            weight_floor: 1e-6,
        }
    }
}

/// Learns a smooth, decomposable circuit from complete discrete rows.
pub fn learn_structure<R: Rng + ?Sized>(
    data: &[Vec<usize>],
    cards: &[usize],
    cfg: &LearnConfig,
    rng: &mut R,
) -> Result<Circuit> {
    if data.is_empty() {
        return Err(Error::Empty("training table for structure learning"));
    }
    if cards.is_empty() || cards.contains(&0) {
        return Err(Error::Precondition("cardinalities must be positive".into()));
    }
    for (i, row) in data.iter().enumerate() {
        if row.len() != cards.len() {
            return Err(Error::Dimension { expected: cards.len(), got: row.len() });
        }
        if let Some(j) = (0..cards.len()).find(|&j| row[j] >= cards[j]) {
            return Err(Error::OutOfRange(format!("row {i}, feature {j}: code {} >= {}", row[j], cards[j])));
        }
    }
    let mut learner = Learner { data, cards, cfg, nodes: Vec::new() };
    let rows: Vec<usize> = (0..data.len()).collect();
    let cols: Vec<usize> = (0..cards.len()).collect();
    let root = learner.learn(&rows, &cols, rng);
    Circuit::new(learner.nodes, root, cards.to_vec())
}

struct Learner<'a> {
    data: &'a [Vec<usize>],
    cards: &'a [usize],
    cfg: &'a LearnConfig,
    nodes: Vec<Node>,
}

impl Learner<'_> {
    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn learn<R: Rng + ?Sized>(&mut self, rows: &[usize], cols: &[usize], rng: &mut R) -> NodeId {
        if cols.len() == 1 {
            return self.leaf(rows, cols[0]);
        }
        if rows.len() < self.cfg.min_rows || cols.len() < self.cfg.min_cols {
            return self.factorize(rows, cols);
        }
        let groups = self.independent_groups(rows, cols);
        if groups.len() > 1 {
            let children = groups.iter().map(|g| self.learn(rows, g, rng)).collect();
            return self.push(Node::Product { children });
        }
        match self.two_means(rows, cols, rng) {
            Some(clusters) => {
                let n = rows.len() as f64;
                let mut weights: Vec<f64> = clusters
                    .iter()
                    .map(|c| (c.len() as f64 / n).max(self.cfg.weight_floor))
                    .collect();
                let s: f64 = weights.iter().sum();
                weights.iter_mut().for_each(|w| *w /= s);
                let children = clusters.iter().map(|c| self.learn(c, cols, rng)).collect();
                self.push(Node::Sum { children, weights })
            }
            None => self.factorize(rows, cols),
        }
    }

    fn leaf(&mut self, rows: &[usize], feature: usize) -> NodeId {
        let c = self.cards[feature];
        let mut counts = vec![0.0; c];
        for &r in rows {
            counts[self.data[r][feature]] += 1.0;
        }
        let alpha = self.cfg.alpha;
        let total = rows.len() as f64 + alpha * c as f64;
        let probs = if total > 0.0 {
            counts.iter().map(|n| (n + alpha) / total).collect()
        } else {
            vec![1.0 / c as f64; c]
        };
        self.push(Node::Leaf { feature, probs })
    }

    fn factorize(&mut self, rows: &[usize], cols: &[usize]) -> NodeId {
        let children = cols.iter().map(|&j| self.leaf(rows, j)).collect();
        self.push(Node::Product { children })
    }

    /// Connected components of the "dependent" graph over `cols`.
    fn independent_groups(&self, rows: &[usize], cols: &[usize]) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..cols.len()).collect();
        fn find(parent: &mut [usize], mut i: usize) -> usize {
            while parent[i] != i {
                parent[i] = parent[parent[i]];
                i = parent[i];
            }
            i
        }
        for a in 0..cols.len() {
            for b in (a + 1)..cols.len() {
                if find(&mut parent, a) == find(&mut parent, b) {
                    continue;
                }
                let p = g_test_p_value(self.data, rows, cols[a], cols[b], self.cards);
                if p <= self.cfg.significance {
                    let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                    parent[ra] = rb;
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_of: Vec<Option<usize>> = vec![None; cols.len()];
        for i in 0..cols.len() {
            let r = find(&mut parent, i);
            match root_of[r] {
                Some(g) => groups[g].push(cols[i]),
                None => {
                    root_of[r] = Some(groups.len());
                    groups.push(vec![cols[i]]);
                }
            }
        }
        groups
    }

    /// Best-of-restarts 2-means on one-hot rows; `None` when every restart degenerates.
    fn two_means<R: Rng + ?Sized>(&self, rows: &[usize], cols: &[usize], rng: &mut R) -> Option<Vec<Vec<usize>>> {
        let mut offsets = Vec::with_capacity(cols.len());
        let mut dim = 0;
        for &j in cols {
            offsets.push(dim);
            dim += self.cards[j];
        }
        let point = |r: usize| cols.iter().zip(&offsets).map(move |(&j, &o)| o + self.data[r][j]);
        // ‖e_x − μ‖² = |cols| − 2 Σ μ[x] + ‖μ‖²
        let dist = |r: usize, mu: &[f64], norm: f64| cols.len() as f64 - 2.0 * point(r).map(|i| mu[i]).sum::<f64>() + norm;

        let mut best: Option<(f64, Vec<u8>)> = None;
        for _ in 0..self.cfg.kmeans_restarts.max(1) {
            // k-means++ seeding
            let first = rows[rng.gen_range(0..rows.len())];
            let mut mu = [vec![0.0; dim], vec![0.0; dim]];
            point(first).for_each(|i| mu[0][i] = 1.0);
            let n0 = cols.len() as f64;
            let d: Vec<f64> = rows.iter().map(|&r| dist(r, &mu[0], n0).max(0.0)).collect();
            let total: f64 = d.iter().sum();
            if total <= 0.0 {
                return None;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut second = rows[rows.len() - 1];
            for (k, &r) in rows.iter().enumerate() {
                u -= d[k];
                if u < 0.0 {
                    second = r;
                    break;
                }
            }
            point(second).for_each(|i| mu[1][i] = 1.0);

            let mut assign = vec![0u8; rows.len()];
            let mut inertia = f64::INFINITY;
            for iter in 0..self.cfg.kmeans_max_iters.max(1) {
                let norms = [
                    mu[0].iter().map(|v| v * v).sum::<f64>(),
                    mu[1].iter().map(|v| v * v).sum::<f64>(),
                ];
                let mut changed = false;
                inertia = 0.0;
                for (k, &r) in rows.iter().enumerate() {
                    let d0 = dist(r, &mu[0], norms[0]);
                    let d1 = dist(r, &mu[1], norms[1]);
                    let a = u8::from(d1 < d0);
                    inertia += d0.min(d1);
                    if a != assign[k] || iter == 0 {
                        changed |= a != assign[k];
                        assign[k] = a;
                    }
                }
                let mut sums = [vec![0.0; dim], vec![0.0; dim]];
                let mut counts = [0usize; 2];
                for (k, &r) in rows.iter().enumerate() {
                    let a = assign[k] as usize;
                    counts[a] += 1;
                    point(r).for_each(|i| sums[a][i] += 1.0);
                }
                if counts.contains(&0) {
                    inertia = f64::INFINITY;
                    break;
                }
                for a in 0..2 {
                    mu[a] = sums[a].iter().map(|s| s / counts[a] as f64).collect();
                }
                if !changed && iter > 0 {
                    break;
                }
            }
            if inertia.is_finite() && best.as_ref().is_none_or(|(b, _)| inertia < *b) {
                best = Some((inertia, assign));
            }
        }
        let (_, assign) = best?;
        let mut clusters = vec![Vec::new(), Vec::new()];
        for (k, &r) in rows.iter().enumerate() {
            clusters[assign[k] as usize].push(r);
        }
        if clusters.iter().any(Vec::is_empty) {
            return None;
        }
        Some(clusters)
    }
}

/// G-test statistic and degrees of freedom for the contingency table of two columns.
pub(crate) fn g_statistic(data: &[Vec<usize>], rows: &[usize], a: usize, b: usize, cards: &[usize]) -> (f64, usize) {
    let (ca, cb) = (cards[a], cards[b]);
    let mut table = vec![0.0; ca * cb];
    for &r in rows {
        table[data[r][a] * cb + data[r][b]] += 1.0;
    }
    let row_sums: Vec<f64> = (0..ca).map(|i| table[i * cb..(i + 1) * cb].iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cb).map(|k| (0..ca).map(|i| table[i * cb + k]).sum()).collect();
    let n = rows.len() as f64;
    let mut g = 0.0;
    for i in 0..ca {
        for k in 0..cb {
            let o = table[i * cb + k];
            if o > 0.0 {
                g += o * (o * n / (row_sums[i] * col_sums[k])).ln();
            }
        }
    }
    let nz_rows = row_sums.iter().filter(|&&s| s > 0.0).count();
    let nz_cols = col_sums.iter().filter(|&&s| s > 0.0).count();
    (2.0 * g, nz_rows.saturating_sub(1) * nz_cols.saturating_sub(1))
}

fn g_test_p_value(data: &[Vec<usize>], rows: &[usize], a: usize, b: usize, cards: &[usize]) -> f64 {
    let (g, df) = g_statistic(data, rows, a, b, cards);
    if df == 0 {
        return 1.0;
    }
    let chi = ChiSquared::new(df as f64).expect("positive degrees of freedom");
    chi.sf(g.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Node;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_feature_mle_without_smoothing() {
        let data: Vec<Vec<usize>> = (0..100).map(|i| vec![usize::from(i >= 30)]).collect();
        let cfg = LearnConfig { alpha: 0.0, ..LearnConfig::default() };
        let c = learn_structure(&data, &[2], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        match &c.nodes()[c.root()] {
            Node::Leaf { probs, .. } => {
                assert!((probs[0] - 0.3).abs() < 1e-15 && (probs[1] - 0.7).abs() < 1e-15)
            }
            other => panic!("expected a leaf, got {other:?}"),
        }
    }

    #[test]
    fn empty_table_is_rejected() {
        let cfg = LearnConfig::default();
        assert!(learn_structure(&[], &[2], &cfg, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn g_statistic_is_zero_for_exactly_independent_counts() {
        // perfectly balanced 2x2 table
        let data = vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]];
        let rows: Vec<usize> = (0..4).collect();
        let (g, df) = g_statistic(&data, &rows, 0, 1, &[2, 2]);
        assert!(g.abs() < 1e-12);
        assert_eq!(df, 1);
    }

    #[test]
    fn learned_circuit_is_valid_and_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data: Vec<Vec<usize>> = (0..600)
            .map(|_| {
                let a = rng.gen_range(0..3);
                let b = if rng.gen_bool(0.8) { a } else { rng.gen_range(0..3) };
                vec![a, b, rng.gen_range(0..2), (a + 1) % 3]
            })
            .collect();
        let cfg = LearnConfig { min_rows: 50, min_cols: 2, ..LearnConfig::default() };
        let c1 = learn_structure(&data, &[3, 3, 2, 3], &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let c2 = learn_structure(&data, &[3, 3, 2, 3], &cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert!(c1.validate().is_valid());
        assert_eq!(c1, c2);
    }
}
