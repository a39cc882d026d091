use rand::seq::SliceRandom;
use rand::Rng;

use super::{Circuit, Node, NodeId};

/// Random smooth, decomposable circuit over `cards`, alternating sum and
/// product layers down to `depth`. Leaf parameters are strictly positive.
pub fn random_circuit<R: Rng + ?Sized>(cards: &[usize], depth: usize, rng: &mut R) -> Circuit {
    let mut nodes = Vec::new();
    let scope: Vec<usize> = (0..cards.len()).collect();
    let root = grow(&mut nodes, cards, &scope, depth, true, rng);
    Circuit::new(nodes, root, cards.to_vec()).expect("random circuits are valid by construction")
}

fn random_simplex<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

fn grow<R: Rng + ?Sized>(
    nodes: &mut Vec<Node>,
    cards: &[usize],
    scope: &[usize],
    depth: usize,
    sum_layer: bool,
    rng: &mut R,
) -> NodeId {
    if scope.len() == 1 && (depth == 0 || !sum_layer || rng.gen_bool(0.5)) {
        let j = scope[0];
        nodes.push(Node::Leaf { feature: j, probs: random_simplex(cards[j], rng) });
        return nodes.len() - 1;
    }
    let node = if depth == 0 {
        // factorize what is left
        let children = scope
            .iter()
            .map(|&j| grow(nodes, cards, &[j], 0, false, rng))
            .collect();
        Node::Product { children }
    } else if sum_layer {
        let k = rng.gen_range(2..=3);
        let children = (0..k)
            .map(|_| grow(nodes, cards, scope, depth - 1, false, rng))
            .collect();
        Node::Sum { children, weights: random_simplex(k, rng) }
    } else {
        let mut shuffled = scope.to_vec();
        shuffled.shuffle(rng);
        let parts = rng.gen_range(2..=shuffled.len().max(2)).min(shuffled.len());
        let parts = parts.max(1);
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); parts];
        for (i, j) in shuffled.into_iter().enumerate() {
            groups[i % parts].push(j);
        }
        let children = groups
            .iter()
            .map(|g| grow(nodes, cards, g, depth - 1, true, rng))
            .collect();
        Node::Product { children }
    };
    nodes.push(node);
    nodes.len() - 1
}
