//! Raw tables, schemas, discretization and one-hot encoding.

mod diagnostics;
mod discretize;
mod schema;
mod table;

pub use diagnostics::{bin_diagnostics, BinDiagnostics};
pub use discretize::{write_codes_csv, Discretizer, Domain, Encoded, FittedFeature, DEFAULT_BINS};
pub use schema::{CausalPair, FeatureKind, FeatureSpec, Schema};
pub use table::{Dataset, RawTable};

pub(crate) use discretize::quantile_sorted;

use crate::error::{Error, Result};

/// Offsets of each feature's block inside the concatenated one-hot vector.
pub fn block_offsets(cards: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(cards.len() + 1);
    let mut acc = 0;
    offsets.push(0);
    for &c in cards {
        acc += c;
        offsets.push(acc);
    }
    offsets
}

/// Concatenated per-feature one-hot encoding of a discrete instance.
pub fn one_hot(x: &[usize], cards: &[usize]) -> Result<Vec<f64>> {
    if x.len() != cards.len() {
        return Err(Error::Dimension { expected: cards.len(), got: x.len() });
    }
    let mut out = vec![0.0; cards.iter().sum()];
    let mut offset = 0;
    for (j, (&v, &c)) in x.iter().zip(cards).enumerate() {
        if v >= c {
            return Err(Error::OutOfRange(format!("feature {j}: code {v} >= cardinality {c}")));
        }
        out[offset + v] = 1.0;
        offset += c;
    }
    Ok(out)
}

/// Per-block argmax (lowest index on ties); inverse of [`one_hot`] on hard vectors.
pub fn argmax_blocks(v: &[f64], cards: &[usize]) -> Vec<usize> {
    let mut offset = 0;
    cards
        .iter()
        .map(|&c| {
            let block = &v[offset..offset + c];
            offset += c;
            argmax(block)
        })
        .collect()
}

/// Index of the maximum, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Number of positions where two instances differ.
pub fn hamming(a: &[usize], b: &[usize]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_hot_examples() {
        assert_eq!(one_hot(&[1, 0], &[2, 2]).unwrap(), vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(one_hot(&[0], &[3]).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(one_hot(&[2], &[2]).is_err());
        assert!(one_hot(&[0, 0], &[2]).is_err());
    }

    proptest! {
        #[test]
        fn one_hot_blocks_sum_to_one_and_invert(
            (cards, x) in prop::collection::vec(1usize..6, 1..8)
                .prop_flat_map(|cards| {
                    let xs: Vec<_> = cards.iter().map(|&c| 0..c).collect();
                    (Just(cards), xs)
                })
        ) {
            let v = one_hot(&x, &cards).unwrap();
            let offs = block_offsets(&cards);
            for j in 0..cards.len() {
                let s: f64 = v[offs[j]..offs[j + 1]].iter().sum();
                prop_assert_eq!(s, 1.0);
            }
            prop_assert_eq!(argmax_blocks(&v, &cards), x);
        }
    }
}
