use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::data::{hamming, one_hot};
use crate::error::{Error, Result};
use crate::neural::{Activation, GradientTape, Gradients, MlpModel};

/// Accepted-class instances sampled from `p⁺` and kept if the classifier
/// accepts them, with their log-likelihoods under `p⁺`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborhoodPool {
    members: Vec<Vec<usize>>,
    log_likelihoods: Vec<f64>,
    draws: usize,
}

impl NeighborhoodPool {
    pub fn build(
        p_plus: &Circuit,
        classifier: &MlpModel,
        threshold: f64,
        target_size: usize,
        max_draws: usize,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let cards = p_plus.cardinalities();
        let mut members = Vec::with_capacity(target_size);
        let mut draws = 0;
        while members.len() < target_size {
            if draws >= max_draws {
                return Err(Error::SamplingExhausted { draws, accepted: members.len(), target: target_size });
            }
            draws += 1;
            let x = p_plus.sample(rng);
            if classifier.score(&one_hot(&x, cards)?)? >= threshold {
                members.push(x);
            }
        }
        Self::from_members(members, p_plus, draws)
    }

    pub fn from_members(members: Vec<Vec<usize>>, p_plus: &Circuit, draws: usize) -> Result<Self> {
        let log_likelihoods = members.iter().map(|x| p_plus.log_likelihood(x)).collect::<Result<Vec<_>>>()?;
        if let Some(i) = log_likelihoods.iter().position(|l| !l.is_finite()) {
            return Err(Error::ZeroProbability(format!("pool member {i} has zero density under p⁺")));
        }
        Ok(NeighborhoodPool { members, log_likelihoods, draws })
    }

    pub fn members(&self) -> &[Vec<usize>] {
        &self.members
    }

    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.draws == 0 {
            0.0
        } else {
            self.members.len() as f64 / self.draws as f64
        }
    }

    /// Indices of the `k` nearest members by Hamming distance; ties go to
    /// the lower pool index.
    pub fn nearest(&self, x: &[usize], k: usize) -> Result<Vec<usize>> {
        if self.members.len() < k {
            return Err(Error::Precondition(format!("pool holds {} members, need {k}", self.members.len())));
        }
        let mut order: Vec<(usize, usize)> =
            self.members.iter().enumerate().map(|(i, m)| (hamming(x, m), i)).collect();
        if k < order.len() {
            order.select_nth_unstable(k);
        }
        order.truncate(k);
        order.sort_unstable();
        Ok(order.into_iter().map(|(_, i)| i).collect())
    }

    /// `(d(x, x⁽ᵏ⁾), log p⁺(x⁽ᵏ⁾))` for the `k` nearest members.
    pub fn descriptors(&self, x: &[usize], k: usize) -> Result<Vec<[f64; 2]>> {
        Ok(self
            .nearest(x, k)?
            .into_iter()
            .map(|i| [hamming(x, &self.members[i]) as f64, self.log_likelihoods[i]])
            .collect())
    }
}

/// Set encoder `h = ρ(mean_k ψ(u⁽ᵏ⁾))` over neighbor descriptors.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodEncoder {
    pub psi: MlpModel,
    pub rho: MlpModel,
    pub k: usize,
}

#[derive(Debug, Clone)]
pub struct EncoderTape {
    psi: Vec<GradientTape>,
    rho: GradientTape,
}

impl NeighborhoodEncoder {
    pub fn random(k: usize, psi_hidden: &[usize], embed_dim: usize, rng: &mut impl Rng) -> Self {
        let mut psi_dims = vec![2];
        psi_dims.extend(psi_hidden);
        let width = *psi_dims.last().unwrap();
        NeighborhoodEncoder {
            psi: MlpModel::random(&psi_dims, Activation::Relu, Activation::Relu, rng),
            rho: MlpModel::random(&[width, embed_dim], Activation::Identity, Activation::Identity, rng),
            k,
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.rho.output_dim()
    }

    pub fn encode_descriptors(&self, descriptors: &[[f64; 2]]) -> Result<(Vec<f64>, EncoderTape)> {
        if descriptors.is_empty() {
            return Err(Error::Empty("neighbor descriptors"));
        }
        let mut pooled = vec![0.0; self.psi.output_dim()];
        let mut tapes = Vec::with_capacity(descriptors.len());
        for u in descriptors {
            let (out, tape) = self.psi.forward(u)?;
            pooled.iter_mut().zip(&out).for_each(|(p, o)| *p += o);
            tapes.push(tape);
        }
        let n = descriptors.len() as f64;
        pooled.iter_mut().for_each(|p| *p /= n);
        let (h, rho) = self.rho.forward(&pooled)?;
        Ok((h, EncoderTape { psi: tapes, rho }))
    }

    pub fn encode(&self, x: &[usize], pool: &NeighborhoodPool) -> Result<Vec<f64>> {
        Ok(self.encode_descriptors(&pool.descriptors(x, self.k)?)?.0)
    }

    /// Parameter gradients of `ψ` and `ρ` given `∂L/∂h`.
    pub fn backward(&self, tape: &EncoderTape, dh: &[f64]) -> Result<(Gradients, Gradients)> {
        let (g_rho, d_pooled) = self.rho.backward(&tape.rho, dh)?;
        let n = tape.psi.len() as f64;
        let d_each: Vec<f64> = d_pooled.iter().map(|d| d / n).collect();
        let mut g_psi = Gradients::zeros_like(&self.psi);
        for t in &tape.psi {
            g_psi.add_assign(&self.psi.backward(t, &d_each)?.0);
        }
        Ok((g_psi, g_rho))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_circuit;
    use crate::neural::Layer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant(value: f64, inputs: usize) -> MlpModel {
        MlpModel::new(vec![Layer {
            inputs,
            outputs: 1,
            weights: vec![0.0; inputs],
            bias: vec![value],
            activation: Activation::Identity,
        }])
        .unwrap()
    }

    #[test]
    fn accept_all_and_reject_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = random_circuit(&[2, 3], 3, &mut rng);
        let accept = constant(1.0, 5);
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let pool = NeighborhoodPool::build(&c, &accept, 0.5, 10, 100, &mut a).unwrap();
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let direct: Vec<Vec<usize>> = (0..10).map(|_| c.sample(&mut b)).collect();
        assert_eq!(pool.members(), &direct[..]);
        assert_eq!(pool.draws(), 10);

        let reject = constant(0.0, 5);
        let err = NeighborhoodPool::build(&c, &reject, 0.5, 10, 50, &mut rng).unwrap_err();
        assert!(matches!(err, Error::SamplingExhausted { draws: 50, accepted: 0, target: 10 }));
    }

    #[test]
    fn nearest_breaks_ties_by_index() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let c = random_circuit(&[3, 3], 3, &mut rng);
        let members = vec![vec![2, 2], vec![0, 1], vec![1, 0], vec![0, 0], vec![1, 1]];
        let pool = NeighborhoodPool::from_members(members, &c, 5).unwrap();
        assert_eq!(pool.nearest(&[0, 0], 3).unwrap(), vec![3, 1, 2]);
        assert_eq!(pool.descriptors(&[0, 0], 1).unwrap()[0][0], 0.0);
        assert!(pool.nearest(&[0, 0], 6).is_err());
    }

    #[test]
    fn identical_descriptors_reduce_to_single_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let enc = NeighborhoodEncoder::random(3, &[16, 16], 8, &mut rng);
        let u = [2.0, -7.5];
        let (h, _) = enc.encode_descriptors(&[u, u, u]).unwrap();
        let direct = enc.rho.predict(&enc.psi.predict(&u).unwrap()).unwrap();
        for (a, b) in h.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn encoding_is_permutation_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let enc = NeighborhoodEncoder::random(3, &[16, 16], 8, &mut rng);
        let us = [[0.0, -3.0], [1.0, -5.0], [4.0, -9.0]];
        let (a, _) = enc.encode_descriptors(&us).unwrap();
        let (b, _) = enc.encode_descriptors(&[us[2], us[0], us[1]]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
