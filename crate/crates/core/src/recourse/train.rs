use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    compute_losses, generate_soft, generator_input, generator_input_dim, generator_output_dim, FactualView,
    FrozenModels, LossTerms, LossWeights, NeighborhoodEncoder, NeighborhoodPool, SoftRecourse,
};
use crate::circuit::Circuit;
use crate::constraints::ConstraintSet;
use crate::data::one_hot;
use crate::error::{io_err, Error, Result};
use crate::neural::{Activation, AdamState, Gradients, MlpModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub k: usize,
    pub view: FactualView,
    pub psi_hidden: Vec<usize>,
    pub embed_dim: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub pool_size: usize,
    /// Sampling budget for the pool and for each batch of denied surrogates.
    pub max_draws: usize,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            k: 5,
            view: FactualView::Full,
            psi_hidden: vec![16, 16],
            embed_dim: 8,
            hidden: vec![128, 128],
            epochs: 30,
            steps_per_epoch: 20,
            batch_size: 32,
            lr: 1e-3,
            pool_size: 500,
            max_draws: 200_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub total: f64,
    pub terms: LossTerms,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epochs: Vec<EpochLog>,
    pub pool_size: usize,
    pub pool_draws: usize,
    pub denied_draws: usize,
    pub denied_accepted: usize,
}

/// Trained generator and encoder together with the constraints and the
/// accepted-instance pool they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct RecourseModel {
    pub generator: MlpModel,
    pub encoder: NeighborhoodEncoder,
    pub constraints: ConstraintSet,
    pub pool: NeighborhoodPool,
    pub view: FactualView,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    k: usize,
    view: FactualView,
    constraints: ConstraintSet,
    pool: NeighborhoodPool,
}

impl RecourseModel {
    pub fn input(&self, factual: &[usize], p_plus: &Circuit) -> Result<Vec<f64>> {
        let h = self.encoder.encode(factual, &self.pool)?;
        Ok(generator_input(factual, &self.constraints, self.view, p_plus.log_likelihood(factual)?, &h))
    }

    pub fn soft(&self, factual: &[usize], p_plus: &Circuit) -> Result<SoftRecourse> {
        let z = self.input(factual, p_plus)?;
        Ok(generate_soft(&self.generator, &z, factual, &self.constraints)?.0)
    }

    /// Decoded recourse for one denied factual.
    pub fn generate(&self, factual: &[usize], p_plus: &Circuit) -> Result<Vec<usize>> {
        Ok(self.soft(factual, p_plus)?.decode())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        self.generator.save(dir.join("generator.txt"))?;
        self.encoder.psi.save(dir.join("psi.txt"))?;
        self.encoder.rho.save(dir.join("rho.txt"))?;
        let sidecar = Sidecar { k: self.encoder.k, view: self.view, constraints: self.constraints.clone(), pool: self.pool.clone() };
        let path = dir.join("recourse.json");
        std::fs::write(&path, serde_json::to_string(&sidecar)?).map_err(io_err(&path))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join("recourse.json");
        let sidecar: Sidecar = serde_json::from_str(&std::fs::read_to_string(&path).map_err(io_err(&path))?)?;
        Ok(RecourseModel {
            generator: MlpModel::load(dir.join("generator.txt"))?,
            encoder: NeighborhoodEncoder {
                psi: MlpModel::load(dir.join("psi.txt"))?,
                rho: MlpModel::load(dir.join("rho.txt"))?,
                k: sidecar.k,
            },
            constraints: sidecar.constraints,
            pool: sidecar.pool,
            view: sidecar.view,
        })
    }
}

fn sample_denied(
    models: &FrozenModels,
    threshold: f64,
    n: usize,
    max_draws: usize,
    rng: &mut ChaCha8Rng,
    log: &mut TrainingLog,
) -> Result<Vec<Vec<usize>>> {
    let cards = models.p_minus.cardinalities();
    let mut out = Vec::with_capacity(n);
    let mut draws = 0;
    while out.len() < n {
        if draws >= max_draws {
            return Err(Error::SamplingExhausted { draws, accepted: out.len(), target: n });
        }
        draws += 1;
        let x = models.p_minus.sample(rng);
        if models.classifier.score(&one_hot(&x, cards)?)? < threshold {
            out.push(x);
        }
    }
    log.denied_draws += draws;
    log.denied_accepted += out.len();
    Ok(out)
}

/// Trains generator, `ψ` and `ρ` jointly with Adam on denied surrogates
/// drawn from `p⁻`.
pub fn train_generator(
    models: &FrozenModels,
    threshold: f64,
    cs: &ConstraintSet,
    weights: &LossWeights,
    cfg: &GeneratorConfig,
) -> Result<(RecourseModel, TrainingLog)> {
    weights.check()?;
    if models.p_plus.cardinalities() != cs.cardinalities() || models.p_minus.cardinalities() != cs.cardinalities() {
        return Err(Error::Precondition("circuits and constraints disagree on cardinalities".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pool = NeighborhoodPool::build(
        models.p_plus,
        models.classifier,
        threshold,
        cfg.pool_size.max(cfg.k),
        cfg.max_draws,
        &mut rng,
    )?;
    let mut encoder = NeighborhoodEncoder::random(cfg.k, &cfg.psi_hidden, cfg.embed_dim, &mut rng);
    let mut dims = vec![generator_input_dim(cs, cfg.view, cfg.embed_dim)];
    dims.extend(&cfg.hidden);
    dims.push(generator_output_dim(cs));
    let mut generator = MlpModel::random(&dims, Activation::Relu, Activation::Identity, &mut rng);

    let mut adam_g = AdamState::new(&generator, cfg.lr);
    let mut adam_psi = AdamState::new(&encoder.psi, cfg.lr);
    let mut adam_rho = AdamState::new(&encoder.rho, cfg.lr);
    let mut log = TrainingLog {
        epochs: Vec::with_capacity(cfg.epochs),
        pool_size: pool.len(),
        pool_draws: pool.draws(),
        denied_draws: 0,
        denied_accepted: 0,
    };
    let embed_offset = dims[0] - cfg.embed_dim;

    for epoch in 0..cfg.epochs {
        let mut terms = LossTerms::default();
        let mut total = 0.0;
        let mut seen = 0usize;
        for _ in 0..cfg.steps_per_epoch {
            let batch = sample_denied(models, threshold, cfg.batch_size, cfg.max_draws, &mut rng, &mut log)?;
            let mut g_gen = Gradients::zeros_like(&generator);
            let mut g_psi = Gradients::zeros_like(&encoder.psi);
            let mut g_rho = Gradients::zeros_like(&encoder.rho);
            for x in &batch {
                let descriptors = pool.descriptors(x, encoder.k)?;
                let (h, enc_tape) = encoder.encode_descriptors(&descriptors)?;
                let z = generator_input(x, cs, cfg.view, models.p_plus.log_likelihood(x)?, &h);
                let (soft, tape) = generate_soft(&generator, &z, x, cs)?;
                let eval = compute_losses(&soft, x, cs, models, weights)?;
                let dlogits = soft.logit_gradient(&eval.grad_q, cs);
                let (g, dz) = generator.backward(&tape, &dlogits)?;
                let (gp, gr) = encoder.backward(&enc_tape, &dz[embed_offset..])?;
                g_gen.add_assign(&g);
                g_psi.add_assign(&gp);
                g_rho.add_assign(&gr);
                terms.add_assign(&eval.terms);
                total += eval.total;
                seen += 1;
            }
            let inv = 1.0 / batch.len().max(1) as f64;
            g_gen.scale(inv);
            g_psi.scale(inv);
            g_rho.scale(inv);
            adam_g.step(&mut generator, &g_gen);
            adam_psi.step(&mut encoder.psi, &g_psi);
            adam_rho.step(&mut encoder.rho, &g_rho);
        }
        let inv = 1.0 / seen.max(1) as f64;
        terms.scale(inv);
        log.epochs.push(EpochLog { epoch, total: total * inv, terms });
    }
    Ok((RecourseModel { generator, encoder, constraints: cs.clone(), pool, view: cfg.view }, log))
}
