//! UNSIR: learn an input batch that maximises the frozen model's error on the
//! target class, train on it together with retain data (impair), then train
//! on retain data alone (repair).

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{check_non_negative, check_positive, timed, UnlearnResult};
use crate::data::{ForgetSplit, LabeledExample, Scenario};
use crate::error::{Error, Result};
use crate::model::{loss_and_grad, run_epoch, validate_data, Classifier, Optimizer, OptimizerKind, Sample, Term};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnsirConfig {
    pub impair_lr: f64,
    pub repair_lr: f64,
    /// Weight of the squared-norm penalty on the noise.
    pub noise_lambda: f64,
    pub noise_steps: usize,
    /// Adam step size for the noise ascent.
    pub noise_lr: f64,
    /// Noise batch size; defaults to the forget-set size.
    pub noise_samples: Option<usize>,
    pub impair_repair_rounds: usize,
    /// Retain examples used during impair and repair; defaults to all.
    pub retain_subsample: Option<usize>,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for UnsirConfig {
    fn default() -> Self {
        Self {
            impair_lr: 1e-4,
            repair_lr: 1e-4,
            noise_lambda: 0.0,
            noise_steps: 100,
            noise_lr: 0.1,
            noise_samples: None,
            impair_repair_rounds: 1,
            retain_subsample: None,
            batch_size: 64,
            optimizer: OptimizerKind::Sgd,
            seed: 0,
        }
    }
}

impl UnsirConfig {
    fn validate(&self) -> Result<()> {
        check_positive("impair_lr", self.impair_lr)?;
        check_positive("repair_lr", self.repair_lr)?;
        check_positive("noise_lr", self.noise_lr)?;
        check_non_negative("noise_lambda", self.noise_lambda)?;
        if self.noise_steps == 0 {
            return Err(Error::invalid("noise_steps must be at least 1"));
        }
        if self.batch_size == 0 || self.noise_samples == Some(0) {
            return Err(Error::invalid("batch and noise sizes must be at least 1"));
        }
        Ok(())
    }
}

/// Optimised noise together with the objective before and after ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseBatch {
    pub inputs: Vec<Vec<f64>>,
    pub initial_objective: f64,
    pub final_objective: f64,
}

/// `mean_i CE(model(N_i), target) − λ · mean_i ‖N_i‖²`
pub fn noise_objective(model: &Classifier, noise: &[Vec<f64>], target: usize, lambda: f64) -> f64 {
    let total: f64 = noise
        .iter()
        .map(|x| {
            let (ce, _) = loss_and_grad(&model.logits(x), &[Term::cross_entropy(target)]);
            ce - lambda * x.iter().map(|v| v * v).sum::<f64>()
        })
        .sum();
    total / noise.len() as f64
}

/// Gradient ascent (Adam) on [`noise_objective`] starting from standard normal
/// noise. The model is not modified.
pub fn optimize_noise(
    model: &Classifier,
    target: usize,
    samples: usize,
    config: &UnsirConfig,
    rng: &mut ChaCha8Rng,
) -> Result<NoiseBatch> {
    if target >= model.num_classes() {
        return Err(Error::LabelOutOfRange { label: target, num_classes: model.num_classes() });
    }
    let dim = model.architecture().input_dim;
    let mut flat: Vec<f64> = (0..samples * dim).map(|_| StandardNormal.sample(rng)).collect();
    let as_rows = |flat: &[f64]| flat.chunks_exact(dim).map(<[f64]>::to_vec).collect::<Vec<_>>();
    let initial_objective = noise_objective(model, &as_rows(&flat), target, config.noise_lambda);
    let mut opt = Optimizer::new(OptimizerKind::Adam, config.noise_lr, flat.len());
    let mut grad = vec![0.0; flat.len()];
    let inv = 1.0 / samples as f64;
    for _ in 0..config.noise_steps {
        for (x, g) in flat.chunks_exact(dim).zip(grad.chunks_exact_mut(dim)) {
            let trace = model.forward_trace(x);
            let (_, dlogits) = loss_and_grad(trace.logits(), &[Term::cross_entropy(target)]);
            let dx = model.backward(&trace, &dlogits, 1.0, None, true).expect("input gradient requested");
            // descend on the negated objective
            for ((gi, dxi), xi) in g.iter_mut().zip(&dx).zip(x) {
                *gi = -inv * (dxi - 2.0 * config.noise_lambda * xi);
            }
        }
        opt.step(&mut flat, &grad);
    }
    let inputs = as_rows(&flat);
    let final_objective = noise_objective(model, &inputs, target, config.noise_lambda);
    Ok(NoiseBatch { inputs, initial_objective, final_objective })
}

pub fn unsir(model: &Classifier, split: &ForgetSplit, config: &UnsirConfig) -> Result<UnlearnResult> {
    config.validate()?;
    let target = match (split.scenario, split.target_class) {
        (Scenario::FullClass, Some(c)) => c,
        _ => return Err(Error::Incompatible { method: "unsir".into(), scenario: split.scenario.to_string() }),
    };
    if split.retain.is_empty() {
        return Err(Error::EmptyData("retain set"));
    }
    validate_data(model, &split.retain)?;
    timed(|| {
        let mut out = model.clone();
        if config.impair_repair_rounds == 0 {
            return Ok(out);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n_noise = config.noise_samples.unwrap_or(split.forget.len().max(1));
        let noise = optimize_noise(model, target, n_noise, config, &mut rng)?;
        let retain: Vec<&LabeledExample> = match config.retain_subsample {
            Some(k) if k < split.retain.len() => {
                let mut idx = index::sample(&mut rng, split.retain.len(), k).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| &split.retain[i]).collect()
            }
            _ => split.retain.iter().collect(),
        };
        let repair: Vec<Sample<'_>> = retain
            .iter()
            .map(|ex| Sample { features: &ex.features, terms: vec![Term::cross_entropy(ex.label)] })
            .collect();
        let impair: Vec<Sample<'_>> = noise
            .inputs
            .iter()
            .map(|x| Sample { features: x, terms: vec![Term::cross_entropy(target)] })
            .chain(repair.iter().cloned())
            .collect();
        for _ in 0..config.impair_repair_rounds {
            let mut opt = Optimizer::new(config.optimizer, config.impair_lr, out.param_count());
            run_epoch(&mut out, &impair, &mut opt, config.batch_size, &mut rng);
            let mut opt = Optimizer::new(config.optimizer, config.repair_lr, out.param_count());
            run_epoch(&mut out, &repair, &mut opt, config.batch_size, &mut rng);
        }
        Ok(out)
    })
}
