//! SCRUB: alternate epochs that push the student away from the original
//! model on the forget set (max-steps) with epochs that keep it close and
//! accurate on the retain set (min-steps), then finish with extra min-steps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_non_negative, check_positive, timed, UnlearnResult};
use crate::data::{ForgetSplit, LabeledExample};
use crate::error::{Error, Result};
use crate::model::{
    log_softmax, predict_all, run_epoch, validate_data, Classifier, Optimizer, OptimizerKind, Sample, Term,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScrubConfig {
    pub learning_rate: f64,
    /// Weight of KL(student ‖ teacher) in the min-step loss.
    pub alpha_weight: f64,
    /// Weight of the retain cross-entropy in the min-step loss.
    pub gamma_weight: f64,
    /// Number of (max-step epoch, min-step epoch) pairs.
    pub unlearn_epochs: usize,
    pub extra_min_epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for ScrubConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            alpha_weight: 0.001,
            gamma_weight: 0.99,
            unlearn_epochs: 4,
            extra_min_epochs: 1,
            batch_size: 64,
            optimizer: OptimizerKind::Sgd,
            seed: 0,
        }
    }
}

impl ScrubConfig {
    fn validate(&self) -> Result<()> {
        check_positive("scrub learning rate", self.learning_rate)?;
        check_non_negative("alpha_weight", self.alpha_weight)?;
        check_non_negative("gamma_weight", self.gamma_weight)?;
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

fn max_samples<'a>(forget: &'a [LabeledExample], teacher: Vec<Vec<f64>>) -> Vec<Sample<'a>> {
    forget
        .iter()
        .zip(teacher)
        .map(|(ex, t)| Sample { features: &ex.features, terms: vec![Term::kl(t).weighted(-1.0)] })
        .collect()
}

fn min_samples<'a>(retain: &'a [LabeledExample], teacher: Vec<Vec<f64>>, config: &ScrubConfig) -> Vec<Sample<'a>> {
    retain
        .iter()
        .zip(teacher)
        .map(|(ex, t)| Sample {
            features: &ex.features,
            terms: vec![
                Term::kl(t).weighted(config.alpha_weight),
                Term::cross_entropy(ex.label).weighted(config.gamma_weight),
            ],
        })
        .collect()
}

pub fn scrub(model: &Classifier, split: &ForgetSplit, config: &ScrubConfig) -> Result<UnlearnResult> {
    config.validate()?;
    if split.forget.is_empty() {
        return Err(Error::EmptyData("forget set"));
    }
    if split.retain.is_empty() {
        return Err(Error::EmptyData("retain set"));
    }
    validate_data(model, &split.forget)?;
    validate_data(model, &split.retain)?;
    timed(|| {
        let mut student = model.clone();
        if config.unlearn_epochs == 0 && config.extra_min_epochs == 0 {
            return Ok(student);
        }
        // the teacher is the frozen input model, so its outputs are fixed
        let max = max_samples(&split.forget, predict_all(model, &split.forget)?);
        let min = min_samples(&split.retain, predict_all(model, &split.retain)?, config);
        let mut opt = Optimizer::new(config.optimizer, config.learning_rate, student.param_count());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.unlearn_epochs {
            run_epoch(&mut student, &max, &mut opt, config.batch_size, &mut rng);
            run_epoch(&mut student, &min, &mut opt, config.batch_size, &mut rng);
        }
        for _ in 0..config.extra_min_epochs {
            run_epoch(&mut student, &min, &mut opt, config.batch_size, &mut rng);
        }
        Ok(student)
    })
}

/// A single max-step epoch from a fresh optimizer.
pub fn scrub_max_step(
    student: &Classifier,
    teacher: &Classifier,
    forget: &[LabeledExample],
    config: &ScrubConfig,
) -> Result<Classifier> {
    config.validate()?;
    validate_data(student, forget)?;
    let max = max_samples(forget, predict_all(teacher, forget)?);
    let mut out = student.clone();
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, out.param_count());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_epoch(&mut out, &max, &mut opt, config.batch_size, &mut rng);
    Ok(out)
}

/// Mean KL(student ‖ teacher) in nats over `data`.
pub fn mean_forget_kl(student: &Classifier, teacher: &Classifier, data: &[LabeledExample]) -> Result<f64> {
    validate_data(student, data)?;
    let t = predict_all(teacher, data)?;
    let total: f64 = data
        .iter()
        .zip(&t)
        .map(|(ex, t)| {
            let logp = log_softmax(&student.logits(&ex.features));
            logp.iter().zip(t).map(|(lp, ti)| lp.exp() * (lp - ti.max(1e-12).ln())).sum::<f64>()
        })
        .sum();
    Ok(total / data.len() as f64)
}
