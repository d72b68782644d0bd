//! Incompetent-teacher distillation: the student matches a randomly
//! initialised teacher on forget samples and a frozen copy of itself on
//! retain samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_non_negative, check_positive, timed, UnlearnResult};
use crate::data::ForgetSplit;
use crate::error::{Error, Result};
use crate::model::{predict_all, random_init, run_epoch, validate_data, Classifier, Optimizer, OptimizerKind, Sample, Term};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TeacherConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub incompetent_seed: u64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub forget_weight: f64,
    pub retain_weight: f64,
    /// Weight of an optional cross-entropy term on retain labels (0 disables).
    pub retain_ce_weight: f64,
    /// Batch order.
    pub seed: u64,
}

impl Default for TeacherConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            learning_rate: 0.1,
            incompetent_seed: 0,
            batch_size: 64,
            optimizer: OptimizerKind::Sgd,
            forget_weight: 1.0,
            retain_weight: 1.0,
            retain_ce_weight: 0.0,
            seed: 0,
        }
    }
}

impl TeacherConfig {
    pub fn vit_preset() -> Self {
        Self { learning_rate: 2e-4, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        check_positive("teacher learning rate", self.learning_rate)?;
        check_non_negative("forget_weight", self.forget_weight)?;
        check_non_negative("retain_weight", self.retain_weight)?;
        check_non_negative("retain_ce_weight", self.retain_ce_weight)?;
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        Ok(())
    }
}

pub fn incompetent_teacher(model: &Classifier, split: &ForgetSplit, config: &TeacherConfig) -> Result<UnlearnResult> {
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
        if config.epochs == 0 {
            return Ok(student);
        }
        let incompetent = random_init(model.architecture(), config.incompetent_seed)?;
        let forget_targets = predict_all(&incompetent, &split.forget)?;
        let retain_targets = predict_all(model, &split.retain)?;
        let mut samples: Vec<Sample<'_>> = Vec::with_capacity(split.forget.len() + split.retain.len());
        for (ex, t) in split.forget.iter().zip(forget_targets) {
            samples.push(Sample { features: &ex.features, terms: vec![Term::kl(t).weighted(config.forget_weight)] });
        }
        for (ex, t) in split.retain.iter().zip(retain_targets) {
            let mut terms = vec![Term::kl(t).weighted(config.retain_weight)];
            if config.retain_ce_weight > 0.0 {
                terms.push(Term::cross_entropy(ex.label).weighted(config.retain_ce_weight));
            }
            samples.push(Sample { features: &ex.features, terms });
        }
        let mut opt = Optimizer::new(config.optimizer, config.learning_rate, student.param_count());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.epochs {
            run_epoch(&mut student, &samples, &mut opt, config.batch_size, &mut rng);
        }
        Ok(student)
    })
}
