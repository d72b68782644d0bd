use serde::{Deserialize, Serialize};

use super::{timed, UnlearnResult};
use crate::data::ForgetSplit;
use crate::error::{Error, Result};
use crate::model::{random_init, train, Architecture, OptimizerKind, TrainConfig};

/// Retraining settings; unset fields are taken from the baseline's training
/// config so that retraining differs from the baseline only in its data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrainConfig {
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub optimizer: Option<OptimizerKind>,
}

impl RetrainConfig {
    pub fn resolve(&self, base: &TrainConfig) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs.unwrap_or(base.epochs),
            learning_rate: self.learning_rate.unwrap_or(base.learning_rate),
            batch_size: self.batch_size.unwrap_or(base.batch_size),
            seed: self.seed.unwrap_or(base.seed),
            optimizer: self.optimizer.unwrap_or(base.optimizer),
        }
    }

    pub fn pinned(config: &TrainConfig) -> Self {
        Self {
            epochs: Some(config.epochs),
            learning_rate: Some(config.learning_rate),
            batch_size: Some(config.batch_size),
            seed: Some(config.seed),
            optimizer: Some(config.optimizer),
        }
    }
}

/// Trains `random_init(architecture, config.seed)` on the retain set only.
pub fn retrain(architecture: &Architecture, split: &ForgetSplit, config: &TrainConfig) -> Result<UnlearnResult> {
    if split.retain.is_empty() {
        return Err(Error::EmptyData("retain set"));
    }
    config.validate()?;
    timed(|| {
        let init = random_init(architecture, config.seed)?;
        train(&init, &split.retain, config)
    })
}
