use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{check_positive, timed, UnlearnResult};
use crate::data::{ForgetSplit, LabeledExample};
use crate::error::{Error, Result};
use crate::model::{run_epoch, validate_data, Classifier, Optimizer, OptimizerKind, Sample, Term};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MislabelConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub relabel_seed: u64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    /// Fine-tunes on relabeled forget data plus the retain set instead of the
    /// relabeled data alone.
    pub mix_retain: bool,
    /// Batch order.
    pub seed: u64,
}

impl Default for MislabelConfig {
    fn default() -> Self {
        Self {
            epochs: 1,
            learning_rate: 1e-4,
            relabel_seed: 0,
            batch_size: 64,
            optimizer: OptimizerKind::Sgd,
            mix_retain: false,
            seed: 0,
        }
    }
}

/// Gives every forget example a label drawn uniformly from the other
/// `num_classes − 1` classes.
pub fn relabel_forget_set(forget: &[LabeledExample], num_classes: usize, seed: u64) -> Result<Vec<LabeledExample>> {
    if num_classes < 2 {
        return Err(Error::invalid("relabeling needs at least 2 classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(forget
        .iter()
        .map(|ex| {
            let r = rng.random_range(0..num_classes - 1);
            let label = if r >= ex.label { r + 1 } else { r };
            LabeledExample::new(ex.features.clone(), label)
        })
        .collect())
}

pub fn mislabel(model: &Classifier, split: &ForgetSplit, config: &MislabelConfig) -> Result<UnlearnResult> {
    check_positive("mislabel learning rate", config.learning_rate)?;
    if config.batch_size == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    if split.forget.is_empty() {
        return Err(Error::EmptyData("forget set"));
    }
    validate_data(model, &split.forget)?;
    timed(|| {
        let mut out = model.clone();
        if config.epochs == 0 {
            return Ok(out);
        }
        let relabeled = relabel_forget_set(&split.forget, model.num_classes(), config.relabel_seed)?;
        let extra: &[LabeledExample] = if config.mix_retain { &split.retain } else { &[] };
        let samples: Vec<Sample<'_>> = relabeled
            .iter()
            .chain(extra)
            .map(|ex| Sample { features: &ex.features, terms: vec![Term::cross_entropy(ex.label)] })
            .collect();
        let mut opt = Optimizer::new(config.optimizer, config.learning_rate, out.param_count());
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for _ in 0..config.epochs {
            run_epoch(&mut out, &samples, &mut opt, config.batch_size, &mut rng);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn new_labels_always_differ(labels in proptest::collection::vec(0usize..5, 1..200), seed in any::<u64>()) {
            let forget: Vec<_> = labels.iter().map(|&l| LabeledExample::new(vec![0.0], l)).collect();
            let out = relabel_forget_set(&forget, 5, seed).unwrap();
            for (a, b) in forget.iter().zip(&out) {
                prop_assert_ne!(a.label, b.label);
                prop_assert!(b.label < 5);
            }
            prop_assert_eq!(out.clone(), relabel_forget_set(&forget, 5, seed).unwrap());
        }
    }

    #[test]
    fn binary_relabel_flips() {
        let forget = vec![LabeledExample::new(vec![], 0), LabeledExample::new(vec![], 1)];
        let out = relabel_forget_set(&forget, 2, 0).unwrap();
        assert_eq!(out.iter().map(|e| e.label).collect::<Vec<_>>(), vec![1, 0]);
        assert!(relabel_forget_set(&forget, 1, 0).is_err());
    }
}
