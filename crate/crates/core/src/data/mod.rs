//! Labeled datasets and the retain/forget partitions used by every
//! unlearning scenario.
//!
//! Forgetting only ever applies to the training partition. Test data is kept
//! whole and restricted per scenario at evaluation time.

mod archives;
mod registry;
mod synthetic;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use archives::{cifar100_class_index, CIFAR100_FINE_LABELS};
pub use registry::{data_dir_from_env, load_dataset, load_dataset_from, registered_datasets, LoadOptions, DATA_DIR_ENV};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: usize,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, label: usize) -> Self {
        Self { features, label }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataPartition {
    pub train: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub num_classes: usize,
}

impl DataPartition {
    /// Validates the partition invariants: at least two classes, labels in
    /// range, uniform feature width, and every class present in `train`.
    pub fn new(train: Vec<LabeledExample>, test: Vec<LabeledExample>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid(format!("a partition needs at least 2 classes, got {num_classes}")));
        }
        if train.is_empty() {
            return Err(Error::EmptyData("training partition"));
        }
        let width = train[0].features.len();
        let mut seen = vec![false; num_classes];
        for ex in train.iter().chain(test.iter()) {
            if ex.label >= num_classes {
                return Err(Error::LabelOutOfRange { label: ex.label, num_classes });
            }
            if ex.features.len() != width {
                return Err(Error::ShapeMismatch { expected: width, actual: ex.features.len() });
            }
        }
        for ex in &train {
            seen[ex.label] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::invalid(format!("class {missing} has no training examples")));
        }
        Ok(Self { train, test, num_classes })
    }

    pub fn feature_dim(&self) -> usize {
        self.train[0].features.len()
    }

    pub fn class_count(&self, class: usize) -> usize {
        self.train.iter().filter(|ex| ex.label == class).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    FullClass,
    SubClass,
    Random,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::FullClass => "full_class",
            Scenario::SubClass => "sub_class",
            Scenario::Random => "random",
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgetSplit {
    pub retain: Vec<LabeledExample>,
    pub forget: Vec<LabeledExample>,
    pub scenario: Scenario,
    pub target_class: Option<usize>,
    pub fraction: Option<f64>,
    pub num_classes: usize,
}

impl ForgetSplit {
    /// Retain followed by forget: the original training set as a multiset.
    pub fn full_train(&self) -> Vec<LabeledExample> {
        self.retain.iter().chain(self.forget.iter()).cloned().collect()
    }
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) || fraction.is_nan() {
        return Err(Error::invalid(format!("forget fraction must lie in [0, 1], got {fraction}")));
    }
    Ok(())
}

fn check_class(partition: &DataPartition, target_class: usize) -> Result<usize> {
    if target_class >= partition.num_classes {
        return Err(Error::LabelOutOfRange { label: target_class, num_classes: partition.num_classes });
    }
    let count = partition.class_count(target_class);
    if count == 0 {
        return Err(Error::invalid(format!("class {target_class} has no training examples")));
    }
    Ok(count)
}

/// Splits `train` by a membership mask, preserving the original order on both
/// sides.
fn split_by_mask(train: &[LabeledExample], in_forget: &[bool]) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    let mut retain = Vec::with_capacity(train.len());
    let mut forget = Vec::new();
    for (ex, &f) in train.iter().zip(in_forget) {
        if f {
            forget.push(ex.clone());
        } else {
            retain.push(ex.clone());
        }
    }
    (retain, forget)
}

fn forget_count(fraction: f64, n: usize) -> usize {
    // floor, clamped so that fraction = 1 always selects everything
    ((fraction * n as f64).floor() as usize).min(n)
}

pub fn make_full_class_split(partition: &DataPartition, target_class: usize) -> Result<ForgetSplit> {
    check_class(partition, target_class)?;
    let mask: Vec<bool> = partition.train.iter().map(|ex| ex.label == target_class).collect();
    let (retain, forget) = split_by_mask(&partition.train, &mask);
    Ok(ForgetSplit {
        retain,
        forget,
        scenario: Scenario::FullClass,
        target_class: Some(target_class),
        fraction: None,
        num_classes: partition.num_classes,
    })
}

/// Forgets `floor(fraction * |train|)` examples drawn uniformly without
/// replacement. The draw is a pure function of `seed`.
pub fn make_random_split(partition: &DataPartition, fraction: f64, seed: u64) -> Result<ForgetSplit> {
    check_fraction(fraction)?;
    let n = partition.train.len();
    let k = forget_count(fraction, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; n];
    for i in index::sample(&mut rng, n, k) {
        mask[i] = true;
    }
    let (retain, forget) = split_by_mask(&partition.train, &mask);
    Ok(ForgetSplit {
        retain,
        forget,
        scenario: Scenario::Random,
        target_class: None,
        fraction: Some(fraction),
        num_classes: partition.num_classes,
    })
}

pub fn make_subclass_split(
    partition: &DataPartition,
    target_class: usize,
    fraction: f64,
    seed: u64,
) -> Result<ForgetSplit> {
    check_fraction(fraction)?;
    let count = check_class(partition, target_class)?;
    let members: Vec<usize> = partition
        .train
        .iter()
        .enumerate()
        .filter(|(_, ex)| ex.label == target_class)
        .map(|(i, _)| i)
        .collect();
    let k = forget_count(fraction, count);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = vec![false; partition.train.len()];
    for j in index::sample(&mut rng, count, k) {
        mask[members[j]] = true;
    }
    let (retain, forget) = split_by_mask(&partition.train, &mask);
    Ok(ForgetSplit {
        retain,
        forget,
        scenario: Scenario::SubClass,
        target_class: Some(target_class),
        fraction: Some(fraction),
        num_classes: partition.num_classes,
    })
}
