use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{archives, synthetic, DataPartition, LabeledExample};
use crate::error::{Error, Result};

/// Directory holding extracted dataset archives.
pub const DATA_DIR_ENV: &str = "UNLEARN_DATA_DIR";

/// Knobs understood by the loaders. Generator-only fields are ignored by the
/// archive readers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoadOptions {
    /// Keep at most this many training examples (seeded subsample).
    pub train_cap: Option<usize>,
    pub test_cap: Option<usize>,
    pub seed: u64,
    pub num_classes: Option<usize>,
    pub per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    /// Feature width for blobs, image side length for glyphs.
    pub dim: Option<usize>,
    pub noise: Option<f64>,
}

struct Entry {
    name: &'static str,
    about: &'static str,
}

const REGISTRY: &[Entry] = &[
    Entry { name: "synthetic-blobs", about: "Gaussian blobs (default 2 classes, 100 train / 50 test per class, 2-d)" },
    Entry { name: "synthetic-glyphs", about: "10-class 12x12 stroke glyphs (default 500 train / 100 test per class)" },
    Entry { name: "mnist", about: "MNIST from IDX files under <data dir>/mnist" },
    Entry { name: "mnist-subset", about: "MNIST capped to 5000 train / 1000 test unless overridden" },
    Entry { name: "cifar10", about: "CIFAR-10 binary batches under <data dir>/cifar-10-batches-bin" },
    Entry { name: "cifar100", about: "CIFAR-100 binary (fine labels) under <data dir>/cifar-100-binary" },
];

pub fn registered_datasets() -> impl Iterator<Item = (&'static str, &'static str)> {
    REGISTRY.iter().map(|e| (e.name, e.about))
}

pub fn data_dir_from_env() -> PathBuf {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"))
}

pub fn load_dataset(name: &str, options: &LoadOptions) -> Result<DataPartition> {
    load_dataset_from(name, options, &data_dir_from_env())
}

pub fn load_dataset_from(name: &str, options: &LoadOptions, data_dir: &Path) -> Result<DataPartition> {
    if !REGISTRY.iter().any(|e| e.name == name) {
        return Err(Error::UnknownDataset(name.to_string()));
    }
    let noise = options.noise.unwrap_or(if name == "synthetic-blobs" { 1.0 } else { 0.3 });
    if name.starts_with("synthetic-") && !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::invalid(format!("noise must be a finite non-negative number, got {noise}")));
    }
    let (train, test, num_classes, default_caps) = match name {
        "synthetic-blobs" => {
            let k = options.num_classes.unwrap_or(2);
            let dim = options.dim.unwrap_or(2);
            if dim == 0 {
                return Err(Error::invalid("blob dimension must be positive"));
            }
            let (tr, te) = synthetic::blobs(
                k,
                options.per_class.unwrap_or(100),
                options.test_per_class.unwrap_or(50),
                dim,
                noise,
                options.seed,
            );
            (tr, te, k, (None, None))
        }
        "synthetic-glyphs" => {
            let k = options.num_classes.unwrap_or(10);
            let side = options.dim.unwrap_or(12);
            if side < 4 {
                return Err(Error::invalid("glyph side must be at least 4"));
            }
            let (tr, te) = synthetic::glyphs(
                k,
                options.per_class.unwrap_or(500),
                options.test_per_class.unwrap_or(100),
                side,
                noise,
                options.seed,
            );
            (tr, te, k, (None, None))
        }
        "mnist" => {
            let (tr, te) = archives::mnist(data_dir)?;
            (tr, te, 10, (None, None))
        }
        "mnist-subset" => {
            let (tr, te) = archives::mnist(data_dir)?;
            (tr, te, 10, (Some(5000), Some(1000)))
        }
        "cifar10" => {
            let (tr, te) = archives::cifar10(data_dir)?;
            (tr, te, 10, (None, None))
        }
        "cifar100" => {
            let (tr, te) = archives::cifar100(data_dir)?;
            (tr, te, 100, (None, None))
        }
        _ => unreachable!("registry membership checked above"),
    };
    let train = cap(train, options.train_cap.or(default_caps.0), options.seed);
    let test = cap(test, options.test_cap.or(default_caps.1), options.seed.wrapping_add(1));
    DataPartition::new(train, test, num_classes)
}

/// Seeded subsample that keeps the surviving examples in their original order.
fn cap(mut data: Vec<LabeledExample>, limit: Option<usize>, seed: u64) -> Vec<LabeledExample> {
    let Some(limit) = limit else { return data };
    if limit >= data.len() {
        return data;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = index::sample(&mut rng, data.len(), limit).into_vec();
    keep.sort_unstable();
    let mut out = Vec::with_capacity(limit);
    for i in keep.into_iter().rev() {
        out.push(data.swap_remove(i));
    }
    out.reverse();
    out
}
