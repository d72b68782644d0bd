//! Readers for the standard binary distributions of MNIST (IDX) and
//! CIFAR-10/100 (the "binary version" archives, already extracted).

use std::fs;
use std::path::{Path, PathBuf};

use super::LabeledExample;
use crate::error::{Error, Result};

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const CIFAR_PIXELS: usize = 3 * 32 * 32;

pub const CIFAR100_FINE_LABELS: [&str; 100] = [
    "apple", "aquarium_fish", "baby", "bear", "beaver", "bed", "bee", "beetle", "bicycle", "bottle",
    "bowl", "boy", "bridge", "bus", "butterfly", "camel", "can", "castle", "caterpillar", "cattle",
    "chair", "chimpanzee", "clock", "cloud", "cockroach", "couch", "crab", "crocodile", "cup", "dinosaur",
    "dolphin", "elephant", "flatfish", "forest", "fox", "girl", "hamster", "house", "kangaroo", "keyboard",
    "lamp", "lawn_mower", "leopard", "lion", "lizard", "lobster", "man", "maple_tree", "motorcycle", "mountain",
    "mouse", "mushroom", "oak_tree", "orange", "orchid", "otter", "palm_tree", "pear", "pickup_truck", "pine_tree",
    "plain", "plate", "poppy", "porcupine", "possum", "rabbit", "raccoon", "ray", "road", "rocket",
    "rose", "sea", "seal", "shark", "shrew", "skunk", "skyscraper", "snail", "snake", "spider",
    "squirrel", "streetcar", "sunflower", "sweet_pepper", "table", "tank", "telephone", "television", "tiger", "tractor",
    "train", "trout", "tulip", "turtle", "wardrobe", "whale", "willow_tree", "wolf", "woman", "worm",
];

/// Case-insensitive lookup of a CIFAR-100 fine label, e.g. `"Rocket"` → 69.
pub fn cifar100_class_index(name: &str) -> Option<usize> {
    let name = name.to_ascii_lowercase().replace(' ', "_");
    CIFAR100_FINE_LABELS.iter().position(|l| *l == name)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::CorruptData { path: path.to_path_buf(), reason: e.to_string() })
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptData { path: path.to_path_buf(), reason: reason.into() }
}

fn be_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_idx_images(path: &Path) -> Result<Vec<Vec<f64>>> {
    let bytes = read(path)?;
    if bytes.len() < 16 || be_u32(&bytes, 0) != IDX_IMAGES_MAGIC {
        return Err(corrupt(path, "not an IDX image file"));
    }
    let count = be_u32(&bytes, 4) as usize;
    let pixels = be_u32(&bytes, 8) as usize * be_u32(&bytes, 12) as usize;
    let body = &bytes[16..];
    if pixels == 0 || body.len() != count * pixels {
        return Err(corrupt(path, format!("expected {count} images of {pixels} pixels, found {} bytes", body.len())));
    }
    Ok(body.chunks_exact(pixels).map(|img| img.iter().map(|&b| f64::from(b) / 255.0).collect()).collect())
}

fn read_idx_labels(path: &Path) -> Result<Vec<usize>> {
    let bytes = read(path)?;
    if bytes.len() < 8 || be_u32(&bytes, 0) != IDX_LABELS_MAGIC {
        return Err(corrupt(path, "not an IDX label file"));
    }
    let count = be_u32(&bytes, 4) as usize;
    let body = &bytes[8..];
    if body.len() != count {
        return Err(corrupt(path, format!("expected {count} labels, found {}", body.len())));
    }
    Ok(body.iter().map(|&b| b as usize).collect())
}

fn zip_idx(images: &Path, labels: &Path, num_classes: usize) -> Result<Vec<LabeledExample>> {
    let xs = read_idx_images(images)?;
    let ys = read_idx_labels(labels)?;
    if xs.len() != ys.len() {
        return Err(corrupt(labels, format!("{} labels for {} images", ys.len(), xs.len())));
    }
    if let Some(&bad) = ys.iter().find(|&&y| y >= num_classes) {
        return Err(corrupt(labels, format!("label {bad} out of range")));
    }
    Ok(xs.into_iter().zip(ys).map(|(f, y)| LabeledExample::new(f, y)).collect())
}

/// `<dir>/mnist/{train,t10k}-{images-idx3,labels-idx1}-ubyte`
pub(super) fn mnist(dir: &Path) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    let root = dir.join("mnist");
    let train = zip_idx(&root.join("train-images-idx3-ubyte"), &root.join("train-labels-idx1-ubyte"), 10)?;
    let test = zip_idx(&root.join("t10k-images-idx3-ubyte"), &root.join("t10k-labels-idx1-ubyte"), 10)?;
    Ok((train, test))
}

/// Parses fixed-size CIFAR records: `label_bytes` leading label bytes (the last
/// one is used) followed by 3072 pixel bytes.
fn read_cifar_records(path: &Path, label_bytes: usize, num_classes: usize) -> Result<Vec<LabeledExample>> {
    let bytes = read(path)?;
    let record = label_bytes + CIFAR_PIXELS;
    if bytes.is_empty() || bytes.len() % record != 0 {
        return Err(corrupt(path, format!("size {} is not a multiple of the {record}-byte record", bytes.len())));
    }
    bytes
        .chunks_exact(record)
        .map(|r| {
            let label = r[label_bytes - 1] as usize;
            if label >= num_classes {
                return Err(corrupt(path, format!("label {label} out of range")));
            }
            let features = r[label_bytes..].iter().map(|&b| f64::from(b) / 255.0).collect();
            Ok(LabeledExample::new(features, label))
        })
        .collect()
}

/// `<dir>/cifar-10-batches-bin/{data_batch_1..5,test_batch}.bin`
pub(super) fn cifar10(dir: &Path) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    let root = dir.join("cifar-10-batches-bin");
    let mut train = Vec::new();
    for i in 1..=5 {
        train.extend(read_cifar_records(&root.join(format!("data_batch_{i}.bin")), 1, 10)?);
    }
    let test = read_cifar_records(&root.join("test_batch.bin"), 1, 10)?;
    Ok((train, test))
}

/// `<dir>/cifar-100-binary/{train,test}.bin`, fine labels.
pub(super) fn cifar100(dir: &Path) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>)> {
    let root: PathBuf = dir.join("cifar-100-binary");
    let train = read_cifar_records(&root.join("train.bin"), 2, 100)?;
    let test = read_cifar_records(&root.join("test.bin"), 2, 100)?;
    Ok((train, test))
}
