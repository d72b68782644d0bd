//! Model checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! 8 bytes   magic "UNLMODEL"
//! u32       format version (currently 1)
//! u32       header length H
//! H bytes   UTF-8 JSON header: {"architecture", "init_seed", "tensors": [{"name", "shape"}]}
//! f64 * N   tensor values, concatenated in header order
//! ```

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, Classifier};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"UNLMODEL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    architecture: Architecture,
    init_seed: Option<u64>,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

impl Classifier {
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let header = Header {
            architecture: self.architecture.clone(),
            init_seed: self.init_seed,
            tensors: self
                .named_parameters()
                .into_iter()
                .map(|(name, shape, _)| TensorEntry { name, shape })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serialization cannot fail");
        let mut out = Vec::with_capacity(16 + json.len() + 8 * self.params.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Checkpoint(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("missing magic"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().expect("4 bytes")) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(body)?;
        header.architecture.validate()?;
        let data = &bytes[16 + hlen..];
        let expected = header.architecture.param_count();
        let declared: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>()).sum();
        if declared != expected || data.len() != 8 * expected {
            return Err(Error::Checkpoint(format!(
                "architecture needs {expected} parameters, header declares {declared}, payload holds {}",
                data.len() / 8
            )));
        }
        let params = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
        let mut model = Classifier::from_parameters(header.architecture, params)?;
        model.init_seed = header.init_seed;
        let names: Vec<_> = model.named_parameters().into_iter().map(|(n, s, _)| (n, s)).collect();
        if names.iter().zip(&header.tensors).any(|((n, s), t)| *n != t.name || *s != t.shape) {
            return Err(bad("tensor table does not match the architecture"));
        }
        Ok(model)
    }
}

/// Writes through a temporary file in the destination directory and renames
/// it into place.
pub fn save_checkpoint(model: &Classifier, path: &Path) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(&model.to_checkpoint_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Classifier> {
    Classifier::from_checkpoint_bytes(&std::fs::read(path)?)
}
