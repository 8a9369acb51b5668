//! Binary checkpoint format.
//!
//! ```text
//! "KTCK" | version: u16 | descriptor_len: u32 | descriptor (UTF-8) | param_count: u64 | f32 LE * param_count
//! ```
//! Header integers are big-endian; the weight payload is little-endian.

use std::fs;
use std::path::Path;

use crate::models::{Architecture, Model, ModelError};
use crate::rng::RngState;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"KTCK";
pub const CHECKPOINT_VERSION: u16 = 1;

pub fn encode_checkpoint(model: &Model) -> Vec<u8> {
    let descriptor = model.architecture().descriptor();
    let params = model.flat_params();
    let mut out = Vec::with_capacity(18 + descriptor.len() + 4 * params.len());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_be_bytes());
    out.extend_from_slice(&(descriptor.len() as u32).to_be_bytes());
    out.extend_from_slice(descriptor.as_bytes());
    out.extend_from_slice(&(params.len() as u64).to_be_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(ModelError::Truncated(format!(
                "{what}: need {n} bytes at offset {}, file has {}",
                self.pos,
                self.bytes.len()
            )));
        };
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model, ModelError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(ModelError::BadMagic);
    }
    let version = u16::from_be_bytes(r.take(2, "version")?.try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::UnsupportedVersion(version));
    }
    let len = u32::from_be_bytes(r.take(4, "descriptor length")?.try_into().unwrap()) as usize;
    let descriptor = std::str::from_utf8(r.take(len, "descriptor")?)
        .map_err(|_| ModelError::BadDescriptor("descriptor is not UTF-8".into()))?;
    let arch: Architecture = descriptor.parse()?;
    let count = u64::from_be_bytes(r.take(8, "parameter count")?.try_into().unwrap()) as usize;

    let expected = arch.param_count();
    if expected != count {
        return Err(ModelError::ArchitectureMismatch {
            expected: format!("{expected} parameters for {arch}"),
            found: format!("{count} parameters"),
        });
    }
    let payload = r.take(count.checked_mul(4).unwrap_or(usize::MAX), "weights")?;
    if r.pos != bytes.len() {
        return Err(ModelError::InvalidArgument(format!(
            "{} trailing bytes after weights",
            bytes.len() - r.pos
        )));
    }
    let values: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut model = Model::build(&arch, &mut RngState::new(0))?;
    model.set_flat_params(&values)?;
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: impl AsRef<Path>) -> Result<(), ModelError> {
    fs::write(path, encode_checkpoint(model))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model, ModelError> {
    decode_checkpoint(&fs::read(path)?)
}

/// Loads a checkpoint and requires it to hold the given architecture.
pub fn load_checkpoint_expecting(path: impl AsRef<Path>, expected: &Architecture) -> Result<Model, ModelError> {
    let model = load_checkpoint(path)?;
    if model.architecture() != expected {
        return Err(ModelError::ArchitectureMismatch {
            expected: expected.descriptor(),
            found: model.architecture().descriptor(),
        });
    }
    Ok(model)
}
