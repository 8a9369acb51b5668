//! IDX (MNIST-family) files: big-endian header, unsigned byte payload.

use std::fs;
use std::path::Path;

use crate::data::{DataError, Dataset, LabeledExample};
use crate::tensor::Tensor;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

/// Parses one IDX buffer with the given magic; returns its dimensions and payload.
pub fn parse_idx<'a>(bytes: &'a [u8], magic: u32, path: &Path) -> Result<(Vec<usize>, &'a [u8]), DataError> {
    let truncated = |expected: usize| DataError::Truncated { path: path.to_path_buf(), expected, found: bytes.len() };
    if bytes.len() < 4 {
        return Err(truncated(4));
    }
    let found = u32::from_be_bytes(bytes[..4].try_into().unwrap());
    if found != magic {
        return Err(DataError::BadMagic { path: path.to_path_buf(), found, expected: magic });
    }
    let ndims = (magic & 0xff) as usize;
    let header = 4 + 4 * ndims;
    if bytes.len() < header {
        return Err(truncated(header));
    }
    let dims: Vec<usize> = (0..ndims)
        .map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize)
        .collect();
    let payload = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
    let expected = header.saturating_add(payload);
    if bytes.len() < expected {
        return Err(truncated(expected));
    }
    Ok((dims, &bytes[header..expected]))
}

fn read(path: &Path) -> Result<Vec<u8>, DataError> {
    fs::read(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Loads an IDX image/label file pair. Pixels are scaled to [0, 1];
/// classes are named by index until renamed with [`Dataset::with_class_names`].
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Dataset, DataError> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    let image_bytes = read(images)?;
    let label_bytes = read(labels)?;
    let (dims, pixels) = parse_idx(&image_bytes, IDX_IMAGES_MAGIC, images)?;
    let (ldims, classes) = parse_idx(&label_bytes, IDX_LABELS_MAGIC, labels)?;
    let (n, h, w) = (dims[0], dims[1], dims[2]);
    if h == 0 || w == 0 {
        return Err(DataError::DimensionMismatch(format!("{}: image size {h}x{w}", images.display())));
    }
    if ldims[0] != n {
        return Err(DataError::CountMismatch { images: n, labels: ldims[0] });
    }
    let k = classes.iter().copied().max().map_or(0, |m| m as usize + 1);
    let examples = pixels
        .chunks_exact(h * w)
        .zip(classes)
        .map(|(px, &label)| LabeledExample {
            image: Tensor::new(vec![h, w, 1], px.iter().map(|&p| p as f32 / 255.0).collect())
                .expect("chunk matches shape"),
            label: label as usize,
        })
        .collect();
    Dataset::new(examples, (0..k).map(|c| c.to_string()).collect(), [h, w, 1])
}
