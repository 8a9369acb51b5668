//! Dataset ingestion, split construction, paired streams, image transforms,
//! and the synthetic task-pair generator.

mod idx;
mod imagedir;
mod splits;
mod synth;
mod transform;

pub use idx::{load_idx, parse_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use imagedir::load_image_directory;
pub use splits::{build_splits, GroundTruth, OlCounts, PairedStream, PretrainCounts, SplitPlan, Splits};
pub use synth::{synth_task_pair, OracleTeacher, SynthSpec};
pub use transform::{expand_channels, resize_and_expand, resize_bilinear};

use std::path::PathBuf;

use thiserror::Error;

use crate::tensor::Tensor;

/// Class names of Fashion MNIST in label order.
pub const FASHION_MNIST_CLASSES: [&str; 10] = [
    "T-shirt/top",
    "Trouser",
    "Pullover",
    "Dress",
    "Coat",
    "Sandal",
    "Shirt",
    "Sneaker",
    "Bag",
    "Ankle boot",
];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: bad IDX magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { path: PathBuf, found: u32, expected: u32 },
    #[error("{path}: truncated, expected {expected} bytes, found {found}")]
    Truncated { path: PathBuf, expected: usize, found: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("image file has {images} entries but label file has {labels}")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: unreadable image: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },
    #[error("{0}: class directory contains no images")]
    EmptyClass(PathBuf),
    #[error("{0}: no class subdirectories")]
    NoClasses(PathBuf),
    #[error("{dataset} class {class:?}: need {needed} examples, only {available} available (short by {})", needed - available)]
    InsufficientExamples { dataset: &'static str, class: String, needed: usize, available: usize },
    #[error("paired stream: {0}")]
    PairedStream(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One image (HWC, values in [0, 1]) with its class index.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub image: Tensor,
    pub label: usize,
}

/// An unlabeled sample as seen by the models during online learning.
/// `id` is the index of the sample in its source dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: usize,
    pub image: Tensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub class_names: Vec<String>,
    pub image_shape: [usize; 3],
}

impl Dataset {
    pub fn new(examples: Vec<LabeledExample>, class_names: Vec<String>, image_shape: [usize; 3]) -> Result<Self, DataError> {
        if let Some(e) = examples.iter().find(|e| e.image.shape() != image_shape) {
            return Err(DataError::DimensionMismatch(format!(
                "example of shape {:?} in a {:?} dataset",
                e.image.shape(),
                image_shape
            )));
        }
        if let Some(e) = examples.iter().find(|e| e.label >= class_names.len()) {
            return Err(DataError::InvalidArgument(format!(
                "label {} but only {} classes",
                e.label,
                class_names.len()
            )));
        }
        Ok(Self { examples, class_names, image_shape })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for e in &self.examples {
            counts[e.label] += 1;
        }
        counts
    }

    pub fn with_class_names(mut self, names: Vec<String>) -> Result<Self, DataError> {
        if names.len() < self.num_classes() {
            return Err(DataError::InvalidArgument(format!(
                "{} names for {} classes",
                names.len(),
                self.num_classes()
            )));
        }
        self.class_names = names;
        Ok(self)
    }

    /// Applies an image transform to every example.
    pub fn map_images(self, f: impl Fn(&Tensor) -> Tensor) -> Result<Self, DataError> {
        let examples: Vec<LabeledExample> = self
            .examples
            .iter()
            .map(|e| LabeledExample { image: f(&e.image), label: e.label })
            .collect();
        let shape = match examples.first() {
            Some(e) => {
                let (h, w, c) = e.image.hwc().map_err(|e| DataError::DimensionMismatch(e.to_string()))?;
                [h, w, c]
            }
            None => self.image_shape,
        };
        Dataset::new(examples, self.class_names, shape)
    }
}

/// Merges pools (e.g. a train and a test split) and keeps classes `0..k`.
/// Class indices are unchanged; class names are truncated to `k`.
pub fn merge_and_select(pools: &[Dataset], k: usize) -> Result<Dataset, DataError> {
    let first = pools
        .first()
        .ok_or_else(|| DataError::InvalidArgument("no datasets to merge".into()))?;
    if k < 2 || k > first.num_classes() {
        return Err(DataError::InvalidArgument(format!(
            "class count {k} must be in 2..={}",
            first.num_classes()
        )));
    }
    for p in &pools[1..] {
        if p.image_shape != first.image_shape {
            return Err(DataError::DimensionMismatch(format!(
                "cannot merge {:?} with {:?} images",
                p.image_shape, first.image_shape
            )));
        }
        if p.class_names.get(..k) != first.class_names.get(..k) {
            return Err(DataError::InvalidArgument("merged pools disagree on class names".into()));
        }
    }
    let examples = pools
        .iter()
        .flat_map(|p| p.examples.iter())
        .filter(|e| e.label < k)
        .cloned()
        .collect();
    Dataset::new(examples, first.class_names[..k].to_vec(), first.image_shape)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(labels: &[usize], classes: usize) -> Dataset {
        let examples = labels
            .iter()
            .map(|&l| LabeledExample { image: Tensor::full(vec![1, 1, 1], l as f32), label: l })
            .collect();
        Dataset::new(examples, (0..classes).map(|c| format!("c{c}")).collect(), [1, 1, 1]).unwrap()
    }

    #[test]
    fn merge_keeps_first_k_classes() {
        let train = tiny(&[0, 1, 2, 3, 0, 1], 4);
        let test = tiny(&[3, 2, 1, 0], 4);
        let merged = merge_and_select(&[train.clone(), test], 2).unwrap();
        assert_eq!(merged.class_counts(), vec![3, 3]);
        assert_eq!(merged.class_names, vec!["c0", "c1"]);
        let all = merge_and_select(&[train.clone()], 4).unwrap();
        assert_eq!(all.examples, train.examples);
    }

    #[test]
    fn merge_rejects_bad_k() {
        let d = tiny(&[0, 1], 2);
        assert!(merge_and_select(&[d.clone()], 1).is_err());
        assert!(merge_and_select(&[d], 3).is_err());
        assert!(merge_and_select(&[], 2).is_err());
    }
}
