//! Gaussian-blob task pairs for fast, dataset-free runs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::data::{DataError, Dataset, LabeledExample, Sample};
use crate::kt::{KtError, Teacher};
use crate::rng::RngState;
use crate::tensor::Tensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_classes: usize,
    pub samples_per_class: usize,
    pub image_size: usize,
    pub noise: f64,
    pub teacher_correctness: f64,
    pub seed: u64,
}

/// Emits a fixed label per teacher sample: the true class with probability
/// `teacher_correctness`, otherwise a uniformly drawn wrong class.
#[derive(Clone, Debug)]
pub struct OracleTeacher {
    emitted: Vec<usize>,
    classes: usize,
}

impl OracleTeacher {
    pub fn new(truth: &[usize], classes: usize, correctness: f64, rng: &mut RngState) -> Self {
        let emitted = truth
            .iter()
            .map(|&t| {
                if classes < 2 || rng.bernoulli(correctness) {
                    t
                } else {
                    let r = rng.below(classes - 1);
                    if r >= t {
                        r + 1
                    } else {
                        r
                    }
                }
            })
            .collect();
        Self { emitted, classes }
    }

    /// Label emitted for the teacher dataset example at `id`.
    pub fn label_for(&self, id: usize) -> Option<usize> {
        self.emitted.get(id).copied()
    }
}

impl Teacher for OracleTeacher {
    fn predict(&self, sample: &Sample) -> Result<usize, KtError> {
        self.label_for(sample.id)
            .ok_or_else(|| KtError::InvalidArgument(format!("oracle has no label for sample {}", sample.id)))
    }

    fn num_classes(&self) -> usize {
        self.classes
    }
}

fn blob_dataset(spec: &SynthSpec, phase: f64, width: f64, prefix: &str, rng: &mut RngState) -> Dataset {
    let s = spec.image_size;
    let n = spec.n_classes;
    let sigma = width * s as f64;
    let mut examples = Vec::with_capacity(n * spec.samples_per_class);
    for c in 0..n {
        let angle = 2.0 * PI * c as f64 / n as f64 + phase;
        let radius = 0.3 * s as f64;
        let cy = (s as f64 - 1.0) / 2.0 + radius * angle.sin();
        let cx = (s as f64 - 1.0) / 2.0 + radius * angle.cos();
        for _ in 0..spec.samples_per_class {
            let mut px = Vec::with_capacity(s * s);
            for y in 0..s {
                for x in 0..s {
                    let d2 = (y as f64 - cy).powi(2) + (x as f64 - cx).powi(2);
                    let v = (-d2 / (2.0 * sigma * sigma)).exp() + spec.noise * rng.normal();
                    px.push(v as f32);
                }
            }
            examples.push(LabeledExample { image: Tensor::new(vec![s, s, 1], px).expect("sized"), label: c });
        }
    }
    let order = {
        let mut idx: Vec<usize> = (0..examples.len()).collect();
        rng.shuffle(&mut idx);
        idx
    };
    let examples = order.into_iter().map(|i| examples[i].clone()).collect();
    let names = (0..n).map(|c| format!("{prefix}{c}")).collect();
    Dataset::new(examples, names, [s, s, 1]).expect("consistent by construction")
}

/// Builds a teacher dataset, a student dataset with differently placed blobs,
/// and an oracle teacher over the teacher dataset.
pub fn synth_task_pair(spec: &SynthSpec) -> Result<(Dataset, Dataset, OracleTeacher), DataError> {
    if !(0.0..=1.0).contains(&spec.teacher_correctness) {
        return Err(DataError::InvalidArgument(format!(
            "teacher correctness {} outside [0, 1]",
            spec.teacher_correctness
        )));
    }
    if spec.n_classes < 2 || spec.samples_per_class == 0 || spec.image_size < 2 || !(spec.noise >= 0.0) {
        return Err(DataError::InvalidArgument(format!("unusable synthetic spec {spec:?}")));
    }
    let root = RngState::new(spec.seed);
    let teacher = blob_dataset(spec, 0.0, 0.12, "teacher_", &mut root.derive("teacher"));
    let student = blob_dataset(spec, PI / spec.n_classes as f64, 0.18, "student_", &mut root.derive("student"));
    let truth: Vec<usize> = teacher.examples.iter().map(|e| e.label).collect();
    let oracle = OracleTeacher::new(&truth, spec.n_classes, spec.teacher_correctness, &mut root.derive("oracle"));
    Ok((teacher, student, oracle))
}
