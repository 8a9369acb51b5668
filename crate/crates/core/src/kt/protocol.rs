use serde::{Deserialize, Serialize};

use crate::data::{PairedStream, Sample};
use crate::kt::{step_case, stop_check, CaseCounts, ClassMapping, KtError, StepCase, StopCondition};
use crate::metrics::{score, trace_update, ConfusionMatrix, TrainingTrace};
use crate::models::{Adam, Model};
use crate::nn::softmax;
use crate::tensor::Tensor;

/// Anything that labels teacher-side samples. Implementations must not learn.
pub trait Teacher {
    fn predict(&self, sample: &Sample) -> Result<usize, KtError>;
    fn num_classes(&self) -> usize;
}

/// Argmax of the softmax of inference logits, lowest index on ties.
pub fn teacher_predict(teacher: &Model, x: &Tensor) -> Result<usize, KtError> {
    let logits = teacher.infer(x)?;
    Ok(softmax(&logits).argmax())
}

impl Teacher for Model {
    fn predict(&self, sample: &Sample) -> Result<usize, KtError> {
        teacher_predict(self, &sample.image)
    }

    fn num_classes(&self) -> usize {
        Model::num_classes(self)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    /// Mapped teacher predictions (the actual arm).
    #[default]
    Pseudo,
    /// Hidden ground truth (the expected arm).
    GroundTruth,
}

impl std::str::FromStr for LabelSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pseudo" => Ok(LabelSource::Pseudo),
            "ground_truth" => Ok(LabelSource::GroundTruth),
            other => Err(format!("unknown label source {other:?} (pseudo|ground_truth)")),
        }
    }
}

impl std::fmt::Display for LabelSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LabelSource::Pseudo => "pseudo",
            LabelSource::GroundTruth => "ground_truth",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KtOptions {
    pub trace_interval: usize,
    pub stop: Option<StopCondition>,
    pub label_source: LabelSource,
}

impl Default for KtOptions {
    fn default() -> Self {
        Self { trace_interval: 100, stop: None, label_source: LabelSource::Pseudo }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    /// Absent when the expected arm reads ground truth instead of asking the teacher.
    pub teacher_prediction: Option<usize>,
    pub pseudo_label: usize,
    /// Prediction from the training forward pass, before the update.
    pub student_prediction: usize,
    pub loss: f64,
    pub ground_truth: Option<usize>,
    pub case: Option<StepCase>,
}

impl StepRecord {
    /// Correct against ground truth when known, else agreement with the pseudo-label.
    pub fn correct(&self) -> bool {
        self.student_prediction == self.ground_truth.unwrap_or(self.pseudo_label)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "detail")]
pub enum StopReason {
    StreamExhausted,
    ThresholdMet,
    Aborted(String),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub student: Model,
    pub trace: TrainingTrace,
    pub records: Vec<StepRecord>,
    pub cases: CaseCounts,
    pub stop_reason: StopReason,
    /// True when accuracy figures measure agreement with pseudo-labels (no ground truth).
    pub accuracy_is_proxy: bool,
}

impl RunResult {
    pub fn steps(&self) -> usize {
        self.records.len()
    }

    /// Confusion matrix of the student's pre-update predictions against ground truth.
    pub fn confusion(&self) -> Option<ConfusionMatrix> {
        let k = self.student.num_classes();
        let pairs: Option<Vec<(usize, usize)>> =
            self.records.iter().map(|r| r.ground_truth.map(|g| (g, r.student_prediction))).collect();
        score(k, pairs?).ok()
    }
}

/// The online loop, independent of where teacher labels come from.
/// `teacher_label(i)` returns the teacher's class for step `i`; a
/// [`KtError::Transport`] from it ends the run early with a partial result.
pub fn run_online<F>(
    mut student: Model,
    student_samples: &[Sample],
    truth: Option<&[usize]>,
    mapping: &ClassMapping,
    optimizer: &mut Adam,
    options: &KtOptions,
    mut teacher_label: F,
) -> Result<RunResult, KtError>
where
    F: FnMut(usize) -> Result<usize, KtError>,
{
    if options.trace_interval == 0 {
        return Err(KtError::InvalidArgument("trace interval must be positive".into()));
    }
    if let Some(stop) = &options.stop {
        stop.validate()?;
    }
    if student.num_classes() != mapping.len() {
        return Err(KtError::ClassCountMismatch { teacher: mapping.len(), student: student.num_classes() });
    }
    if let Some(t) = truth {
        if t.len() != student_samples.len() {
            return Err(KtError::PairedStream(format!(
                "{} ground-truth labels for {} samples",
                t.len(),
                student_samples.len()
            )));
        }
    }
    if options.label_source == LabelSource::GroundTruth && truth.is_none() {
        return Err(KtError::InvalidArgument("ground-truth labels requested but the stream has none".into()));
    }

    let mut trace = TrainingTrace::new(options.trace_interval);
    let mut records: Vec<StepRecord> = Vec::with_capacity(student_samples.len());
    let mut outcomes: Vec<bool> = Vec::with_capacity(student_samples.len());
    let mut cases = CaseCounts::default();
    let mut stop_reason = StopReason::StreamExhausted;

    for (i, sample) in student_samples.iter().enumerate() {
        let ground_truth = truth.map(|t| t[i]);
        let (teacher_prediction, pseudo_label) = match options.label_source {
            LabelSource::GroundTruth => (None, ground_truth.expect("checked above")),
            LabelSource::Pseudo => match teacher_label(i) {
                Ok(t) => (Some(t), mapping.transform(t)?),
                Err(KtError::Transport(reason)) => {
                    stop_reason = StopReason::Aborted(reason);
                    break;
                }
                Err(e) => return Err(e),
            },
        };
        let (loss, logits) = student.train_step_with_logits(&sample.image, pseudo_label, optimizer)?;
        let student_prediction = logits.argmax();
        let case = ground_truth.map(|g| step_case(student_prediction == g, pseudo_label == g));
        if let Some(c) = case {
            cases.add(c);
        }
        let record = StepRecord {
            step: i,
            teacher_prediction,
            pseudo_label,
            student_prediction,
            loss: loss as f64,
            ground_truth,
            case,
        };
        outcomes.push(record.correct());
        records.push(record);

        if let Some(stop) = &options.stop {
            if (i + 1) % stop.cadence == 0 && stop_check(&outcomes, stop) {
                stop_reason = StopReason::ThresholdMet;
                break;
            }
        }
    }
    trace_update(&mut trace, &records);
    Ok(RunResult { student, trace, records, cases, stop_reason, accuracy_is_proxy: truth.is_none() })
}

/// Runs the online loop over a paired stream with an in-process teacher.
pub fn kt_run(
    teacher: &dyn Teacher,
    student: Model,
    stream: &PairedStream,
    mapping: &ClassMapping,
    optimizer: &mut Adam,
    options: &KtOptions,
) -> Result<RunResult, KtError> {
    if stream.mapping().digest() != mapping.digest() {
        return Err(KtError::PairedStream("stream was built for a different class mapping".into()));
    }
    if options.label_source == LabelSource::Pseudo && teacher.num_classes() != mapping.len() {
        return Err(KtError::ClassCountMismatch { teacher: teacher.num_classes(), student: mapping.len() });
    }
    let truth = stream.ground_truth().map(|t| t.student.as_slice());
    let teacher_samples = stream.teacher_view();
    run_online(student, stream.student_view(), truth, mapping, optimizer, options, |i| {
        teacher.predict(&teacher_samples[i])
    })
}

/// Inference-mode confusion matrix of `model` over labelled samples.
pub fn evaluate(model: &Model, samples: &[Sample], truth: &[usize]) -> Result<ConfusionMatrix, KtError> {
    if samples.len() != truth.len() {
        return Err(KtError::InvalidArgument(format!(
            "{} samples but {} labels",
            samples.len(),
            truth.len()
        )));
    }
    let mut pairs = Vec::with_capacity(samples.len());
    for (s, &t) in samples.iter().zip(truth) {
        pairs.push((t, model.predict(&s.image)?));
    }
    score(model.num_classes(), pairs).map_err(|e| KtError::InvalidArgument(e.to_string()))
}
