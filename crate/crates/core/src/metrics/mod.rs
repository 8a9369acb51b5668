//! Confusion matrices, precision/recall/F1 with micro and macro averaging,
//! per-interval training traces, and CSV/JSON export.

mod export;

pub use export::{
    format_sig6, read_report_csv, read_trace_csv, write_json, write_report_csv, write_trace_csv, REPORT_HEADER,
    TRACE_HEADER,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kt::StepRecord;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: malformed file: {reason}")]
    Malformed { path: String, reason: String },
}

/// Counts indexed `[true class][predicted class]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(k: usize) -> Self {
        Self { counts: vec![vec![0; k]; k] }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        let k = counts.len();
        if counts.iter().any(|r| r.len() != k) {
            return Err(MetricsError::InvalidArgument("confusion matrix must be square".into()));
        }
        Ok(Self { counts })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<(), MetricsError> {
        let k = self.k();
        if truth >= k || predicted >= k {
            return Err(MetricsError::InvalidArgument(format!(
                "pair ({truth}, {predicted}) outside {k} classes"
            )));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.k()).map(|i| self.counts[i][i]).sum()
    }

    fn column_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }
}

/// Tallies `(true, predicted)` pairs.
pub fn score(k: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<ConfusionMatrix, MetricsError> {
    let mut cm = ConfusionMatrix::new(k);
    for (t, p) in pairs {
        cm.add(t, p)?;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub accuracy: f64,
    pub micro: Prf,
    #[serde(rename = "macro")]
    pub macro_avg: Prf,
    pub per_class: Vec<Prf>,
    pub support: Vec<u64>,
    pub total: u64,
}

/// Per-class and averaged scores. Zero denominators score 0; the macro mean runs over all classes.
pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::InvalidArgument("cannot report on an empty confusion matrix".into()));
    }
    let k = cm.k();
    let mut per_class = Vec::with_capacity(k);
    let mut support = Vec::with_capacity(k);
    for c in 0..k {
        let tp = cm.get(c, c);
        let predicted = cm.column_sum(c);
        let actual: u64 = cm.counts[c].iter().sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, actual);
        per_class.push(Prf { precision, recall, f1: harmonic(precision, recall) });
        support.push(actual);
    }
    let mean = |f: fn(&Prf) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    let macro_avg = Prf { precision: mean(|p| p.precision), recall: mean(|p| p.recall), f1: mean(|p| p.f1) };
    // Pooled over classes every miss is one FP and one FN, so TP+FP = TP+FN = total.
    let tp = cm.correct();
    let micro = Prf { precision: ratio(tp, total), recall: ratio(tp, total), f1: ratio(2 * tp, 2 * total) };
    Ok(MetricsReport {
        class_names: (0..k).map(|c| c.to_string()).collect(),
        accuracy: ratio(tp, total),
        micro,
        macro_avg,
        per_class,
        support,
        total,
    })
}

impl MetricsReport {
    pub fn with_class_names(mut self, names: &[String]) -> Self {
        if names.len() == self.per_class.len() {
            self.class_names = names.to_vec();
        }
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    /// Samples trained so far.
    pub step: usize,
    pub rolling_accuracy: f64,
    pub rolling_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub interval: usize,
    pub points: Vec<TracePoint>,
}

impl TrainingTrace {
    pub fn new(interval: usize) -> Self {
        Self { interval, points: Vec::new() }
    }
}

impl Default for TrainingTrace {
    fn default() -> Self {
        Self::new(100)
    }
}

/// Appends one point per completed interval not yet in `trace`.
/// `records` must be the full run so far, ordered by step.
pub fn trace_update(trace: &mut TrainingTrace, records: &[StepRecord]) {
    let n = trace.interval;
    if n == 0 {
        return;
    }
    for p in trace.points.len()..records.len() / n {
        let window = &records[p * n..(p + 1) * n];
        let correct = window.iter().filter(|r| r.correct()).count();
        let loss: f64 = window.iter().map(|r| r.loss).sum();
        trace.points.push(TracePoint {
            step: (p + 1) * n,
            rolling_accuracy: correct as f64 / n as f64,
            rolling_loss: loss / n as f64,
        });
    }
}
