use std::path::{Path, PathBuf};

use ktedge_core::data::{OlCounts, PretrainCounts, SplitPlan};
use ktedge_core::kt::{LabelSource, StopCondition};
use ktedge_core::models::{Monitor, TrainSettings};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ExpError;

/// The published config schema.
pub const SCHEMA: &str = include_str!("../schema/experiment.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Classes {
    One(usize),
    Sweep(Vec<usize>),
}

impl Classes {
    pub fn list(&self) -> Vec<usize> {
        match self {
            Classes::One(k) => vec![*k],
            Classes::Sweep(ks) => ks.clone(),
        }
    }
}

fn default_hidden() -> usize {
    32
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Squeezenet,
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TeacherKind {
    Oracle,
    Squeezenet,
    Mlp {
        #[serde(default = "default_hidden")]
        hidden: usize,
    },
}

impl TeacherKind {
    pub fn model(&self) -> Option<ModelKind> {
        match self {
            TeacherKind::Oracle => None,
            TeacherKind::Squeezenet => Some(ModelKind::Squeezenet),
            TeacherKind::Mlp { hidden } => Some(ModelKind::Mlp { hidden: *hidden }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdxPool {
    pub images: PathBuf,
    pub labels: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum SourceConfig {
    Idx {
        pools: Vec<IdxPool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        class_names: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resize_to: Option<[usize; 3]>,
    },
    ImageDir {
        pools: Vec<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        resize_to: Option<[usize; 3]>,
    },
}

impl SourceConfig {
    fn paths(&self) -> Vec<&Path> {
        match self {
            SourceConfig::Idx { pools, .. } => {
                pools.iter().flat_map(|p| [p.images.as_path(), p.labels.as_path()]).collect()
            }
            SourceConfig::ImageDir { pools, .. } => pools.iter().map(PathBuf::as_path).collect(),
        }
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            SourceConfig::Idx { pools, .. } => pools.iter_mut().for_each(|p| {
                fix(&mut p.images);
                fix(&mut p.labels);
            }),
            SourceConfig::ImageDir { pools, .. } => pools.iter_mut().for_each(fix),
        }
    }
}

fn default_noise() -> f64 {
    0.1
}

fn default_correctness() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataConfig {
    Synthetic {
        samples_per_class: usize,
        image_size: usize,
        #[serde(default = "default_noise")]
        noise: f64,
        #[serde(default = "default_correctness")]
        teacher_correctness: f64,
    },
    Files {
        teacher: SourceConfig,
        student: SourceConfig,
    },
    /// One labelled pool split per class: the first `teacher_per_class`
    /// examples of each class go to the teacher, the rest to the student.
    Shared {
        source: SourceConfig,
        teacher_per_class: usize,
    },
}

/// Partial training settings layered over a phase's defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monitor: Option<Monitor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
}

impl TrainOverrides {
    pub fn apply(&self, mut base: TrainSettings) -> TrainSettings {
        if let Some(e) = self.epochs {
            base.epochs = e;
        }
        if let Some(b) = self.batch_size {
            base.batch_size = b;
        }
        if let Some(v) = self.validation_ratio {
            base.validation_ratio = v;
            base.monitor = if v > 0.0 { Monitor::ValLoss } else { Monitor::Loss };
        }
        if let Some(m) = self.monitor {
            base.monitor = m;
        }
        if let Some(lr) = self.learning_rate {
            base.adam.lr = lr;
        }
        base
    }
}

fn one() -> usize {
    1
}

fn remainder() -> PretrainCounts {
    PretrainCounts::Remainder
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub ol: OlCounts,
    #[serde(default = "remainder")]
    pub teacher_pretrain: PretrainCounts,
    #[serde(default = "one")]
    pub semi_train_per_class: usize,
}

impl SplitConfig {
    /// The plan for the first `k` classes; explicit vectors are cut to `k` entries.
    pub fn plan(&self, k: usize, seed: u64) -> SplitPlan {
        let cut = |v: &Vec<usize>| v.iter().copied().take(k).collect::<Vec<_>>();
        SplitPlan {
            ol: match &self.ol {
                OlCounts::Explicit(v) => OlCounts::Explicit(cut(v)),
                other => other.clone(),
            },
            teacher_pretrain: match &self.teacher_pretrain {
                PretrainCounts::Explicit(v) => PretrainCounts::Explicit(cut(v)),
                other => other.clone(),
            },
            semi_train_per_class: self.semi_train_per_class,
            seed,
        }
    }
}

fn default_interval() -> usize {
    100
}

fn default_arms() -> Vec<LabelSource> {
    vec![LabelSource::GroundTruth, LabelSource::Pseudo]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    #[serde(default)]
    pub faithful: bool,
    pub classes: Classes,
    pub data: DataConfig,
    pub teacher: TeacherKind,
    pub student: ModelKind,
    #[serde(default)]
    pub teacher_training: TrainOverrides,
    #[serde(default)]
    pub student_training: TrainOverrides,
    pub splits: SplitConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<Vec<(String, String)>>,
    #[serde(default = "default_interval")]
    pub trace_interval: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<StopCondition>,
    #[serde(default = "default_arms")]
    pub arms: Vec<LabelSource>,
}

/// Epoch count of the teacher schedule when the config does not set one.
pub const DESK_TEACHER_EPOCHS: usize = 20;

impl ExperimentConfig {
    pub fn teacher_settings(&self) -> TrainSettings {
        let mut base = TrainSettings::teacher_pretraining();
        if !self.faithful {
            base.epochs = DESK_TEACHER_EPOCHS;
        }
        self.teacher_training.apply(base)
    }

    pub fn student_settings(&self) -> TrainSettings {
        self.student_training.apply(TrainSettings::semi_training())
    }

    pub fn class_counts(&self) -> Vec<usize> {
        self.classes.list()
    }

    fn data_paths(&self) -> Vec<&Path> {
        match &self.data {
            DataConfig::Synthetic { .. } => Vec::new(),
            DataConfig::Files { teacher, student } => teacher.paths().into_iter().chain(student.paths()).collect(),
            DataConfig::Shared { source, .. } => source.paths(),
        }
    }

    fn rebase(&mut self, base: &Path) {
        match &mut self.data {
            DataConfig::Synthetic { .. } => {}
            DataConfig::Files { teacher, student } => {
                teacher.rebase(base);
                student.rebase(base);
            }
            DataConfig::Shared { source, .. } => source.rebase(base),
        }
    }

    /// Checks that need more than the schema; returns every problem found.
    pub fn semantic_errors(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let ks = self.class_counts();
        if ks.is_empty() {
            errs.push("/classes: at least one class count is required".into());
        }
        for &k in &ks {
            if k < 2 {
                errs.push(format!("/classes: class count {k} is below 2"));
            }
        }
        let max_k = ks.iter().copied().max().unwrap_or(0);
        for (field, v) in [("ol", explicit(&self.splits.ol)), ("teacher_pretrain", explicit_p(&self.splits.teacher_pretrain))] {
            if let Some(v) = v {
                if v.len() < max_k {
                    errs.push(format!("/splits/{field}/explicit: {} entries for up to {max_k} classes", v.len()));
                }
            }
        }
        if matches!(self.splits.ol, OlCounts::TeacherRemainder)
            && matches!(self.splits.teacher_pretrain, PretrainCounts::Remainder)
        {
            errs.push("/splits: ol and teacher_pretrain cannot both take the remainder".into());
        }
        if self.splits.semi_train_per_class == 0 {
            errs.push("/splits/semi_train_per_class: must be at least 1".into());
        }
        if self.trace_interval == 0 {
            errs.push("/trace_interval: must be at least 1".into());
        }
        if let Some(stop) = &self.stop {
            if let Err(e) = stop.validate() {
                errs.push(format!("/stop: {e}"));
            }
        }
        if self.arms.is_empty() {
            errs.push("/arms: at least one arm is required".into());
        }
        let synthetic = matches!(self.data, DataConfig::Synthetic { .. });
        if matches!(self.teacher, TeacherKind::Oracle) && !synthetic {
            errs.push("/teacher: the oracle teacher needs synthetic data".into());
        }
        if let DataConfig::Synthetic { teacher_correctness, noise, .. } = &self.data {
            if !(0.0..=1.0).contains(teacher_correctness) {
                errs.push(format!("/data/teacher_correctness: {teacher_correctness} outside [0, 1]"));
            }
            if !(*noise >= 0.0) {
                errs.push(format!("/data/noise: {noise} must be non-negative"));
            }
        }
        for (name, s) in [("teacher_training", self.teacher_settings()), ("student_training", self.student_settings())] {
            if let Err(e) = s.validate() {
                errs.push(format!("/{name}: {e}"));
            }
        }
        for p in self.data_paths() {
            if !p.exists() {
                errs.push(format!("/data: path {} does not exist", p.display()));
            }
        }
        errs
    }
}

fn explicit(c: &OlCounts) -> Option<&Vec<usize>> {
    match c {
        OlCounts::Explicit(v) => Some(v),
        _ => None,
    }
}

fn explicit_p(c: &PretrainCounts) -> Option<&Vec<usize>> {
    match c {
        PretrainCounts::Explicit(v) => Some(v),
        _ => None,
    }
}

/// Schema violations as `path: message` lines.
pub fn schema_errors(value: &Value) -> Vec<String> {
    let schema: Value = serde_json::from_str(SCHEMA).expect("bundled schema is valid JSON");
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("bundled schema compiles");
    let result = match compiled.validate(value) {
        Ok(()) => Vec::new(),
        Err(errors) => errors
            .map(|e| {
                let path = e.instance_path.to_string();
                format!("{}: {e}", if path.is_empty() { "/".to_string() } else { path })
            })
            .collect(),
    };
    result
}

/// Parses and validates config text. Relative data paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<ExperimentConfig, ExpError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ExpError::Validation(vec![format!("not valid JSON: {e}")]))?;
    let errs = schema_errors(&value);
    if !errs.is_empty() {
        return Err(ExpError::Validation(errs));
    }
    let mut cfg: ExperimentConfig =
        serde_json::from_value(value).map_err(|e| ExpError::Validation(vec![format!("/: {e}")]))?;
    cfg.rebase(base);
    let errs = cfg.semantic_errors();
    if !errs.is_empty() {
        return Err(ExpError::Validation(errs));
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ExpError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ExpError::Validation(vec![format!("cannot read config {}: {e}", path.display())]))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config(&text, &base)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t", "seed": 1, "classes": 2,
        "data": {"kind": "synthetic", "samples_per_class": 10, "image_size": 6},
        "teacher": {"kind": "oracle"}, "student": {"kind": "mlp", "hidden": 4},
        "splits": {"ol": {"per_class": 5}}
    }"#;

    #[test]
    fn minimal_config_with_defaults() {
        let cfg = parse_config(MINIMAL, Path::new(".")).unwrap();
        assert_eq!(cfg.trace_interval, 100);
        assert_eq!(cfg.arms, vec![LabelSource::GroundTruth, LabelSource::Pseudo]);
        assert_eq!(cfg.teacher_settings().epochs, DESK_TEACHER_EPOCHS);
        assert_eq!(cfg.student_settings(), TrainSettings::semi_training());
        assert_eq!(cfg.splits.teacher_pretrain, PretrainCounts::Remainder);
        let faithful = ExperimentConfig { faithful: true, ..cfg };
        assert_eq!(faithful.teacher_settings().epochs, 100);
    }

    #[test]
    fn snapshot_round_trips() {
        let cfg = parse_config(MINIMAL, Path::new(".")).unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(parse_config(&text, Path::new(".")).unwrap(), cfg);
    }

    #[test]
    fn every_bad_field_is_listed() {
        let bad = r#"{
            "name": "", "seed": -1, "classes": 1, "colour": "red",
            "data": {"kind": "synthetic", "samples_per_class": 10, "image_size": 6},
            "teacher": {"kind": "oracle"}, "student": {"kind": "transformer"},
            "splits": {"ol": {"per_class": 5}}
        }"#;
        match parse_config(bad, Path::new(".")) {
            Err(ExpError::Validation(errs)) => {
                let text = errs.join("\n");
                for field in ["/name", "/seed", "/classes", "colour", "/student"] {
                    assert!(text.contains(field), "{field} missing from\n{text}");
                }
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_problems_are_collected() {
        let bad = r#"{
            "name": "t", "seed": 1, "classes": [2, 3],
            "data": {"kind": "files",
                     "teacher": {"format": "idx", "pools": [{"images": "/nope/a", "labels": "/nope/b"}]},
                     "student": {"format": "image_dir", "pools": ["/nope/c"]}},
            "teacher": {"kind": "oracle"}, "student": {"kind": "squeezenet"},
            "splits": {"ol": {"explicit": [1, 2]}}
        }"#;
        match parse_config(bad, Path::new(".")) {
            Err(ExpError::Validation(errs)) => {
                let text = errs.join("\n");
                assert!(text.contains("/teacher"), "{text}");
                assert!(text.contains("/splits/ol/explicit"), "{text}");
                assert_eq!(errs.iter().filter(|e| e.contains("does not exist")).count(), 3, "{text}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
