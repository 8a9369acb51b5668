//! Stages of one experiment: data and splits, teacher pretraining, student
//! semi-training, the online arms, and the comparison.

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use ktedge_core::data::{
    build_splits, expand_channels, load_idx, load_image_directory, merge_and_select, resize_bilinear,
    synth_task_pair, Dataset, OracleTeacher, Sample, Splits, SynthSpec,
};
use ktedge_core::kt::{build_class_mapping, kt_run, ClassMapping, KtError, KtOptions, LabelSource, Teacher};
use ktedge_core::metrics::{format_sig6, report, score, write_json, MetricsReport};
use ktedge_core::models::{
    fit_with_progress, load_checkpoint_expecting, save_checkpoint, Adam, Architecture, Model, TrainSettings,
};
use ktedge_core::rng::{derive_seed, RngState};
use ktedge_link::{connect, run_student_client, TeacherServer};
use log::{info, warn};
use serde::Serialize;
use serde_json::Value;

use crate::artifacts::{arm_name, create_dir, k_dir, write_arm, write_history, write_report, Manifest};
use crate::compare::{compare, write_rows, Comparison};
use crate::config::{DataConfig, ExperimentConfig, ModelKind, SourceConfig};
use crate::ExpError;

pub const PRETRAIN: &str = "pretrain";
pub const SEMITRAIN: &str = "semitrain";

/// Which network a checkpoint belongs to, for `evaluate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Teacher,
    Student,
}

/// Everything derived from the config for one class count.
pub struct Prepared {
    pub k: usize,
    pub splits: Splits,
    pub mapping: ClassMapping,
    pub teacher_shape: [usize; 3],
    pub student_shape: [usize; 3],
    pub oracle: Option<OracleTeacher>,
}

impl Prepared {
    pub fn teacher_truth(&self) -> &[usize] {
        &self.splits.stream.ground_truth().expect("simulation streams carry labels").teacher
    }

    pub fn student_truth(&self) -> &[usize] {
        &self.splits.stream.ground_truth().expect("simulation streams carry labels").student
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ArmSummary {
    pub arm: String,
    pub steps: usize,
    pub accuracy: Option<f64>,
    pub macro_f1: Option<f64>,
    pub stop_reason: String,
    pub teacher_correctness: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KSummary {
    pub k: usize,
    pub teacher_ol_accuracy: f64,
    pub arms: Vec<ArmSummary>,
}

enum Source {
    Synthetic,
    Pair { teacher: Dataset, student: Dataset },
}

/// A config bound to an output directory.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub out: PathBuf,
    snapshot: Value,
    source: Option<Source>,
}

pub(crate) fn architecture(kind: &ModelKind, shape: [usize; 3], k: usize) -> Architecture {
    match kind {
        ModelKind::Squeezenet => Architecture::SqueezeNet { input: shape, classes: k },
        ModelKind::Mlp { hidden } => Architecture::Mlp { input_dim: shape.iter().product(), hidden: *hidden, classes: k },
    }
}

fn load_source(src: &SourceConfig) -> Result<Dataset, ExpError> {
    let (pools, names, resize) = match src {
        SourceConfig::Idx { pools, class_names, resize_to } => {
            let loaded = pools.iter().map(|p| load_idx(&p.images, &p.labels)).collect::<Result<Vec<_>, _>>()?;
            (loaded, class_names.clone(), *resize_to)
        }
        SourceConfig::ImageDir { pools, resize_to } => {
            let loaded = pools.iter().map(load_image_directory).collect::<Result<Vec<_>, _>>()?;
            (loaded, None, *resize_to)
        }
    };
    let classes = pools.iter().map(Dataset::num_classes).min().unwrap_or(0);
    let mut ds = merge_and_select(&pools, classes)?;
    if let Some(names) = names {
        ds = ds.with_class_names(names)?;
    }
    if let Some([h, w, c]) = resize {
        let src_c = ds.image_shape[2];
        if c != src_c && src_c != 1 {
            return Err(ExpError::invalid(format!("/data: cannot turn {src_c}-channel images into {c} channels")));
        }
        ds = ds.map_images(|img| {
            let r = resize_bilinear(img, h, w);
            if c == src_c {
                r
            } else {
                expand_channels(&r, c)
            }
        })?;
    }
    info!("loaded {} examples of shape {:?} in {} classes", ds.len(), ds.image_shape, ds.num_classes());
    Ok(ds)
}

/// First `per_class` examples of each class in file order, and the rest.
fn split_shared(ds: &Dataset, per_class: usize) -> Result<(Dataset, Dataset), ExpError> {
    let mut seen = vec![0usize; ds.num_classes()];
    let (mut first, mut rest) = (Vec::new(), Vec::new());
    for e in &ds.examples {
        if seen[e.label] < per_class {
            seen[e.label] += 1;
            first.push(e.clone());
        } else {
            rest.push(e.clone());
        }
    }
    let names = ds.class_names.clone();
    Ok((Dataset::new(first, names.clone(), ds.image_shape)?, Dataset::new(rest, names, ds.image_shape)?))
}

fn check_k(k: usize, ds: &Dataset, side: &str) -> Result<(), ExpError> {
    if k > ds.num_classes() {
        return Err(ExpError::invalid(format!(
            "/classes: {k} classes requested but the {side} data has {}",
            ds.num_classes()
        )));
    }
    Ok(())
}

impl Experiment {
    pub fn new(config: ExperimentConfig, out: impl Into<PathBuf>) -> Self {
        let snapshot = serde_json::to_value(&config).expect("config serializes");
        Self { config, out: out.into(), snapshot, source: None }
    }

    pub fn snapshot(&self) -> &Value {
        &self.snapshot
    }

    /// The class counts to work on: all configured ones, or `only` if it is one of them.
    pub fn class_counts(&self, only: Option<usize>) -> Result<Vec<usize>, ExpError> {
        let all = self.config.class_counts();
        match only {
            None => Ok(all),
            Some(k) if all.contains(&k) => Ok(vec![k]),
            Some(k) => Err(ExpError::invalid(format!("--k {k} is not among the configured class counts {all:?}"))),
        }
    }

    /// The single class count for commands that handle one at a time.
    pub fn single_k(&self, only: Option<usize>) -> Result<usize, ExpError> {
        let ks = self.class_counts(only)?;
        match ks.as_slice() {
            [k] => Ok(*k),
            _ => Err(ExpError::invalid(format!("the config sweeps {ks:?}; pick one with --k"))),
        }
    }

    fn source(&mut self) -> Result<&Source, ExpError> {
        if self.source.is_none() {
            let src = match &self.config.data {
                DataConfig::Synthetic { .. } => Source::Synthetic,
                DataConfig::Files { teacher, student } => {
                    Source::Pair { teacher: load_source(teacher)?, student: load_source(student)? }
                }
                DataConfig::Shared { source, teacher_per_class } => {
                    let (teacher, student) = split_shared(&load_source(source)?, *teacher_per_class)?;
                    Source::Pair { teacher, student }
                }
            };
            self.source = Some(src);
        }
        Ok(self.source.as_ref().expect("set above"))
    }

    fn mapping(&self, teacher: &[String], student: &[String]) -> Result<ClassMapping, ExpError> {
        match &self.config.mapping {
            None => Ok(ClassMapping::index_order(teacher, student)?),
            Some(pairs) => {
                let kept: Vec<(String, String)> =
                    pairs.iter().filter(|(t, _)| teacher.contains(t)).cloned().collect();
                Ok(build_class_mapping(teacher, student, &kept)?)
            }
        }
    }

    /// Datasets, mapping and splits for `k` classes. Deterministic in the config.
    pub fn prepare(&mut self, k: usize) -> Result<Prepared, ExpError> {
        let seed = self.config.seed;
        let (teacher_ds, student_ds, oracle) = match &self.config.data {
            DataConfig::Synthetic { samples_per_class, image_size, noise, teacher_correctness } => {
                let spec = SynthSpec {
                    n_classes: k,
                    samples_per_class: *samples_per_class,
                    image_size: *image_size,
                    noise: *noise,
                    teacher_correctness: *teacher_correctness,
                    seed: derive_seed(seed, "synthetic"),
                };
                let (t, s, o) = synth_task_pair(&spec)?;
                (t, s, Some(o))
            }
            _ => match self.source()? {
                Source::Pair { teacher, student } => {
                    check_k(k, teacher, "teacher")?;
                    check_k(k, student, "student")?;
                    (merge_and_select(std::slice::from_ref(teacher), k)?, merge_and_select(std::slice::from_ref(student), k)?, None)
                }
                Source::Synthetic => unreachable!("synthetic data handled above"),
            },
        };
        let mapping = self.mapping(&teacher_ds.class_names, &student_ds.class_names)?;
        let plan = self.config.splits.plan(k, derive_seed(seed, &format!("splits/k{k}")));
        let splits = build_splits(&teacher_ds, &student_ds, &mapping, &plan)?;
        info!(
            "k={k}: teacher pretrain {}, student semi-train {}, online stream {}",
            splits.teacher_pretrain.len(),
            splits.student_semitrain.len(),
            splits.stream.len()
        );
        Ok(Prepared {
            k,
            splits,
            mapping,
            teacher_shape: teacher_ds.image_shape,
            student_shape: student_ds.image_shape,
            oracle,
        })
    }

    fn open_k(&self, k: usize) -> Result<(PathBuf, Manifest), ExpError> {
        let dir = k_dir(&self.out, k);
        let manifest = Manifest::open(&dir, &self.snapshot)?;
        create_dir(&dir)?;
        write_json(&self.snapshot, dir.join("config.json"))?;
        write_json(&self.snapshot, self.out.join("config.json"))?;
        Ok((dir, manifest))
    }

    fn teacher_arch(&self, prep: &Prepared) -> Option<Architecture> {
        self.config.teacher.model().map(|m| architecture(&m, prep.teacher_shape, prep.k))
    }

    fn student_arch(&self, prep: &Prepared) -> Architecture {
        architecture(&self.config.student, prep.student_shape, prep.k)
    }

    fn train(
        arch: &Architecture,
        examples: &[ktedge_core::data::LabeledExample],
        settings: &TrainSettings,
        rng: RngState,
        what: &str,
        dir: &Path,
    ) -> Result<Model, ExpError> {
        let mut model = Model::build(arch, &mut rng.derive("init"))?;
        info!("{what}: {arch}, {} parameters, {} examples", model.param_count(), examples.len());
        let outcome = fit_with_progress(&mut model, examples, settings, &mut rng.derive("fit"), |s| {
            let val = match (s.val_loss, s.val_accuracy) {
                (Some(l), Some(a)) => format!(" val_loss {l:.4} val_acc {a:.4}"),
                _ => String::new(),
            };
            info!("{what} epoch {}: loss {:.4} acc {:.4}{val}", s.epoch, s.loss, s.accuracy);
        })?;
        info!("{what}: kept epoch {}", outcome.best.epoch);
        write_history(dir, &outcome)?;
        Ok(model)
    }

    /// Trains the teacher (nothing to train for the oracle) and scores it on the online stream.
    pub fn pretrain(&mut self, prep: &Prepared) -> Result<f64, ExpError> {
        let (kdir, mut manifest) = self.open_k(prep.k)?;
        let dir = kdir.join("teacher");
        create_dir(&dir)?;
        let teacher: Box<dyn Teacher> = match self.teacher_arch(prep) {
            None => Box::new(prep.oracle.clone().expect("oracle teacher needs synthetic data")),
            Some(arch) => {
                let rng = RngState::new(derive_seed(self.config.seed, &format!("teacher/k{}", prep.k)));
                let settings = self.config.teacher_settings();
                let model = Self::train(&arch, &prep.splits.teacher_pretrain, &settings, rng, "teacher", &dir)?;
                save_checkpoint(&model, dir.join("teacher.ktck"))?;
                Box::new(model)
            }
        };
        let rep = self.score_teacher(teacher.as_ref(), prep, &dir)?;
        info!("k={}: teacher accuracy on the online stream {:.4}", prep.k, rep.accuracy);
        manifest.mark(&kdir, PRETRAIN)?;
        Ok(rep.accuracy)
    }

    fn score_teacher(&self, teacher: &dyn Teacher, prep: &Prepared, dir: &Path) -> Result<MetricsReport, ExpError> {
        let samples = prep.splits.stream.teacher_view();
        let mut pairs = Vec::with_capacity(samples.len());
        for (s, &t) in samples.iter().zip(prep.teacher_truth()) {
            pairs.push((t, teacher.predict(s)?));
        }
        let cm = score(prep.k, pairs)?;
        let rep = report(&cm)?.with_class_names(prep.mapping.teacher_classes());
        write_report(dir, &rep, cm.counts())?;
        Ok(rep)
    }

    pub fn semitrain(&mut self, prep: &Prepared) -> Result<(), ExpError> {
        let (kdir, mut manifest) = self.open_k(prep.k)?;
        let dir = kdir.join("student");
        create_dir(&dir)?;
        let rng = RngState::new(derive_seed(self.config.seed, &format!("student/k{}", prep.k)));
        let arch = self.student_arch(prep);
        let settings = self.config.student_settings();
        let model = Self::train(&arch, &prep.splits.student_semitrain, &settings, rng, "student", &dir)?;
        save_checkpoint(&model, dir.join("semitrained.ktck"))?;
        manifest.mark(&kdir, SEMITRAIN)?;
        Ok(())
    }

    /// The trained teacher of a completed pretrain stage, or the oracle.
    pub fn load_teacher(&self, prep: &Prepared) -> Result<Arc<dyn Teacher + Send + Sync>, ExpError> {
        let kdir = k_dir(&self.out, prep.k);
        Manifest::open(&kdir, &self.snapshot)?.require(PRETRAIN, &kdir)?;
        Ok(match self.teacher_arch(prep) {
            None => Arc::new(prep.oracle.clone().expect("oracle teacher needs synthetic data")),
            Some(arch) => Arc::new(load_checkpoint_expecting(kdir.join("teacher").join("teacher.ktck"), &arch)?),
        })
    }

    /// The semi-trained student, prepared for the online phase.
    pub fn load_student(&self, prep: &Prepared) -> Result<Model, ExpError> {
        let kdir = k_dir(&self.out, prep.k);
        Manifest::open(&kdir, &self.snapshot)?.require(SEMITRAIN, &kdir)?;
        let mut student =
            load_checkpoint_expecting(kdir.join("student").join("semitrained.ktck"), &self.student_arch(prep))?;
        student.reseed(derive_seed(self.config.seed, &format!("kt/k{}", prep.k)));
        Ok(student)
    }

    fn kt_options(&self, arm: LabelSource) -> KtOptions {
        KtOptions { trace_interval: self.config.trace_interval, stop: self.config.stop.clone(), label_source: arm }
    }

    fn optimizer(&self) -> Adam {
        Adam::new(self.config.student_settings().adam)
    }

    fn finish_arm(&self, prep: &Prepared, arm: LabelSource, result: &ktedge_core::kt::RunResult) -> Result<ArmSummary, ExpError> {
        let kdir = k_dir(&self.out, prep.k);
        let mut manifest = Manifest::open(&kdir, &self.snapshot)?;
        let rep = write_arm(&kdir.join(arm_name(arm)), arm, result, prep.mapping.student_classes(), &self.snapshot)?;
        manifest.mark(&kdir, arm_name(arm))?;
        let summary = ArmSummary {
            arm: arm_name(arm).to_string(),
            steps: result.steps(),
            accuracy: rep.as_ref().map(|r| r.accuracy),
            macro_f1: rep.as_ref().map(|r| r.macro_avg.f1),
            stop_reason: serde_json::to_value(&result.stop_reason).expect("serializes")["kind"]
                .as_str()
                .unwrap_or_default()
                .to_string(),
            teacher_correctness: (result.cases.total() > 0).then(|| result.cases.teacher_correctness()),
        };
        info!(
            "k={} {} arm: {} steps, accuracy {}",
            prep.k,
            summary.arm,
            summary.steps,
            summary.accuracy.map(format_sig6).unwrap_or_else(|| "n/a".into())
        );
        Ok(summary)
    }

    /// Runs one online arm in process.
    pub fn run_arm(&self, prep: &Prepared, arm: LabelSource) -> Result<ArmSummary, ExpError> {
        let student = self.load_student(prep)?;
        let teacher = self.load_teacher(prep)?;
        let result =
            kt_run(teacher.as_ref(), student, &prep.splits.stream, &prep.mapping, &mut self.optimizer(), &self.kt_options(arm))?;
        self.finish_arm(prep, arm, &result)
    }

    /// Writes the comparison for `k` if both arms have run.
    pub fn compare_k(&self, k: usize) -> Result<Option<Comparison>, ExpError> {
        let kdir = k_dir(&self.out, k);
        let (e, a) = (kdir.join(arm_name(LabelSource::GroundTruth)), kdir.join(arm_name(LabelSource::Pseudo)));
        if !e.join("report.json").exists() || !a.join("report.json").exists() {
            return Ok(None);
        }
        Ok(Some(compare(&e, &a, Some(&kdir.join("comparison")))?))
    }

    /// Serves teacher labels for the online stream of `k`.
    pub fn serve_teacher(&self, prep: &Prepared, listener: TcpListener, max_connections: Option<usize>) -> Result<(), ExpError> {
        let teacher = self.load_teacher(prep)?;
        let samples: Vec<Sample> = prep.splits.stream.teacher_view().to_vec();
        let server = Arc::new(TeacherServer::new(teacher, Arc::new(samples), prep.mapping.clone())?);
        info!("serving {} teacher labels on {}", prep.splits.stream.len(), listener.local_addr()?);
        server.serve(listener, max_connections)?;
        Ok(())
    }

    /// Runs the pseudo-label arm against a remote teacher.
    pub fn run_student(&self, prep: &Prepared, addr: &str, timeout: Duration) -> Result<ArmSummary, ExpError> {
        let student = self.load_student(prep)?;
        let mut conn = connect(addr, &prep.mapping, timeout)?;
        let result = run_student_client(
            student,
            prep.splits.stream.student_view(),
            Some(prep.student_truth()),
            &prep.mapping,
            &mut conn,
            &mut self.optimizer(),
            &self.kt_options(LabelSource::Pseudo),
        )?;
        if let Err(e) = conn.close() {
            warn!("closing the teacher connection: {e}");
        }
        self.finish_arm(prep, LabelSource::Pseudo, &result)
    }

    /// Scores a checkpoint on the online stream and writes `<out>/k<K>/evaluate/<name>/`.
    pub fn evaluate(&self, prep: &Prepared, checkpoint: &Path, side: Side) -> Result<MetricsReport, ExpError> {
        let (arch, samples, truth, names) = match side {
            Side::Teacher => (
                self.teacher_arch(prep)
                    .ok_or_else(|| ExpError::invalid("the oracle teacher has no checkpoint to evaluate"))?,
                prep.splits.stream.teacher_view(),
                prep.teacher_truth(),
                prep.mapping.teacher_classes(),
            ),
            Side::Student => (
                self.student_arch(prep),
                prep.splits.stream.student_view(),
                prep.student_truth(),
                prep.mapping.student_classes(),
            ),
        };
        let model = load_checkpoint_expecting(checkpoint, &arch)?;
        let cm = ktedge_core::kt::evaluate(&model, samples, truth).map_err(|e: KtError| ExpError::from(e))?;
        let rep = report(&cm)?.with_class_names(names);
        let stem = checkpoint.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "model".into());
        let dir = k_dir(&self.out, prep.k).join("evaluate").join(stem);
        create_dir(&dir)?;
        write_report(&dir, &rep, cm.counts())?;
        Ok(rep)
    }
}

/// Every stage for every configured class count (or just `only`), then the summaries.
pub fn run_experiment(exp: &mut Experiment, only: Option<usize>) -> Result<Vec<KSummary>, ExpError> {
    let mut summaries = Vec::new();
    let mut comparisons = Vec::new();
    for k in exp.class_counts(only)? {
        let prep = exp.prepare(k)?;
        let teacher_ol_accuracy = exp.pretrain(&prep)?;
        exp.semitrain(&prep)?;
        let arms = exp.config.arms.clone();
        let arms = arms.into_iter().map(|arm| exp.run_arm(&prep, arm)).collect::<Result<Vec<_>, _>>()?;
        if let Some(c) = exp.compare_k(k)? {
            comparisons.push((k, c));
        }
        summaries.push(KSummary { k, teacher_ol_accuracy, arms });
    }
    write_summary(&exp.out, &summaries)?;
    if !comparisons.is_empty() {
        write_rows(&exp.out, &comparisons)?;
    }
    Ok(summaries)
}

fn write_summary(out: &Path, summaries: &[KSummary]) -> Result<(), ExpError> {
    let mut w = csv::Writer::from_path(out.join("summary.csv")).map_err(|e| ExpError::Runtime(e.to_string()))?;
    let rt = |e: csv::Error| ExpError::Runtime(e.to_string());
    w.write_record(["k", "arm", "steps", "accuracy", "macro_f1", "stop_reason", "teacher_correctness", "teacher_ol_accuracy"])
        .map_err(rt)?;
    let opt = |v: Option<f64>| v.map(format_sig6).unwrap_or_default();
    for s in summaries {
        for a in &s.arms {
            w.write_record([
                s.k.to_string(),
                a.arm.clone(),
                a.steps.to_string(),
                opt(a.accuracy),
                opt(a.macro_f1),
                a.stop_reason.clone(),
                opt(a.teacher_correctness),
                format_sig6(s.teacher_ol_accuracy),
            ])
            .map_err(rt)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::TeacherKind;
    use ktedge_core::data::LabeledExample;
    use ktedge_core::Tensor;

    fn ds(labels: &[usize]) -> Dataset {
        let examples = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| LabeledExample { image: Tensor::full(vec![1, 1, 1], i as f32), label: l })
            .collect();
        Dataset::new(examples, vec!["a".into(), "b".into()], [1, 1, 1]).unwrap()
    }

    #[test]
    fn shared_split_takes_leading_examples_per_class() {
        let (t, s) = split_shared(&ds(&[0, 1, 0, 0, 1, 1, 0]), 2).unwrap();
        let ids = |d: &Dataset| d.examples.iter().map(|e| e.image.data()[0] as usize).collect::<Vec<_>>();
        assert_eq!(ids(&t), vec![0, 1, 2, 4]);
        assert_eq!(ids(&s), vec![3, 5, 6]);
        assert_eq!(s.class_counts(), vec![2, 1]);
    }

    #[test]
    fn architecture_from_kind() {
        assert_eq!(
            architecture(&ModelKind::Mlp { hidden: 5 }, [4, 4, 2], 3),
            Architecture::Mlp { input_dim: 32, hidden: 5, classes: 3 }
        );
        assert_eq!(
            architecture(&ModelKind::Squeezenet, [28, 28, 1], 2).param_count(),
            7866
        );
    }

    #[test]
    fn teacher_kind_oracle_has_no_architecture() {
        assert!(TeacherKind::Oracle.model().is_none());
    }
}
