//! On-disk layout of an experiment.
//!
//! ```text
//! <out>/config.json                 effective config
//! <out>/summary.csv                 one row per (k, arm)
//! <out>/offsets.csv, per_class_f1.csv, plot_data.csv   all k, when both arms ran
//! <out>/k<K>/manifest.json          completed stages
//! <out>/k<K>/config.json
//! <out>/k<K>/teacher/               teacher.ktck, history.json, report.{csv,json}
//! <out>/k<K>/student/               semitrained.ktck, history.json
//! <out>/k<K>/{expected,actual}/     config.json, student.ktck, trace.csv, report.{csv,json},
//!                                   cases.json, run.json, records.csv
//! <out>/k<K>/comparison/            offsets.csv, per_class_f1.csv, plot_data.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ktedge_core::kt::{LabelSource, RunResult};
use ktedge_core::metrics::{format_sig6, report, write_json, write_report_csv, write_trace_csv, MetricsReport};
use ktedge_core::models::{save_checkpoint, EpochStats, FitOutcome};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ExpError;

pub fn k_dir(out: &Path, k: usize) -> PathBuf {
    out.join(format!("k{k}"))
}

pub fn arm_name(arm: LabelSource) -> &'static str {
    match arm {
        LabelSource::GroundTruth => "expected",
        LabelSource::Pseudo => "actual",
    }
}

pub fn create_dir(p: &Path) -> Result<(), ExpError> {
    fs::create_dir_all(p).map_err(|e| ExpError::Runtime(format!("cannot create {}: {e}", p.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ExpError> {
    fs::write(path, text).map_err(|e| ExpError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, ExpError> {
    let text =
        fs::read_to_string(path).map_err(|e| ExpError::Runtime(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ExpError::Runtime(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: Value,
    pub stages: Vec<String>,
}

impl Manifest {
    pub fn path(kdir: &Path) -> PathBuf {
        kdir.join("manifest.json")
    }

    /// Loads the manifest, or starts a new one when the directory has none.
    /// A manifest written under a different config is an error.
    pub fn open(kdir: &Path, config: &Value) -> Result<Self, ExpError> {
        let path = Self::path(kdir);
        if !path.exists() {
            return Ok(Self { config: config.clone(), stages: Vec::new() });
        }
        let m: Manifest = read_json(&path)?;
        if &m.config != config {
            return Err(ExpError::StageOrder(format!(
                "{} was written for a different config; use a fresh --out directory",
                kdir.display()
            )));
        }
        Ok(m)
    }

    pub fn has(&self, stage: &str) -> bool {
        self.stages.iter().any(|s| s == stage)
    }

    pub fn require(&self, stage: &str, kdir: &Path) -> Result<(), ExpError> {
        if self.has(stage) {
            Ok(())
        } else {
            Err(ExpError::StageOrder(format!(
                "{} has no completed `{stage}` stage; run `ktedge {stage}` first",
                kdir.display()
            )))
        }
    }

    pub fn mark(&mut self, kdir: &Path, stage: &str) -> Result<(), ExpError> {
        if !self.has(stage) {
            self.stages.push(stage.to_string());
        }
        write_json(self, Self::path(kdir))?;
        Ok(())
    }
}

pub fn write_history<T>(dir: &Path, outcome: &FitOutcome<T>) -> Result<(), ExpError> {
    #[derive(Serialize)]
    struct History<'a> {
        history: &'a [EpochStats],
        best_epoch: usize,
        best_monitored: f64,
        optimizer_steps: u64,
        train_size: usize,
        validation_size: usize,
    }
    write_json(
        &History {
            history: &outcome.history,
            best_epoch: outcome.best.epoch,
            best_monitored: outcome.best.monitored,
            optimizer_steps: outcome.optimizer_steps,
            train_size: outcome.train_size,
            validation_size: outcome.validation_size,
        },
        dir.join("history.json"),
    )?;
    Ok(())
}

pub fn write_report(dir: &Path, rep: &MetricsReport, confusion: &[Vec<u64>]) -> Result<(), ExpError> {
    write_report_csv(rep, dir.join("report.csv"))?;
    write_json(&json!({ "report": rep, "confusion": confusion }), dir.join("report.json"))?;
    Ok(())
}

/// Reads the exact report stored next to the CSV.
pub fn read_report(dir: &Path) -> Result<MetricsReport, ExpError> {
    let v: Value = read_json(&dir.join("report.json"))?;
    serde_json::from_value(v["report"].clone())
        .map_err(|e| ExpError::Runtime(format!("{}: {e}", dir.join("report.json").display())))
}

/// Writes everything one online run produced into `dir`.
pub fn write_arm(
    dir: &Path,
    arm: LabelSource,
    result: &RunResult,
    class_names: &[String],
    config: &Value,
) -> Result<Option<MetricsReport>, ExpError> {
    create_dir(dir)?;
    write_json(config, dir.join("config.json"))?;
    save_checkpoint(&result.student, dir.join("student.ktck"))?;
    write_trace_csv(&result.trace, dir.join("trace.csv"))?;
    let rep = match result.confusion() {
        Some(cm) if cm.total() > 0 => {
            let rep = report(&cm)?.with_class_names(class_names);
            write_report(dir, &rep, cm.counts())?;
            Some(rep)
        }
        _ => None,
    };
    write_json(
        &json!({
            "case1": result.cases.case1,
            "case2": result.cases.case2,
            "case3": result.cases.case3,
            "case4": result.cases.case4,
            "total": result.cases.total(),
            "teacher_correctness": result.cases.teacher_correctness(),
        }),
        dir.join("cases.json"),
    )?;
    write_json(
        &json!({
            "arm": arm_name(arm),
            "label_source": arm.to_string(),
            "steps": result.steps(),
            "stop_reason": result.stop_reason,
            "accuracy_is_proxy": result.accuracy_is_proxy,
        }),
        dir.join("run.json"),
    )?;
    let mut w = csv::Writer::from_path(dir.join("records.csv")).map_err(|e| ExpError::Runtime(e.to_string()))?;
    w.write_record(["step", "teacher_prediction", "pseudo_label", "student_prediction", "ground_truth", "case", "loss"])
        .map_err(|e| ExpError::Runtime(e.to_string()))?;
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &result.records {
        w.write_record([
            r.step.to_string(),
            opt(r.teacher_prediction),
            r.pseudo_label.to_string(),
            r.student_prediction.to_string(),
            opt(r.ground_truth),
            r.case.map(|c| c.number().to_string()).unwrap_or_default(),
            format_sig6(r.loss),
        ])
        .map_err(|e| ExpError::Runtime(e.to_string()))?;
    }
    w.flush()?;
    Ok(rep)
}
