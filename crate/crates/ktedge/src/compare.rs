//! Expected-versus-actual offsets. An offset is expected minus actual.

use std::collections::BTreeMap;
use std::path::Path;

use ktedge_core::metrics::{format_sig6, read_trace_csv, MetricsReport};
use serde::Serialize;
use serde_json::Value;

use crate::artifacts::{create_dir, read_json, read_report};
use crate::ExpError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OffsetRow {
    pub metric: String,
    pub expected: f64,
    pub actual: f64,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassOffset {
    pub class: String,
    pub expected_f1: f64,
    pub actual_f1: f64,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlotRow {
    pub step: usize,
    pub expected_accuracy: Option<f64>,
    pub actual_accuracy: Option<f64>,
    pub expected_loss: Option<f64>,
    pub actual_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub classes: usize,
    pub offsets: Vec<OffsetRow>,
    pub per_class: Vec<ClassOffset>,
    pub plot: Vec<PlotRow>,
}

fn headline(r: &MetricsReport) -> [(&'static str, f64); 7] {
    [
        ("accuracy", r.accuracy),
        ("micro_precision", r.micro.precision),
        ("micro_recall", r.micro.recall),
        ("micro_f1", r.micro.f1),
        ("macro_precision", r.macro_avg.precision),
        ("macro_recall", r.macro_avg.recall),
        ("macro_f1", r.macro_avg.f1),
    ]
}

fn seed_of(dir: &Path) -> Result<Option<u64>, ExpError> {
    let path = dir.join("config.json");
    if !path.exists() {
        return Ok(None);
    }
    let v: Value = read_json(&path)?;
    Ok(v["seed"].as_u64())
}

/// Compares two run directories and, when `out` is given, writes
/// `offsets.csv`, `per_class_f1.csv` and `plot_data.csv` there.
pub fn compare(expected: &Path, actual: &Path, out: Option<&Path>) -> Result<Comparison, ExpError> {
    let (e, a) = (read_report(expected)?, read_report(actual)?);
    let mut problems = Vec::new();
    if e.per_class.len() != a.per_class.len() {
        problems.push(format!(
            "class counts differ: {} in {}, {} in {}",
            e.per_class.len(),
            expected.display(),
            a.per_class.len(),
            actual.display()
        ));
    }
    let (se, sa) = (seed_of(expected)?, seed_of(actual)?);
    if se != sa {
        problems.push(format!("seeds differ: {se:?} in {}, {sa:?} in {}", expected.display(), actual.display()));
    }
    if !problems.is_empty() {
        return Err(ExpError::Validation(problems));
    }

    let offsets = headline(&e)
        .into_iter()
        .zip(headline(&a))
        .map(|((metric, x), (_, y))| OffsetRow { metric: metric.into(), expected: x, actual: y, offset: x - y })
        .collect();
    let per_class = e
        .per_class
        .iter()
        .zip(&a.per_class)
        .enumerate()
        .map(|(i, (x, y))| ClassOffset {
            class: e.class_names.get(i).cloned().unwrap_or_else(|| i.to_string()),
            expected_f1: x.f1,
            actual_f1: y.f1,
            offset: x.f1 - y.f1,
        })
        .collect();

    let mut rows: BTreeMap<usize, PlotRow> = BTreeMap::new();
    let blank = |step| PlotRow { step, expected_accuracy: None, actual_accuracy: None, expected_loss: None, actual_loss: None };
    for p in read_trace_csv(expected.join("trace.csv"))?.points {
        let r = rows.entry(p.step).or_insert_with(|| blank(p.step));
        r.expected_accuracy = Some(p.rolling_accuracy);
        r.expected_loss = Some(p.rolling_loss);
    }
    for p in read_trace_csv(actual.join("trace.csv"))?.points {
        let r = rows.entry(p.step).or_insert_with(|| blank(p.step));
        r.actual_accuracy = Some(p.rolling_accuracy);
        r.actual_loss = Some(p.rolling_loss);
    }
    let cmp = Comparison { classes: e.per_class.len(), offsets, per_class, plot: rows.into_values().collect() };
    if let Some(out) = out {
        create_dir(out)?;
        write_tables(out, &[(None, &cmp)])?;
    }
    Ok(cmp)
}

fn opt(v: Option<f64>) -> String {
    v.map(format_sig6).unwrap_or_default()
}

fn write_tables(out: &Path, items: &[(Option<usize>, &Comparison)]) -> Result<(), ExpError> {
    let rt = |e: csv::Error| ExpError::Runtime(e.to_string());
    let with_k = items.iter().any(|(k, _)| k.is_some());
    let lead = |k: &Option<usize>, rest: Vec<String>| -> Vec<String> {
        k.iter().map(usize::to_string).chain(rest).collect()
    };
    let header = |cols: &[&str]| -> Vec<String> {
        with_k.then(|| "k".to_string()).into_iter().chain(cols.iter().map(|c| c.to_string())).collect()
    };

    let mut w = csv::Writer::from_path(out.join("offsets.csv")).map_err(rt)?;
    w.write_record(header(&["metric", "expected", "actual", "offset"])).map_err(rt)?;
    for (k, c) in items {
        for r in &c.offsets {
            let row = vec![r.metric.clone(), format_sig6(r.expected), format_sig6(r.actual), format_sig6(r.offset)];
            w.write_record(lead(k, row)).map_err(rt)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("per_class_f1.csv")).map_err(rt)?;
    w.write_record(header(&["class", "expected_f1", "actual_f1", "offset"])).map_err(rt)?;
    for (k, c) in items {
        for r in &c.per_class {
            let row = vec![r.class.clone(), format_sig6(r.expected_f1), format_sig6(r.actual_f1), format_sig6(r.offset)];
            w.write_record(lead(k, row)).map_err(rt)?;
        }
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(out.join("plot_data.csv")).map_err(rt)?;
    w.write_record(header(&[
        "step",
        "expected_rolling_accuracy",
        "actual_rolling_accuracy",
        "expected_rolling_loss",
        "actual_rolling_loss",
    ]))
    .map_err(rt)?;
    for (k, c) in items {
        for r in &c.plot {
            let row = vec![
                r.step.to_string(),
                opt(r.expected_accuracy),
                opt(r.actual_accuracy),
                opt(r.expected_loss),
                opt(r.actual_loss),
            ];
            w.write_record(lead(k, row)).map_err(rt)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The sweep-level tables: the per-k comparisons stacked with a leading `k` column.
pub fn write_rows(out: &Path, comparisons: &[(usize, Comparison)]) -> Result<(), ExpError> {
    let items: Vec<(Option<usize>, &Comparison)> = comparisons.iter().map(|(k, c)| (Some(*k), c)).collect();
    write_tables(out, &items)
}
