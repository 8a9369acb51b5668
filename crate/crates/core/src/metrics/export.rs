use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::metrics::{MetricsError, MetricsReport, Prf, TracePoint, TrainingTrace};

pub const REPORT_HEADER: [&str; 4] = ["class", "precision", "recall", "f1"];
pub const TRACE_HEADER: [&str; 3] = ["step", "rolling_accuracy", "rolling_loss"];

/// Decimal text with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn writer(path: &Path) -> Result<csv::Writer<File>, MetricsError> {
    csv::Writer::from_path(path).map_err(|source| MetricsError::Csv { path: path_str(path), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> MetricsError + '_ {
    move |source| MetricsError::Csv { path: path_str(path), source }
}

/// Per-class rows, then `micro`, `macro` and `accuracy` summary rows.
pub fn write_report_csv(report: &MetricsReport, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(REPORT_HEADER).map_err(csv_err(path))?;
    let row = |name: &str, p: &Prf| {
        [name.to_string(), format_sig6(p.precision), format_sig6(p.recall), format_sig6(p.f1)]
    };
    for (name, p) in report.class_names.iter().zip(&report.per_class) {
        w.write_record(row(name, p)).map_err(csv_err(path))?;
    }
    w.write_record(row("micro", &report.micro)).map_err(csv_err(path))?;
    w.write_record(row("macro", &report.macro_avg)).map_err(csv_err(path))?;
    let acc = report.accuracy;
    w.write_record(row("accuracy", &Prf { precision: acc, recall: acc, f1: acc })).map_err(csv_err(path))?;
    w.flush().map_err(|source| MetricsError::Io { path: path_str(path), source })
}

pub fn write_trace_csv(trace: &TrainingTrace, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let mut w = writer(path)?;
    w.write_record(TRACE_HEADER).map_err(csv_err(path))?;
    for p in &trace.points {
        w.write_record([p.step.to_string(), format_sig6(p.rolling_accuracy), format_sig6(p.rolling_loss)])
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| MetricsError::Io { path: path_str(path), source })
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<(), MetricsError> {
    let path = path.as_ref();
    let io = |source| MetricsError::Io { path: path_str(path), source };
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| MetricsError::Json { path: path_str(path), source })?;
    w.write_all(b"\n").map_err(io)?;
    w.flush().map_err(io)
}

fn read_rows(path: &Path, header: &[&str]) -> Result<Vec<csv::StringRecord>, MetricsError> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let found = r.headers().map_err(csv_err(path))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(MetricsError::Malformed { path: path_str(path), reason: format!("unexpected header {found:?}") });
    }
    r.records().collect::<Result<_, _>>().map_err(csv_err(path))
}

fn number<T: std::str::FromStr>(path: &Path, field: &str) -> Result<T, MetricsError> {
    field
        .parse()
        .map_err(|_| MetricsError::Malformed { path: path_str(path), reason: format!("not a number: {field:?}") })
}

/// Reads a report written by [`write_report_csv`]. Support counts are not stored in CSV and come back empty.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<MetricsReport, MetricsError> {
    let path = path.as_ref();
    let rows = read_rows(path, &REPORT_HEADER)?;
    if rows.len() < 3 {
        return Err(MetricsError::Malformed { path: path_str(path), reason: "missing summary rows".into() });
    }
    let prf = |row: &csv::StringRecord| -> Result<Prf, MetricsError> {
        Ok(Prf { precision: number(path, &row[1])?, recall: number(path, &row[2])?, f1: number(path, &row[3])? })
    };
    let (classes, summary) = rows.split_at(rows.len() - 3);
    let labels: Vec<&str> = summary.iter().map(|r| &r[0]).collect();
    if labels != ["micro", "macro", "accuracy"] {
        return Err(MetricsError::Malformed { path: path_str(path), reason: format!("summary rows {labels:?}") });
    }
    Ok(MetricsReport {
        class_names: classes.iter().map(|r| r[0].to_string()).collect(),
        per_class: classes.iter().map(prf).collect::<Result<_, _>>()?,
        micro: prf(&summary[0])?,
        macro_avg: prf(&summary[1])?,
        accuracy: number(path, &summary[2][1])?,
        support: Vec::new(),
        total: 0,
    })
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<TrainingTrace, MetricsError> {
    let path = path.as_ref();
    let rows = read_rows(path, &TRACE_HEADER)?;
    let points: Vec<TracePoint> = rows
        .iter()
        .map(|r| {
            Ok(TracePoint {
                step: number(path, &r[0])?,
                rolling_accuracy: number(path, &r[1])?,
                rolling_loss: number(path, &r[2])?,
            })
        })
        .collect::<Result<_, MetricsError>>()?;
    let interval = points.first().map_or(100, |p| p.step);
    Ok(TrainingTrace { interval, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{report, ConfusionMatrix};

    #[test]
    fn sig6() {
        assert_eq!(format_sig6(0.5), "0.500000");
        assert_eq!(format_sig6(1.0), "1.00000");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(123.456789), "123.457");
        assert_eq!(format_sig6(-2.0 / 3.0), "-0.666667");
        assert_eq!(format_sig6(0.0), "0");
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let counts: Vec<Vec<u64>> = (0..7).map(|i| (0..7).map(|j| if i == j { 20 + i } else { (i + j) % 3 }).collect()).collect();
        let r = report(&ConfusionMatrix::from_counts(counts).unwrap()).unwrap();
        let path = dir.path().join("report.csv");
        write_report_csv(&r, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 7 + 3);
        let back = read_report_csv(&path).unwrap();
        assert_eq!(back.class_names, r.class_names);
        for (a, b) in back.per_class.iter().zip(&r.per_class) {
            assert!((a.precision - b.precision).abs() < 1e-6);
            assert!((a.recall - b.recall).abs() < 1e-6);
            assert!((a.f1 - b.f1).abs() < 1e-6);
        }
        assert!((back.accuracy - r.accuracy).abs() < 1e-6);
        assert!((back.macro_avg.f1 - r.macro_avg.f1).abs() < 1e-6);
    }

    #[test]
    fn trace_round_trip_and_empty() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&TrainingTrace::new(100), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "step,rolling_accuracy,rolling_loss\n");
        let t = TrainingTrace {
            interval: 100,
            points: vec![
                TracePoint { step: 100, rolling_accuracy: 0.61, rolling_loss: 0.693147 },
                TracePoint { step: 200, rolling_accuracy: 0.87, rolling_loss: 0.3141592 },
            ],
        };
        write_trace_csv(&t, &path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        assert_eq!(back.points.len(), 2);
        for (a, b) in back.points.iter().zip(&t.points) {
            assert_eq!(a.step, b.step);
            assert!((a.rolling_accuracy - b.rolling_accuracy).abs() < 1e-6);
            assert!((a.rolling_loss - b.rolling_loss).abs() < 1e-6);
        }
    }

    #[test]
    fn json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let r = report(&ConfusionMatrix::from_counts(vec![vec![3, 1], vec![0, 4]]).unwrap()).unwrap();
        write_json(&r, &path).unwrap();
        let back: MetricsReport = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
