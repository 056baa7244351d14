//! Plot-ready CSV output. Floats are written in shortest round-trip form so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::eval::{ErrorSummary, Histogram};
use crate::optim::EpochRecord;

pub const LOSS_CSV: &str = "loss.csv";
pub const ERRORS_CSV: &str = "errors.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const HISTOGRAM_CSV: &str = "histogram.csv";
pub const CURVE_CSV: &str = "curve.csv";

pub fn field_csv_name(sample: usize, time: usize) -> String {
    format!("field_{sample}_{time}.csv")
}

pub fn loss_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,lr,rmsd\n");
    for r in history {
        let _ = writeln!(s, "{},{},{}", r.epoch, r.lr, r.rmsd);
    }
    s
}

pub fn errors_csv(sample_ids: &[usize], errors: &[f64]) -> String {
    let mut s = String::from("sample_id,l2_error\n");
    for (id, e) in sample_ids.iter().zip(errors) {
        let _ = writeln!(s, "{id},{e}");
    }
    s
}

/// Standard deviation is the population (1/N) form, as the header says.
pub fn summary_csv(summary: &ErrorSummary) -> String {
    format!(
        "mean,std_deviation_population,median,p25,p75\n{},{},{},{},{}\n",
        summary.mean, summary.std_deviation, summary.median, summary.p25, summary.p75
    )
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("bin_left,bin_right,count\n");
    for (lo, hi, c) in h.bins() {
        let _ = writeln!(s, "{lo},{hi},{c}");
    }
    s
}

/// One row of a probed field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldRow {
    pub x: f64,
    pub y: f64,
    pub truth: f64,
    pub prediction: f64,
}

impl FieldRow {
    pub fn abs_error(&self) -> f64 {
        (self.truth - self.prediction).abs()
    }
}

pub fn field_csv(rows: &[FieldRow]) -> String {
    let mut s = String::from("x,y,truth,prediction,abs_error\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{},{}", r.x, r.y, r.truth, r.prediction, r.abs_error());
    }
    s
}

/// Curve fits: `(x, truth, prediction)` per sample.
pub fn curve_csv(points: &[(f64, f64, f64)]) -> String {
    let mut s = String::from("x,truth,prediction,abs_error\n");
    for &(x, t, p) in points {
        let _ = writeln!(s, "{x},{t},{p},{}", (t - p).abs());
    }
    s
}

pub fn write_text(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

/// Human-readable digest of a run directory's loss and summary files.
pub fn describe_run_dir(dir: &Path) -> Result<String> {
    let read = |name: &str| {
        fs::read_to_string(dir.join(name))
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.join(name).display())))
    };
    let loss = read(LOSS_CSV)?;
    let mut out = String::new();
    let records: Vec<&str> = loss.lines().skip(1).filter(|l| !l.is_empty()).collect();
    let _ = writeln!(out, "run directory: {}", dir.display());
    let _ = writeln!(out, "epochs recorded: {}", records.len());
    if let (Some(first), Some(last)) = (records.first(), records.last()) {
        let rmsd = |line: &str| line.rsplit(',').next().unwrap_or("").to_string();
        let _ = writeln!(out, "rmsd: first {} last {}", rmsd(first), rmsd(last));
    }
    if let Ok(summary) = read(SUMMARY_CSV) {
        let mut lines = summary.lines();
        if let (Some(head), Some(vals)) = (lines.next(), lines.next()) {
            for (k, v) in head.split(',').zip(vals.split(',')) {
                let _ = writeln!(out, "{k}: {v}");
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_shapes() {
        let hist = vec![EpochRecord { epoch: 0, lr: 0.1, rmsd: 1.5 }, EpochRecord { epoch: 1, lr: 0.05, rmsd: 0.25 }];
        assert_eq!(loss_csv(&hist), "epoch,lr,rmsd\n0,0.1,1.5\n1,0.05,0.25\n");
        assert_eq!(errors_csv(&[4, 9], &[0.5, 2.0]), "sample_id,l2_error\n4,0.5\n9,2\n");
        let rows = [FieldRow { x: 0.0, y: 1.0, truth: 0.25, prediction: 1.0 }];
        assert_eq!(field_csv(&rows).lines().nth(1), Some("0,1,0.25,1,0.75"));
    }
}
