//! IoU, SA-vs-IoU correlation, labelling-savings curves and retraining
//! selection, plus their CSV reports.

use std::io::Write;

use thiserror::Error;

pub mod iou;
pub mod retrain;
pub mod savings;
pub mod spearman;

pub use iou::{class_iou, group_iou};
pub use retrain::{select_retrain, RetrainSelection, SaLevel, SubsetSize};
pub use savings::{simulate_savings, SavingsPoint, DEFAULT_THRESHOLDS};
pub use spearman::{spearman, spearman_permutation, Correlation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("mask dimensions differ: prediction {pred:?}, label {label:?}")]
    DimensionMismatch { pred: (u32, u32), label: (u32, u32) },
    #[error("length mismatch: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite input")]
    NonFinite,
    #[error("scores and IoUs do not align: {0}")]
    AlignmentError(String),
    #[error("skip fraction {0} outside [0, 1]")]
    InvalidFraction(f64),
    #[error("requested {count} images but the pool holds {pool}")]
    CountExceedsPool { count: usize, pool: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub target: String,
    pub n_images: usize,
    pub rho: f64,
    pub p: f64,
}

/// `class_or_group,n_images,rho,p`
pub fn write_correlation_csv<W: Write>(out: W, rows: &[CorrelationRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class_or_group", "n_images", "rho", "p"])?;
    for r in rows {
        w.write_record([r.target.clone(), r.n_images.to_string(), crate::fmt_num(r.rho), crate::fmt_num(r.p)])?;
    }
    w.flush()?;
    Ok(())
}

/// `class_or_group,skip_fraction,threshold,inaccuracy`: per skip fraction one
/// classification row per threshold, then one `iou` row.
pub fn write_curves_csv<W: Write>(out: W, curves: &[(String, Vec<SavingsPoint>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class_or_group", "skip_fraction", "threshold", "inaccuracy"])?;
    for (target, points) in curves {
        let mut i = 0;
        while i < points.len() {
            let f = points[i].skip_fraction;
            let mut j = i;
            while j < points.len() && points[j].skip_fraction.to_bits() == f.to_bits() {
                if let Some(t) = points[j].threshold {
                    w.write_record([
                        target.clone(),
                        crate::fmt_num(f),
                        crate::fmt_num(t),
                        crate::fmt_num(points[j].classification_inaccuracy),
                    ])?;
                }
                j += 1;
            }
            w.write_record([target.clone(), crate::fmt_num(f), "iou".to_string(), crate::fmt_num(points[i].iou_inaccuracy)])?;
            i = j;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_rows_cardinality() {
        let scores: Vec<(String, f64)> = (0..20).map(|i| (format!("i{i}"), i as f64)).collect();
        let ious: Vec<(String, f64)> = (0..20).map(|i| (format!("i{i}"), (i as f64) / 20.0)).collect();
        let fractions = savings::fraction_grid(0.1, 0.9);
        let points = simulate_savings(&scores, &ious, &fractions, &DEFAULT_THRESHOLDS).unwrap();
        let mut buf = Vec::new();
        write_curves_csv(&mut buf, &[("road".into(), points)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "class_or_group,skip_fraction,threshold,inaccuracy");
        assert_eq!(lines.len() - 1, 10 * 5 + 10);
        assert_eq!(lines.iter().filter(|l| l.contains(",iou,")).count(), 10);
        assert_eq!(lines[1], "road,0,0.5,0");
    }

    #[test]
    fn correlation_csv_layout() {
        let mut buf = Vec::new();
        write_correlation_csv(&mut buf, &[CorrelationRow { target: "vehicle".into(), n_images: 300, rho: -0.5, p: 1e-20 }]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "class_or_group,n_images,rho,p\nvehicle,300,-0.5,1e-20\n");
    }
}
