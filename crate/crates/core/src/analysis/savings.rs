//! Labelling-savings simulation.
//!
//! For a skip fraction `f`, the `⌊f·n⌋` images with the lowest SA go
//! unlabelled (ties broken by image id). The predicted segmentation of those
//! images is accepted as is, which costs two kinds of inaccuracy: the share
//! of skipped images whose IoU is below a threshold, and the mean `1 - IoU`
//! over the skipped images.

use std::collections::HashMap;

use crate::analysis::AnalysisError;

/// IoU thresholds below which a segmentation counts as problematic.
pub const DEFAULT_THRESHOLDS: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];

/// Absorbs representation error in `f·n` (e.g. `0.29 * 100`).
const SKIP_COUNT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SavingsPoint {
    pub skip_fraction: f64,
    pub skipped: usize,
    /// `None` only when the simulation ran without thresholds.
    pub threshold: Option<f64>,
    pub classification_inaccuracy: f64,
    pub iou_inaccuracy: f64,
}

/// Number of images skipped at fraction `f` of `n`.
pub fn skip_count(f: f64, n: usize) -> usize {
    ((f * n as f64 + SKIP_COUNT_EPS).floor() as usize).min(n)
}

/// `0, step, 2·step, …` up to and including `end` (within rounding).
pub fn fraction_grid(step: f64, end: f64) -> Vec<f64> {
    let count = (end / step + 1e-9).floor() as usize;
    (0..=count).map(|i| ((i as f64 * step) * 1e12).round() / 1e12).collect()
}

/// Joins two id-keyed lists; every id must appear exactly once in each.
pub fn align(scores: &[(String, f64)], ious: &[(String, f64)]) -> Result<Vec<(String, f64, f64)>, AnalysisError> {
    let mut by_id: HashMap<&str, f64> = HashMap::with_capacity(ious.len());
    for (id, iou) in ious {
        if by_id.insert(id.as_str(), *iou).is_some() {
            return Err(AnalysisError::AlignmentError(format!("IoU listed twice for `{id}`")));
        }
    }
    if scores.len() != ious.len() {
        return Err(AnalysisError::AlignmentError(format!("{} scores vs {} IoUs", scores.len(), ious.len())));
    }
    let mut out = Vec::with_capacity(scores.len());
    for (id, sa) in scores {
        let iou =
            by_id.remove(id.as_str()).ok_or_else(|| AnalysisError::AlignmentError(format!("no IoU for `{id}` (or score listed twice)")))?;
        out.push((id.clone(), *sa, iou));
    }
    Ok(out)
}

pub fn simulate_savings(
    scores: &[(String, f64)],
    ious: &[(String, f64)],
    skip_fractions: &[f64],
    thresholds: &[f64],
) -> Result<Vec<SavingsPoint>, AnalysisError> {
    if let Some(&f) = skip_fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(AnalysisError::InvalidFraction(f));
    }
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let mut rows = align(scores, ious)?;
    if rows.iter().any(|(_, sa, iou)| !sa.is_finite() || !(0.0..=1.0).contains(iou)) {
        return Err(AnalysisError::AlignmentError("SA must be finite and IoU within [0, 1]".into()));
    }
    rows.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));

    // Running sums in skip order.
    let mut complement = Vec::with_capacity(rows.len() + 1);
    complement.push(0.0);
    for (_, _, iou) in &rows {
        complement.push(complement.last().unwrap() + (1.0 - iou));
    }
    let n = rows.len();
    let mut points = Vec::with_capacity(skip_fractions.len() * thresholds.len().max(1));
    for &f in skip_fractions {
        let k = skip_count(f, n);
        let iou_inaccuracy = if k == 0 { 0.0 } else { complement[k] / k as f64 };
        if thresholds.is_empty() {
            points.push(SavingsPoint { skip_fraction: f, skipped: k, threshold: None, classification_inaccuracy: 0.0, iou_inaccuracy });
        }
        for &t in thresholds {
            let below = rows[..k].iter().filter(|(_, _, iou)| *iou < t).count();
            let classification_inaccuracy = if k == 0 { 0.0 } else { below as f64 / k as f64 };
            points.push(SavingsPoint { skip_fraction: f, skipped: k, threshold: Some(t), classification_inaccuracy, iou_inaccuracy });
        }
    }
    Ok(points)
}
