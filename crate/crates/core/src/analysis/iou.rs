use crate::analysis::AnalysisError;
use crate::types::{ClassGroup, ClassId, ClassMask};

/// Intersection over union of the pixel sets selected by `member` in each
/// mask. Both sets empty counts as perfect agreement (1.0).
fn iou_by(pred: &ClassMask, label: &ClassMask, member: impl Fn(u8) -> bool) -> Result<f64, AnalysisError> {
    if !pred.same_dims(label) {
        return Err(AnalysisError::DimensionMismatch { pred: (pred.width(), pred.height()), label: (label.width(), label.height()) });
    }
    let (mut inter, mut union) = (0usize, 0usize);
    for (&p, &l) in pred.pixels().iter().zip(label.pixels()) {
        let (a, b) = (member(p), member(l));
        inter += (a && b) as usize;
        union += (a || b) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

pub fn class_iou(pred: &ClassMask, label: &ClassMask, class: ClassId) -> Result<f64, AnalysisError> {
    iou_by(pred, label, |p| p == class.get())
}

/// IoU where any member class counts: a lane pixel predicted as a different
/// lane class still intersects.
pub fn group_iou(pred: &ClassMask, label: &ClassMask, group: &ClassGroup) -> Result<f64, AnalysisError> {
    iou_by(pred, label, |p| group.contains(ClassId(p)))
}
