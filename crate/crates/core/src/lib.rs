//! Surprise Adequacy for semantic segmentation.
//!
//! Fits per-class SA models over pixel activation traces (ATs), scores new
//! images, and turns the scores into labelling decisions:
//!
//! * [`metrics`]: likelihood-based SA (Gaussian KDE, [`metrics::LsaModel`]) and
//!   Mahalanobis-distance SA ([`metrics::MdsaModel`]), plus the `SAM1` model file.
//! * [`io`]: the `ATRC` trace tensor format, binary PGM masks, JSON manifests and
//!   the seeded pixel sampler.
//! * [`aggregate`]: pixel SA to image class SA, z-scored class-group SA.
//! * [`analysis`]: IoU, Spearman correlation, labelling-savings curves and
//!   retraining-subset selection.
//! * [`heatmap`]: grayscale SA heatmaps.
//! * [`pipeline`]: the fit / score / analyse workflow over a manifest.
//!
//! Batch work runs on rayon when the `parallel` feature is enabled (default) and
//! falls back to plain iterators otherwise; results are identical either way.

pub mod aggregate;
pub mod analysis;
pub mod heatmap;
pub mod io;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod synth;
pub mod types;

pub use types::{ClassGroup, ClassId, ClassMask, ClassSet, IouRecord, PixelSample, ScoreRecord, TraceMatrix};

/// Shortest round-trip decimal for CSV output; switches to exponent form for
/// very small or very large magnitudes.
pub(crate) fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}
