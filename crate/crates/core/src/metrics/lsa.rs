//! Likelihood-based Surprise Adequacy over a Gaussian KDE of class traces.
//!
//! The kernel uses a diagonal bandwidth chosen per feature with Scott's rule,
//! `h_j = σ_j · m^(-1/(d_kept + 4))`. Features whose variance falls below a
//! threshold are dropped before fitting. The density is accumulated in log
//! space, so `LSA = -ln max(f̂, floor)` never sees an underflowed sum.

use std::f64::consts::TAU;

use crate::metrics::{check_query, MetricError};
use crate::par::*;
use crate::types::{ClassId, TraceMatrix};

pub const DEFAULT_VAR_THRESHOLD: f64 = 1e-5;
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct LsaModel {
    class: ClassId,
    var_mask: Vec<bool>,
    kept: Vec<usize>,
    bandwidth: Vec<f64>,
    density_floor: f64,
    m: usize,
    traces: Vec<f64>,
    // Derived from the bandwidth.
    inv_two_h2: Vec<f64>,
    log_norm: f64,
}

/// Scott's rule for one feature.
pub fn scott_bandwidth(sigma: f64, n: usize, d_kept: usize) -> f64 {
    sigma * (n as f64).powf(-1.0 / (d_kept as f64 + 4.0))
}

pub fn fit_lsa(traces: &TraceMatrix, class: ClassId, var_threshold: f64) -> Result<LsaModel, MetricError> {
    let (n, d) = (traces.n(), traces.d());
    if n < 2 {
        return Err(MetricError::TooFewTraces { n, min: 2 });
    }
    let mut mean = vec![0.0; d];
    for row in traces.rows() {
        mean.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
    mean.iter_mut().for_each(|v| *v /= n as f64);
    let mut var = vec![0.0; d];
    for row in traces.rows() {
        var.iter_mut().zip(row.iter().zip(&mean)).for_each(|(a, (v, m))| *a += (v - m) * (v - m));
    }
    var.iter_mut().for_each(|v| *v /= (n - 1) as f64);

    let var_mask: Vec<bool> = var.iter().map(|&v| v >= var_threshold && v > 0.0).collect();
    let kept: Vec<usize> = (0..d).filter(|&j| var_mask[j]).collect();
    if kept.is_empty() {
        return Err(MetricError::AllFeaturesFiltered);
    }
    let bandwidth: Vec<f64> = kept.iter().map(|&j| scott_bandwidth(var[j].sqrt(), n, kept.len())).collect();
    let mut retained = Vec::with_capacity(n * kept.len());
    for row in traces.rows() {
        retained.extend(kept.iter().map(|&j| row[j]));
    }
    let retained = TraceMatrix::from_flat(n, kept.len(), retained).expect("subset of a valid matrix");
    LsaModel::from_parts(class, var_mask, bandwidth, DEFAULT_DENSITY_FLOOR, &retained)
}

impl LsaModel {
    /// `traces` holds the retained (already filtered) features, one row per
    /// stored trace.
    pub fn from_parts(
        class: ClassId,
        var_mask: Vec<bool>,
        bandwidth: Vec<f64>,
        density_floor: f64,
        traces: &TraceMatrix,
    ) -> Result<Self, MetricError> {
        let kept: Vec<usize> = (0..var_mask.len()).filter(|&j| var_mask[j]).collect();
        if kept.is_empty() {
            return Err(MetricError::AllFeaturesFiltered);
        }
        if bandwidth.len() != kept.len() {
            return Err(MetricError::DimensionMismatch { expected: kept.len(), found: bandwidth.len() });
        }
        if traces.d() != kept.len() {
            return Err(MetricError::DimensionMismatch { expected: kept.len(), found: traces.d() });
        }
        if traces.n() < 2 {
            return Err(MetricError::TooFewTraces { n: traces.n(), min: 2 });
        }
        if bandwidth.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(MetricError::InvalidModel("bandwidth entries must be positive and finite".into()));
        }
        if !(density_floor > 0.0 && density_floor.is_finite()) {
            return Err(MetricError::InvalidModel("density floor must be positive".into()));
        }
        let inv_two_h2 = bandwidth.iter().map(|h| 1.0 / (2.0 * h * h)).collect();
        let log_norm = -bandwidth.iter().map(|h| h.ln()).sum::<f64>() - 0.5 * kept.len() as f64 * TAU.ln();
        Ok(LsaModel {
            class,
            var_mask,
            kept,
            bandwidth,
            density_floor,
            m: traces.n(),
            traces: traces.as_slice().to_vec(),
            inv_two_h2,
            log_norm,
        })
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    /// Length of the queries this model accepts.
    pub fn d(&self) -> usize {
        self.var_mask.len()
    }

    pub fn d_kept(&self) -> usize {
        self.kept.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn var_mask(&self) -> &[bool] {
        &self.var_mask
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn density_floor(&self) -> f64 {
        self.density_floor
    }

    /// Retained traces, `m x d_kept` row-major.
    pub fn traces(&self) -> &[f64] {
        &self.traces
    }

    /// `ln f̂(x)` for a full-length query.
    pub fn log_density(&self, trace: &[f64]) -> Result<f64, MetricError> {
        check_query(trace, self.d())?;
        Ok(self.log_density_unchecked(trace))
    }

    fn log_density_unchecked(&self, trace: &[f64]) -> f64 {
        let dk = self.kept.len();
        let x: Vec<f64> = self.kept.iter().map(|&j| trace[j]).collect();
        // Streaming log-sum-exp over kernel exponents.
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for t in self.traces.chunks_exact(dk) {
            let e: f64 = -t
                .iter()
                .zip(&x)
                .zip(&self.inv_two_h2)
                .map(|((ti, xi), w)| {
                    let diff = xi - ti;
                    diff * diff * w
                })
                .sum::<f64>();
            if e <= max {
                sum += (e - max).exp();
            } else {
                sum = sum * (max - e).exp() + 1.0;
                max = e;
            }
        }
        self.log_norm + max + sum.ln() - (self.m as f64).ln()
    }

    /// `-ln max(f̂(x), density_floor)`.
    pub fn score(&self, trace: &[f64]) -> Result<f64, MetricError> {
        check_query(trace, self.d())?;
        Ok(self.score_unchecked(trace))
    }

    fn score_unchecked(&self, trace: &[f64]) -> f64 {
        -self.log_density_unchecked(trace).max(self.density_floor.ln())
    }

    pub fn score_batch(&self, traces: &TraceMatrix) -> Result<Vec<f64>, MetricError> {
        if traces.d() != self.d() {
            return Err(MetricError::DimensionMismatch { expected: self.d(), found: traces.d() });
        }
        let rows: Vec<&[f64]> = traces.rows().collect();
        Ok(rows.par_iter().map(|r| self.score_unchecked(r)).collect())
    }

    pub fn score_batch_seq(&self, traces: &TraceMatrix) -> Result<Vec<f64>, MetricError> {
        if traces.d() != self.d() {
            return Err(MetricError::DimensionMismatch { expected: self.d(), found: traces.d() });
        }
        Ok(traces.rows().map(|r| self.score_unchecked(r)).collect())
    }
}
