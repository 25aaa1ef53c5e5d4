//! Mahalanobis-distance Surprise Adequacy.
//!
//! Fitting caches the class mean and the inverse of the ridge-regularised
//! sample covariance, so scoring a trace is a single `O(d²)` quadratic form.

use crate::metrics::linalg::{cholesky, is_symmetric, spd_inverse};
use crate::metrics::{check_query, MetricError, FIT_CHUNK_ROWS};
use crate::par::*;
use crate::types::{ClassId, TraceMatrix};

/// Relative ridge applied to the covariance diagonal, scaled by its mean variance.
pub const RIDGE_SCALE: f64 = 1e-6;
/// Lower bound on the ridge so degenerate (constant) classes stay invertible.
pub const RIDGE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MdsaModel {
    class: ClassId,
    d: usize,
    mu: Vec<f64>,
    s_inv: Vec<f64>,
    shrinkage_lambda: f64,
    n_fit: u64,
}

/// Ridge for a covariance with the given trace: `max(1e-6 * trace / d, 1e-12)`.
pub fn ridge_lambda(trace: f64, d: usize) -> f64 {
    (RIDGE_SCALE * trace / d as f64).max(RIDGE_FLOOR)
}

pub fn fit_mdsa(traces: &TraceMatrix, class: ClassId) -> Result<MdsaModel, MetricError> {
    let (n, d) = (traces.n(), traces.d());
    if n < 2 {
        return Err(MetricError::TooFewTraces { n, min: 2 });
    }
    let data = traces.as_slice();

    // Partial sums over fixed-size row chunks, merged in chunk order, so the
    // result does not depend on the thread count.
    let chunks: Vec<&[f64]> = data.chunks(FIT_CHUNK_ROWS * d).collect();
    let sums: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut s = vec![0.0; d];
            for row in chunk.chunks_exact(d) {
                s.iter_mut().zip(row).for_each(|(a, v)| *a += v);
            }
            s
        })
        .collect();
    let mut mu = vec![0.0; d];
    for s in &sums {
        mu.iter_mut().zip(s).for_each(|(a, v)| *a += v);
    }
    mu.iter_mut().for_each(|v| *v /= n as f64);

    let partial: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|chunk| {
            let mut acc = vec![0.0; d * d];
            let mut diff = vec![0.0; d];
            for row in chunk.chunks_exact(d) {
                diff.iter_mut().zip(row.iter().zip(&mu)).for_each(|(o, (x, m))| *o = x - m);
                for i in 0..d {
                    let di = diff[i];
                    let acc_row = &mut acc[i * d..i * d + i + 1];
                    acc_row.iter_mut().zip(&diff[..=i]).for_each(|(a, dj)| *a += di * dj);
                }
            }
            acc
        })
        .collect();
    let mut cov = vec![0.0; d * d];
    for p in &partial {
        cov.iter_mut().zip(p).for_each(|(a, v)| *a += v);
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let v = cov[i * d + j] / denom;
            cov[i * d + j] = v;
            cov[j * d + i] = v;
        }
    }
    MdsaModel::from_covariance(class, mu, &cov, n as u64)
}

impl MdsaModel {
    /// Regularises `cov` with [`ridge_lambda`] and caches its inverse.
    pub fn from_covariance(class: ClassId, mu: Vec<f64>, cov: &[f64], n_fit: u64) -> Result<Self, MetricError> {
        let d = mu.len();
        if d == 0 || cov.len() != d * d {
            return Err(MetricError::DimensionMismatch { expected: d * d, found: cov.len() });
        }
        if mu.iter().chain(cov).any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        let trace: f64 = (0..d).map(|i| cov[i * d + i]).sum();
        let lambda = ridge_lambda(trace, d);
        let mut reg = cov.to_vec();
        for i in 0..d {
            reg[i * d + i] += lambda;
        }
        let s_inv = spd_inverse(&reg, d).ok_or(MetricError::NotPositiveDefinite)?;
        Self::from_parts(class, mu, s_inv, lambda, n_fit)
    }

    /// Assembles a model from stored parts, checking the inverse covariance
    /// is symmetric and positive definite.
    pub fn from_parts(class: ClassId, mu: Vec<f64>, s_inv: Vec<f64>, shrinkage_lambda: f64, n_fit: u64) -> Result<Self, MetricError> {
        let d = mu.len();
        if d == 0 || s_inv.len() != d * d {
            return Err(MetricError::DimensionMismatch { expected: d * d, found: s_inv.len() });
        }
        if mu.iter().chain(&s_inv).any(|v| !v.is_finite()) || shrinkage_lambda.is_nan() || shrinkage_lambda < 0.0 {
            return Err(MetricError::NonFinite);
        }
        if !is_symmetric(&s_inv, d, 1e-9) || cholesky(&s_inv, d).is_none() {
            return Err(MetricError::NotPositiveDefinite);
        }
        Ok(MdsaModel { class, d, mu, s_inv, shrinkage_lambda, n_fit })
    }

    pub fn class(&self) -> ClassId {
        self.class
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn s_inv(&self) -> &[f64] {
        &self.s_inv
    }

    pub fn shrinkage_lambda(&self) -> f64 {
        self.shrinkage_lambda
    }

    pub fn n_fit(&self) -> u64 {
        self.n_fit
    }

    /// `sqrt((x - mu)ᵀ S⁻¹ (x - mu))`.
    pub fn score(&self, trace: &[f64]) -> Result<f64, MetricError> {
        check_query(trace, self.d)?;
        Ok(self.score_unchecked(trace))
    }

    fn score_unchecked(&self, trace: &[f64]) -> f64 {
        let d = self.d;
        let mut diff = [0.0f64; 128];
        let mut heap;
        let diff: &mut [f64] = if d <= diff.len() {
            &mut diff[..d]
        } else {
            heap = vec![0.0; d];
            &mut heap
        };
        diff.iter_mut().zip(trace.iter().zip(&self.mu)).for_each(|(o, (x, m))| *o = x - m);
        let q: f64 = self
            .s_inv
            .chunks_exact(d)
            .zip(diff.iter())
            .map(|(row, di)| di * row.iter().zip(diff.iter()).map(|(s, dj)| s * dj).sum::<f64>())
            .sum();
        q.max(0.0).sqrt()
    }

    /// Scores every row; rows are distributed over the thread pool when the
    /// `parallel` feature is on.
    pub fn score_batch(&self, traces: &TraceMatrix) -> Result<Vec<f64>, MetricError> {
        if traces.d() != self.d {
            return Err(MetricError::DimensionMismatch { expected: self.d, found: traces.d() });
        }
        let rows: Vec<&[f64]> = traces.rows().collect();
        Ok(rows.par_iter().map(|r| self.score_unchecked(r)).collect())
    }

    pub fn score_batch_seq(&self, traces: &TraceMatrix) -> Result<Vec<f64>, MetricError> {
        if traces.d() != self.d {
            return Err(MetricError::DimensionMismatch { expected: self.d, found: traces.d() });
        }
        Ok(traces.rows().map(|r| self.score_unchecked(r)).collect())
    }
}
