//! Random test instances.
#![allow(dead_code)]

use segsa::io::rng::SplitMix64;

/// `n` rows of `A z + b` with a random mixing matrix `A`, so the population
/// covariance `A A^T` is a random SPD matrix.
pub fn correlated_rows(rng: &mut SplitMix64, n: usize, d: usize) -> Vec<Vec<f64>> {
    let a: Vec<f64> = (0..d * d).map(|k| rng.next_normal() + if k % (d + 1) == 0 { 1.5 } else { 0.0 }).collect();
    let b: Vec<f64> = (0..d).map(|_| 5.0 * rng.next_normal()).collect();
    (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..d).map(|_| rng.next_normal()).collect();
            (0..d).map(|i| b[i] + (0..d).map(|k| a[i * d + k] * z[k]).sum::<f64>()).collect()
        })
        .collect()
}

/// Rows with an independent scale per feature; `constant` features are fixed.
pub fn scaled_rows(rng: &mut SplitMix64, n: usize, d: usize, constant: &[usize]) -> Vec<Vec<f64>> {
    let scale: Vec<f64> = (0..d).map(|_| 0.5 + 2.5 * rng.next_f64()).collect();
    (0..n).map(|_| (0..d).map(|j| if constant.contains(&j) { 1.25 } else { scale[j] * rng.next_normal() }).collect()).collect()
}

pub fn query_near(rng: &mut SplitMix64, rows: &[Vec<f64>], spread: f64) -> Vec<f64> {
    let base = &rows[rng.below(rows.len() as u64) as usize];
    base.iter().map(|v| v + spread * rng.next_normal()).collect()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(f64::MIN_POSITIVE)
}
