//! Spearman rank correlation with average ranks for ties.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::analysis::AnalysisError;
use crate::io::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    pub rho: f64,
    pub p: f64,
}

/// 1-based ranks; tied values share the mean of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        // Positions start..end hold ranks start+1..=end.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

fn check(x: &[f64], y: &[f64]) -> Result<(), AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { x: x.len(), y: y.len() });
    }
    if x.len() < 3 {
        return Err(AnalysisError::TooFewPoints(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    Ok(())
}

/// Two-sided p-value of a rank correlation from the t approximation with
/// `n - 2` degrees of freedom.
pub fn t_approx_p(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    (2.0 * dist.sf(t.abs())).min(1.0)
}

/// Rank correlation; a constant input has no ranking and yields `rho = 0, p = 1`.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, AnalysisError> {
    check(x, y)?;
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let rho = pearson(&rx, &ry);
    let p = if rho == 0.0 { 1.0 } else { t_approx_p(rho, x.len()) };
    Ok(Correlation { rho, p })
}

/// Spearman's rho with a permutation p-value: the share of `permutations`
/// seeded shuffles of `y` whose |rho| reaches the observed one (with the
/// usual +1 correction).
pub fn spearman_permutation(x: &[f64], y: &[f64], permutations: usize, seed: u64) -> Result<Correlation, AnalysisError> {
    check(x, y)?;
    let (rx, mut ry) = (average_ranks(x), average_ranks(y));
    let rho = pearson(&rx, &ry);
    let mut rng = SplitMix64::new(seed);
    let mut extreme = 0usize;
    for _ in 0..permutations {
        let len = ry.len();
        rng.partial_shuffle(&mut ry, len);
        if pearson(&rx, &ry).abs() >= rho.abs() - 1e-12 {
            extreme += 1;
        }
    }
    Ok(Correlation { rho, p: (extreme + 1) as f64 / (permutations + 1) as f64 })
}
