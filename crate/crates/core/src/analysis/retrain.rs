//! Retraining-subset selection by SA level.
//!
//! `High` samples from the top 30% of images by descending SA, `Low` from the
//! bottom 30%, `Random` from everything. Sizes are fractions of a base
//! training-set size: small 10%, medium 20%, large 30%.

use std::fmt;
use std::str::FromStr;

use crate::analysis::AnalysisError;
use crate::io::rng::SplitMix64;

pub const POOL_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaLevel {
    High,
    Low,
    Random,
}

impl FromStr for SaLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" | "h" => Ok(SaLevel::High),
            "low" | "l" => Ok(SaLevel::Low),
            "random" | "r" => Ok(SaLevel::Random),
            o => Err(format!("unknown SA level `{o}` (expected high, low or random)")),
        }
    }
}

impl fmt::Display for SaLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SaLevel::High => "high",
            SaLevel::Low => "low",
            SaLevel::Random => "random",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsetSize {
    Small,
    Medium,
    Large,
    Count(usize),
}

impl SubsetSize {
    pub fn fraction(self) -> Option<f64> {
        match self {
            SubsetSize::Small => Some(0.1),
            SubsetSize::Medium => Some(0.2),
            SubsetSize::Large => Some(0.3),
            SubsetSize::Count(_) => None,
        }
    }

    /// Image count for this size relative to a base training set.
    pub fn count(self, base: usize) -> usize {
        match self {
            SubsetSize::Count(c) => c,
            s => (s.fraction().unwrap() * base as f64 + 1e-9).floor() as usize,
        }
    }
}

impl FromStr for SubsetSize {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "small" | "s" => Ok(SubsetSize::Small),
            "medium" | "m" => Ok(SubsetSize::Medium),
            "large" | "l" => Ok(SubsetSize::Large),
            o => o.parse().map(SubsetSize::Count).map_err(|_| format!("unknown subset size `{o}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrainSelection {
    pub level: SaLevel,
    pub size: SubsetSize,
    pub image_ids: Vec<String>,
}

/// Images ordered for a level: descending SA for `High`, ascending for `Low`
/// and `Random`; ties by image id.
fn ranked(scores: &[(String, f64)], level: SaLevel) -> Vec<&(String, f64)> {
    let mut v: Vec<&(String, f64)> = scores.iter().collect();
    v.sort_by(|a, b| {
        let by_sa = if level == SaLevel::High { b.1.total_cmp(&a.1) } else { a.1.total_cmp(&b.1) };
        by_sa.then_with(|| a.0.cmp(&b.0))
    });
    v
}

pub fn pool_size(level: SaLevel, n: usize) -> usize {
    match level {
        SaLevel::Random => n,
        _ => ((POOL_FRACTION * n as f64 + 1e-9).floor() as usize).min(n),
    }
}

/// The candidate pool for a level, in rank order.
pub fn pool(scores: &[(String, f64)], level: SaLevel) -> Vec<String> {
    let size = pool_size(level, scores.len());
    ranked(scores, level).into_iter().take(size).map(|(id, _)| id.clone()).collect()
}

/// Uniform sample of `size` images without replacement from the level's pool.
/// The result is listed in pool rank order.
pub fn select_retrain(
    scores: &[(String, f64)],
    level: SaLevel,
    size: SubsetSize,
    base: usize,
    seed: u64,
) -> Result<RetrainSelection, AnalysisError> {
    if scores.iter().any(|(_, sa)| !sa.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let pool = pool(scores, level);
    let count = size.count(base);
    if count > pool.len() {
        return Err(AnalysisError::CountExceedsPool { count, pool: pool.len() });
    }
    let mut positions: Vec<usize> = (0..pool.len()).collect();
    SplitMix64::new(seed).partial_shuffle(&mut positions, count);
    let mut chosen = positions[..count].to_vec();
    chosen.sort_unstable();
    Ok(RetrainSelection { level, size, image_ids: chosen.into_iter().map(|i| pool[i].clone()).collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(n: usize) -> Vec<(String, f64)> {
        (0..n).map(|i| (format!("img{i:03}"), ((i * 37) % n) as f64)).collect()
    }

    #[test]
    fn exhaustive_high_is_the_top_slice() {
        let s = scores(20);
        let sel = select_retrain(&s, SaLevel::High, SubsetSize::Count(6), 0, 1).unwrap();
        let mut by_sa: Vec<_> = s.clone();
        by_sa.sort_by(|a, b| b.1.total_cmp(&a.1));
        let top: Vec<String> = by_sa[..6].iter().map(|x| x.0.clone()).collect();
        assert_eq!(sel.image_ids, top);
    }

    #[test]
    fn low_pool_is_bottom_slice() {
        let s = scores(10);
        let p = pool(&s, SaLevel::Low);
        assert_eq!(p.len(), 3);
        let sas: Vec<f64> = p.iter().map(|id| s.iter().find(|x| &x.0 == id).unwrap().1).collect();
        assert_eq!(sas, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn random_is_reproducible() {
        let s = scores(50);
        let a = select_retrain(&s, SaLevel::Random, SubsetSize::Count(10), 0, 77).unwrap();
        assert_eq!(a, select_retrain(&s, SaLevel::Random, SubsetSize::Count(10), 0, 77).unwrap());
        assert_ne!(a.image_ids, select_retrain(&s, SaLevel::Random, SubsetSize::Count(10), 0, 78).unwrap().image_ids);
    }

    #[test]
    fn count_exceeds_pool() {
        let s = scores(10);
        assert!(matches!(
            select_retrain(&s, SaLevel::High, SubsetSize::Count(4), 0, 1),
            Err(AnalysisError::CountExceedsPool { count: 4, pool: 3 })
        ));
    }

    #[test]
    fn size_labels() {
        assert_eq!(SubsetSize::Large.count(16_750), 5_025);
        assert_eq!(SubsetSize::Medium.count(16_750), 3_350);
        assert_eq!(SubsetSize::Small.count(16_750), 1_675);
        assert_eq!("medium".parse::<SubsetSize>().unwrap(), SubsetSize::Medium);
        assert_eq!("12".parse::<SubsetSize>().unwrap(), SubsetSize::Count(12));
        assert_eq!("H".parse::<SaLevel>().unwrap(), SaLevel::High);
    }

    #[test]
    fn selections_stay_in_pool() {
        let s = scores(101);
        for seed in 0..20 {
            for level in [SaLevel::High, SaLevel::Low] {
                let p = pool(&s, level);
                let sel = select_retrain(&s, level, SubsetSize::Count(12), 0, seed).unwrap();
                assert_eq!(sel.image_ids.len(), 12);
                assert!(sel.image_ids.iter().all(|id| p.contains(id)));
            }
        }
    }
}
