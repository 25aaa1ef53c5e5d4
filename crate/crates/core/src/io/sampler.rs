use crate::io::rng::SplitMix64;
use crate::types::{ClassId, ClassMask, PixelSample};

/// Samples `min(k, available)` distinct pixels of `class` uniformly without
/// replacement.
///
/// Candidates are enumerated in raster order (y, then x) and a seeded partial
/// Fisher-Yates picks the sample; the result is in selection order, so the
/// output is a pure function of `(mask, class, k, seed)`.
pub fn sample_pixels(mask: &ClassMask, class: ClassId, k: usize, seed: u64) -> Vec<PixelSample> {
    let mut candidates: Vec<u32> = mask.pixels().iter().enumerate().filter(|(_, &p)| p == class.get()).map(|(i, _)| i as u32).collect();
    let take = k.min(candidates.len());
    let mut rng = SplitMix64::new(seed);
    rng.partial_shuffle(&mut candidates, take);
    let width = mask.width();
    candidates[..take].iter().map(|&i| PixelSample { x: i % width, y: i / width, class }).collect()
}
