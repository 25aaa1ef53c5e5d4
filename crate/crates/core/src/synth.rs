//! Toy dataset generator for tests, benches and demos.
//!
//! Images are `width x height` with three horizontal bands: class 1 (`lane`),
//! class 2 (`marking`) and class 3 (`road`). Class 0 (`void`) only appears in
//! predictions. Training images have perfect predictions and traces drawn as
//! `center_c + N(0, I)`.
//!
//! Each test image draws a degradation `eps` in `[0, 1)`. Its prediction
//! relabels `round(eps * N_c)` pixels of every band as void, so the class IoU
//! is `1 - round(eps * N_c) / N_c`, and its traces are shifted by
//! `eps * shift * u_c` along a fixed unit direction per class. SA therefore
//! rises as IoU falls.

use std::path::Path;

use crate::io::atb::{write_atb, AtTensorFile};
use crate::io::manifest::{write_manifest, ClassDecl, Manifest, ManifestEntry};
use crate::io::pgm::encode_pgm;
use crate::io::rng::{derive_seed, SplitMix64};
use crate::pipeline::{write_file, PipelineError};
use crate::types::{ClassGroup, ClassId};

pub const CLASS_NAMES: [&str; 4] = ["void", "lane", "marking", "road"];
pub const GROUP_NAME: &str = "lanes";

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub width: u32,
    pub height: u32,
    pub d: usize,
    pub shift: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { seed: 7, n_train: 40, n_test: 300, width: 16, height: 16, d: 8, shift: 3.0 }
    }
}

/// One generated image, before it is written out.
#[derive(Debug, Clone)]
pub struct SynthImage {
    pub image_id: String,
    pub eps: f64,
    pub label: Vec<u8>,
    pub pred: Vec<u8>,
    pub traces: Vec<f32>,
}

fn band(y: u32, height: u32) -> u8 {
    let quarter = height / 4;
    if y < quarter {
        1
    } else if y < 2 * quarter {
        2
    } else {
        3
    }
}

struct ClassGeometry {
    centers: Vec<Vec<f64>>,
    directions: Vec<Vec<f64>>,
}

fn geometry(cfg: &SynthConfig) -> ClassGeometry {
    let mut rng = SplitMix64::new(derive_seed(cfg.seed, &[0]));
    let mut centers = vec![vec![0.0; cfg.d]];
    let mut directions = vec![vec![0.0; cfg.d]];
    for _ in 1..CLASS_NAMES.len() {
        centers.push((0..cfg.d).map(|_| 4.0 * rng.next_normal()).collect());
        let u: Vec<f64> = (0..cfg.d).map(|_| rng.next_normal()).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        directions.push(u.iter().map(|v| v / norm).collect());
    }
    ClassGeometry { centers, directions }
}

fn image(cfg: &SynthConfig, geo: &ClassGeometry, image_id: String, seed: u64, degraded: bool) -> SynthImage {
    let mut rng = SplitMix64::new(seed);
    let eps = if degraded { rng.next_f64() } else { 0.0 };
    let (w, h) = (cfg.width, cfg.height);
    let label: Vec<u8> = (0..h).flat_map(|y| (0..w).map(move |_| band(y, h))).collect();
    let mut pred = label.clone();
    for c in 1..CLASS_NAMES.len() as u8 {
        let mut idx: Vec<usize> = (0..label.len()).filter(|&i| label[i] == c).collect();
        let k = ((eps * idx.len() as f64).round() as usize).min(idx.len());
        rng.partial_shuffle(&mut idx, k);
        for &i in &idx[..k] {
            pred[i] = 0;
        }
    }
    let mut traces = Vec::with_capacity(label.len() * cfg.d);
    for &c in &label {
        let (center, dir) = (&geo.centers[c as usize], &geo.directions[c as usize]);
        for j in 0..cfg.d {
            traces.push((center[j] + rng.next_normal() + eps * cfg.shift * dir[j]) as f32);
        }
    }
    SynthImage { image_id, eps, label, pred, traces }
}

pub fn generate_images(cfg: &SynthConfig) -> (Vec<SynthImage>, Vec<SynthImage>) {
    let geo = geometry(cfg);
    let train = (0..cfg.n_train).map(|i| image(cfg, &geo, format!("train_{i:04}"), derive_seed(cfg.seed, &[1, i as u64]), false)).collect();
    let test = (0..cfg.n_test).map(|i| image(cfg, &geo, format!("test_{i:04}"), derive_seed(cfg.seed, &[2, i as u64]), true)).collect();
    (train, test)
}

fn write_split(dir: &Path, split: &str, cfg: &SynthConfig, images: &[SynthImage]) -> Result<Manifest, PipelineError> {
    let mut entries = Vec::new();
    for img in images {
        let rel = |suffix: &str| format!("{split}/{}.{suffix}", img.image_id);
        let atb = AtTensorFile::new(cfg.width, cfg.height, cfg.d as u32, img.traces.clone())
            .map_err(|e| PipelineError::Data(format!("synthetic tensor: {e}")))?;
        write_file(&dir.join(rel("atb")), &write_atb(&atb))?;
        write_file(&dir.join(rel("pred.pgm")), &encode_pgm(cfg.width, cfg.height, &img.pred))?;
        write_file(&dir.join(rel("label.pgm")), &encode_pgm(cfg.width, cfg.height, &img.label))?;
        entries.push(ManifestEntry {
            image_id: img.image_id.clone(),
            at_path: rel("atb"),
            pred_path: rel("pred.pgm"),
            label_path: Some(rel("label.pgm")),
            width: cfg.width,
            height: cfg.height,
        });
    }
    let classes = CLASS_NAMES.iter().enumerate().map(|(i, n)| ClassDecl { id: ClassId(i as u8), name: n.to_string() }).collect();
    let group = ClassGroup::new(GROUP_NAME, vec![ClassId(1), ClassId(2)]).expect("static group");
    let m = Manifest::new(classes, vec![group], entries).map_err(|e| PipelineError::Data(format!("synthetic manifest: {e}")))?;
    write_file(&dir.join(format!("{split}.json")), write_manifest(&m).as_bytes())?;
    Ok(m)
}

/// Writes `train.json`, `test.json`, their files, and `truth.csv`
/// (`image_id,eps`) for the test split.
pub fn generate(dir: &Path, cfg: &SynthConfig) -> Result<(), PipelineError> {
    if cfg.height < 4 || cfg.width == 0 || cfg.d == 0 {
        return Err(PipelineError::Data("synthetic images need width >= 1, height >= 4 and d >= 1".into()));
    }
    let (train, test) = generate_images(cfg);
    write_split(dir, "train", cfg, &train)?;
    write_split(dir, "test", cfg, &test)?;
    let mut truth = String::from("image_id,eps\n");
    for img in &test {
        truth.push_str(&format!("{},{}\n", img.image_id, img.eps));
    }
    write_file(&dir.join("truth.csv"), truth.as_bytes())
}
